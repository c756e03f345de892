"""intentfw: natural-language firewall policy compiler with layered validation."""

__version__ = "0.1.0"
