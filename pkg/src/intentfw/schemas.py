"""JSON Schemas for documents accepted from external agent backends.

Agent output is re-validated against these before anything downstream sees
it; a document that fails here is rejected outright.
"""

from .ir import ACTIONS, DIRECTIONS, ENDPOINT_KINDS, PROTOCOLS, WEEKDAYS

_PORT = {"type": "string", "pattern": "^[0-9]{1,5}(-[0-9]{1,5})?$"}
_HHMM = {"type": "string", "pattern": "^[0-9]{1,2}:[0-9]{2}$"}

_ENDPOINT = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(ENDPOINT_KINDS)},
        "value": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_WINDOW = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "days": {"type": "array", "items": {"enum": list(WEEKDAYS)}, "minItems": 1},
        "start": _HHMM,
        "end": _HHMM,
    },
    "required": ["name", "days", "start", "end"],
    "additionalProperties": False,
}

_STRINGS = {"type": "array", "items": {"type": "string"}}
_ENDPOINTS = {"type": "array", "items": _ENDPOINT}

_CLAUSE = {
    "type": "object",
    "properties": {
        "action": {"enum": list(ACTIONS)},
        "sources": _ENDPOINTS,
        "destinations": _ENDPOINTS,
        "source_zones": _STRINGS,
        "destination_zones": _STRINGS,
        "protocol": {"enum": list(PROTOCOLS)},
        "ports": {"type": "array", "items": _PORT},
        "direction": {"enum": list(DIRECTIONS)},
        "schedule": _WINDOW,
        "text": {"type": "string"},
        "unresolved": _STRINGS,
    },
    "required": ["action", "sources", "destinations", "source_zones", "destination_zones", "protocol", "direction"],
    "additionalProperties": False,
}

RESOLVER_OUTPUT_SCHEMA = {
    "type": "object",
    "properties": {"clauses": {"type": "array", "items": _CLAUSE}},
    "required": ["clauses"],
    "additionalProperties": False,
}

_RULE = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_-]{1,63}$"},
        "name": {"type": "string"},
        "action": {"enum": list(ACTIONS)},
        "protocol": {"enum": list(PROTOCOLS)},
        "sources": _ENDPOINTS,
        "destinations": _ENDPOINTS,
        "source_zones": _STRINGS,
        "destination_zones": _STRINGS,
        "direction": {"enum": list(DIRECTIONS)},
        "priority": {"type": "integer", "minimum": 1, "maximum": 65535},
        "logging": {"type": "boolean"},
        "ports": {"type": "array", "items": _PORT},
        "application": {"type": "string"},
        "schedule": _WINDOW,
        "raw_policy": {"type": "string"},
        "ambiguities": _STRINGS,
    },
    "required": [
        "id", "name", "action", "protocol", "sources", "destinations",
        "source_zones", "destination_zones", "direction", "priority", "logging",
    ],
    "additionalProperties": False,
}

BUILDER_OUTPUT_SCHEMA = {
    "type": "object",
    "properties": {
        "context_id": {"type": "string"},
        "rules": {"type": "array", "items": _RULE},
    },
    "required": ["context_id", "rules"],
    "additionalProperties": False,
}

AGENT_SCHEMAS = {"resolver": RESOLVER_OUTPUT_SCHEMA, "builder": BUILDER_OUTPUT_SCHEMA}
