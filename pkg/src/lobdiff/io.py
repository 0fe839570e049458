"""File formats: order-event CSV, path/price CSV, and JSON configs.

CSV files are UTF-8 with LF line endings and a fixed header; floats are
written with `repr`, so values round-trip exactly and identical inputs
produce byte-identical files. JSON documents are written canonically
(sorted keys, two-space indent) for the same reason. Config validation is
a small hand-rolled schema walk that reports every violation with a
JSONPath-style location, e.g. ``$.flow.lambda_limit: expected number``.
"""

import hashlib
import json

import numpy as np

from .book import ASK, BID, OrderEvent

__all__ = [
    "ConfigError",
    "read_events_csv",
    "write_events_csv",
    "write_queues_csv",
    "write_prices_csv",
    "write_grid_csv",
    "load_json",
    "write_json",
    "jsonable",
    "validate_schema",
    "sha256_hex",
]

EVENTS_HEADER = "time,side,delta"
QUEUES_HEADER = "time,q_bid,q_ask"
PRICES_HEADER = "time,price_ticks"

_SIDE_TO_LETTER = {BID: "b", ASK: "a"}
_LETTER_TO_SIDE = {"b": BID, "a": ASK}


class ConfigError(ValueError):
    """A config or data file failed validation; message lists locations."""


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_events_csv(path, events):
    """Write an order-event stream as `time,side,delta` rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(EVENTS_HEADER + "\n")
        for ev in events:
            fh.write(f"{_fmt(ev.time)},{_SIDE_TO_LETTER[ev.side]},{_fmt(ev.delta)}\n")


def read_events_csv(path):
    """Parse an order-event CSV into a list of OrderEvents.

    Malformed rows, unknown sides, and negative timestamps raise
    ConfigError naming the offending file line (the header is line 1).
    """
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != EVENTS_HEADER:
            raise ConfigError(
                f"{path}: line 1: expected header {EVENTS_HEADER!r}, got {header!r}"
            )
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ConfigError(
                    f"{path}: line {lineno}: expected 3 fields, got {len(parts)}"
                )
            try:
                t = float(parts[0])
                delta = float(parts[2])
            except ValueError:
                raise ConfigError(
                    f"{path}: line {lineno}: non-numeric time or delta"
                ) from None
            if t < 0:
                raise ConfigError(f"{path}: line {lineno}: negative timestamp {parts[0]}")
            side = _LETTER_TO_SIDE.get(parts[1])
            if side is None:
                raise ConfigError(
                    f"{path}: line {lineno}: side must be 'b' or 'a', got {parts[1]!r}"
                )
            events.append(OrderEvent(t, side, delta))
    return events


def write_queues_csv(path, regulated):
    """Write a RegulatedPath as `time,q_bid,q_ask` rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(QUEUES_HEADER + "\n")
        for t, qb, qa in regulated.samples:
            fh.write(f"{_fmt(t)},{_fmt(qb)},{_fmt(qa)}\n")


def write_prices_csv(path, price_path):
    """Write a PricePath as `time,price_ticks` rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PRICES_HEADER + "\n")
        for (t, p), ticks in zip(price_path.steps, price_path.price_ticks):
            fh.write(f"{_fmt(t)},{int(ticks)}\n")


def write_grid_csv(path, header, rows):
    """Write a generic numeric table with the given comma-joined header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# JSON documents


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def write_json(path, obj):
    """Write a JSON document canonically: sorted keys, LF, trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def sha256_hex(path):
    """Hex digest of a file's raw bytes, for provenance stamps."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Schema validation

_TYPE_CHECKS = {
    "object": lambda v: isinstance(v, dict),
    "array": lambda v: isinstance(v, list),
    "string": lambda v: isinstance(v, str),
    "boolean": lambda v: isinstance(v, bool),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
}


def _walk(value, schema, path, errors):
    expected = schema.get("type")
    if expected is not None and not _TYPE_CHECKS[expected](value):
        errors.append(f"{path}: expected {expected}, got {type(value).__name__}")
        return
    if "enum" in schema and value not in schema["enum"]:
        choices = ", ".join(repr(c) for c in schema["enum"])
        errors.append(f"{path}: must be one of {choices}, got {value!r}")
        return
    if expected in ("number", "integer"):
        if "minimum" in schema and value < schema["minimum"]:
            errors.append(f"{path}: must be >= {schema['minimum']}, got {value}")
        if "exclusiveMinimum" in schema and value <= schema["exclusiveMinimum"]:
            errors.append(f"{path}: must be > {schema['exclusiveMinimum']}, got {value}")
        if "maximum" in schema and value > schema["maximum"]:
            errors.append(f"{path}: must be <= {schema['maximum']}, got {value}")
    if expected == "array":
        if "minItems" in schema and len(value) < schema["minItems"]:
            errors.append(
                f"{path}: needs at least {schema['minItems']} items, got {len(value)}"
            )
        item_schema = schema.get("items")
        if item_schema is not None:
            for i, item in enumerate(value):
                _walk(item, item_schema, f"{path}[{i}]", errors)
    if expected == "object":
        props = schema.get("properties", {})
        for key in schema.get("required", ()):
            if key not in value:
                errors.append(f"{path}.{key}: required key is missing")
        if not schema.get("open", False):
            for key in value:
                if key not in props:
                    errors.append(f"{path}.{key}: unknown key")
        for key, sub in props.items():
            if key in value:
                _walk(value[key], sub, f"{path}.{key}", errors)


def validate_schema(obj, schema, where="$"):
    """Check `obj` against a small schema dialect; raise listing every issue.

    The dialect covers what configs need: type, required/properties (closed
    by default, opt out with "open": true), enum, items/minItems, and
    numeric bounds. Errors carry JSONPath-style locations.
    """
    errors = []
    _walk(obj, schema, where, errors)
    if errors:
        raise ConfigError("\n".join(errors))
