#!/usr/bin/env python3
"""Derive config/schema.json from a default config.json written by `ranctl run`."""
import json
import sys

ENUMS = {
    "controller": ["baseline", "agentic"],
    "provider.kind": ["stub", "timeout", "invalid", "http"],
    "scenario.phases[].name": ["normal", "emergency", "recovery"],
}
PLAYS = ["qoe_first", "load_first", "energy_first"]
PHASES = ENUMS["scenario.phases[].name"]


def node(value, path):
    if path in ENUMS:
        return {"type": "string", "enum": ENUMS[path]}
    if path == "intent.phase_overrides":
        return {
            "type": "object",
            "propertyNames": {"enum": PHASES},
            "additionalProperties": {"type": "string", "enum": PLAYS},
        }
    if path == "guardrails.fields":
        field = node(next(iter(value.values())), path + ".*")
        return {"type": "object", "propertyNames": {"enum": sorted(value)}, "additionalProperties": field}
    if isinstance(value, bool):
        return {"type": "boolean"}
    if isinstance(value, int):
        return {"type": "integer"}
    if isinstance(value, float):
        return {"type": "number"}
    if isinstance(value, str):
        return {"type": "string"}
    if isinstance(value, list):
        return {"type": "array", "items": node(value[0], path + "[]")}
    props = {k: node(v, f"{path}.{k}" if path else k) for k, v in value.items()}
    out = {"type": "object", "additionalProperties": False, "properties": props}
    if path == "scenario.phases[]":
        out["required"] = list(props)
    return out


def main():
    cfg = json.load(open(sys.argv[1]))
    schema = {"$schema": "https://json-schema.org/draft/2020-12/schema", "title": "ranctl run configuration"}
    schema.update(node(cfg, ""))
    json.dump(schema, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
