"""JSON Schemas for every ``--format json`` report."""

import json
from functools import lru_cache
from importlib import resources

NAMES = ("protocol", "diagnostics", "check", "connections", "generate", "compose_summary", "compose_result")


@lru_cache(maxsize=None)
def load(name: str) -> dict:
    if name not in NAMES:
        raise KeyError(name)
    return json.loads(resources.files(__package__).joinpath(f"{name}.json").read_text(encoding="utf-8"))
