"""Tiny helper: expose a dataclass config as argparse flags."""
from __future__ import annotations

import argparse
from dataclasses import MISSING, fields


def parse(cls, description: str = "", argv=None):
    p = argparse.ArgumentParser(description=description)
    for f in fields(cls):
        default = f.default if f.default is not MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, bool):
            p.add_argument(flag, action=argparse.BooleanOptionalAction, default=default)
        elif isinstance(default, (list, tuple)):
            kind = type(default[0]) if default else str
            p.add_argument(flag, nargs="*", type=kind, default=list(default))
        else:
            p.add_argument(flag, type=type(default) if default is not None else str, default=default)
    return cls(**vars(p.parse_args(argv)))
