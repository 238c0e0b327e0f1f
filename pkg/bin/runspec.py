"""Run configuration: defaults, an optional JSON config file validated against a
Draft-07 schema, and command-line flags, later layers winning.
"""
import json
import logging
import os
from dataclasses import dataclass, field as dc_field, fields
from typing import List, Optional

import jsonschema

from decoding import ALGORITHMS, Arithmetic
from errors import ConfigError, InvalidConfig

logger = logging.getLogger(__name__)

SEED_ENV = "NBLDPC_SEED"
DRAFT7 = "http://json-schema.org/draft-07/schema#"

COMMANDS = ('gen', 'simulate', 'bench', 'analyze')

# Per-command defaults layered over the RunSpec field defaults. Benchmarks run a fixed
# number of iterations.
COMMAND_DEFAULTS = {
    "bench": {"workers": [1, 2, 4], "early_stop": False, "ebn0": [3.0], "frames": 256},
}

RUNSPEC_SCHEMA = {
    "$schema": DRAFT7,
    "title": "nbldpc run configuration",
    "type": "object",
    "additionalProperties": False,
    "definitions": {
        "count": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 2, "maximum": 8},
    },
    "properties": {
        "code": {"type": "string"},
        "toy": {"type": "boolean"},
        "n": {"$ref": "#/definitions/count"},
        "m": {"$ref": "#/definitions/count"},
        "dc": {"$ref": "#/definitions/count"},
        "dv": {"$ref": "#/definitions/count"},
        "q": {"$ref": "#/definitions/q"},
        "poly": {"type": "integer", "minimum": 4},
        "algorithm": {"enum": list(ALGORITHMS)},
        "algorithms": {"type": "array", "items": {"enum": list(ALGORITHMS)}, "minItems": 1},
        "arithmetic": {"enum": [a.value for a in Arithmetic]},
        "max_iters": {"$ref": "#/definitions/count"},
        "early_stop": {"type": "boolean"},
        "ebn0": {"type": "array", "items": {"type": "number"}},
        "frames": {"$ref": "#/definitions/count"},
        "workers": {"type": "array", "items": {"$ref": "#/definitions/count"}, "minItems": 1},
        "executor": {"enum": ["process", "thread"]},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "noiseless": {"type": "boolean"},
        "channel_scale": {"type": "number", "exclusiveMinimum": 0},
        "llr_scale": {"type": "number", "exclusiveMinimum": 0},
        "qs": {"type": "array", "items": {"$ref": "#/definitions/q"}, "minItems": 1},
        "shape": {"enum": ["C1", "C2", "C3"]},
    },
}


@dataclass
class RunSpec:
    command: str
    code: Optional[str] = None
    toy: bool = False
    n: int = 16
    m: int = 8
    dc: int = 4
    dv: int = 2
    q: int = 4
    poly: Optional[int] = None
    algorithm: str = 'fft-spa'
    algorithms: List[str] = dc_field(default_factory=lambda: list(ALGORITHMS))
    arithmetic: str = 'f64'
    max_iters: int = 10
    early_stop: bool = True
    ebn0: List[float] = dc_field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    frames: int = 100
    workers: List[int] = dc_field(default_factory=lambda: [1])
    executor: str = 'process'
    seed: Optional[int] = None
    output: Optional[str] = None
    noiseless: bool = False
    channel_scale: Optional[float] = None
    llr_scale: Optional[float] = None
    qs: List[int] = dc_field(default_factory=lambda: list(range(2, 9)))
    shape: str = 'C3'
    # gen: print H in power notation
    show: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise InvalidConfig(f"unknown command {self.command!r}")
        if self.code is not None and not os.path.exists(self.code):
            raise InvalidConfig(f"code file not found: {self.code}")
        if self.command == 'simulate' and not self.ebn0:
            raise InvalidConfig("the E_b/N_0 grid is empty")
        if self.command == 'bench' and not self.workers:
            raise InvalidConfig("no worker counts to benchmark")
        if self.command == 'simulate' and len(self.workers) != 1:
            raise InvalidConfig(f"simulate runs on one worker count, got {self.workers}")
        if self.frames < 1 or self.max_iters < 1 or min(self.workers, default=1) < 1:
            raise InvalidConfig("frames, max_iters and workers must be >= 1")
        Arithmetic.parse(self.arithmetic)
        return self


def validate_config(data):
    """Returns the list of schema violations as 'path: message' strings."""
    validator = jsonschema.Draft7Validator(RUNSPEC_SCHEMA)
    problems = []
    for error in sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.path]):
        where = "/".join(str(p) for p in error.path) or "<root>"
        problems.append(f"{where}: {error.message}")
    return problems


def load_config(path):
    logger.info("reading config %s", path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None

    problems = validate_config(data)
    if problems:
        raise ConfigError(f"{path} does not match the run configuration schema:\n  - "
                          + "\n  - ".join(problems))
    return data


def default_seed(environ=None):
    environ = os.environ if environ is None else environ
    value = environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise InvalidConfig(f"{SEED_ENV} must be an integer, got {value!r}") from None


def build_runspec(command, config=None, overrides=None, environ=None):
    """Defaults < command defaults < config file values < overrides.

    Overrides are the command-line flags; None means the flag was not given.
    """
    names = {f.name for f in fields(RunSpec)} - {'command'}
    values = {}
    for layer in (COMMAND_DEFAULTS.get(command, {}), config or {}, overrides or {}):
        for key, value in layer.items():
            if key in names and value is not None:
                values[key] = value
    spec = RunSpec(command=command, **values)
    if spec.seed is None:
        spec.seed = default_seed(environ)
    return spec.validate()
