"""Run configuration: one JSON file describing domains, functions, engine
budgets, and the list of checks and studies to execute.

Domain and function descriptions round-trip exactly through their
``to_config`` dictionaries. Parse failures raise ``ConfigError`` carrying
a line/column diagnostic when one is available.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .domains import ConvexDomain, domain_from_config
from .expr import CylFunction, DslError, function_from_config

CHECK_KINDS = (
    "poincare", "log_sobolev", "gradient_bound", "submultiplicative",
    "invariance", "decay", "positivity_contraction", "entropy",
    "factorization",
)

ENGINE_DEFAULTS = {
    "samples": 100_000,
    "mc_paths": 20_000,
    "mc_step": 2e-3,
    "grid_resolution": 200,
    "tail_mass": 1e-12,
    "cn_steps": 200,
}


class ConfigError(ValueError):
    """Configuration problem, with an optional line/column position."""

    def __init__(self, message: str, line: int | None = None,
                 col: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass
class RunConfig:
    seed: int
    output_dir: str
    domains: dict
    functions: dict
    engine: dict
    checks: list = field(default_factory=list)
    spectrum: dict = field(default_factory=dict)
    evolve: dict = field(default_factory=dict)
    converge: dict = field(default_factory=dict)

    def domain(self, name: str) -> ConvexDomain:
        try:
            return self.domains[name]
        except KeyError:
            raise ConfigError(f"unknown domain {name!r}") from None

    def function(self, name: str) -> CylFunction:
        try:
            return self.functions[name]
        except KeyError:
            raise ConfigError(f"unknown function {name!r}") from None

    def budget(self, key: str, check: dict | None = None):
        if check is not None and key in check:
            return check[key]
        return self.engine.get(key, ENGINE_DEFAULTS[key])


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON: {err.msg}", err.lineno, err.colno) \
            from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    domains = {}
    for name, cfg in raw.get("domains", {}).items():
        try:
            domains[name] = domain_from_config(cfg)
        except (ValueError, KeyError, TypeError) as err:
            raise ConfigError(f"domain {name!r}: {err}") from None
    functions = {}
    for name, cfg in raw.get("functions", {}).items():
        try:
            functions[name] = function_from_config(cfg)
        except DslError as err:
            raise ConfigError(f"function {name!r}: {err}") from None
        except (ValueError, KeyError, TypeError) as err:
            raise ConfigError(f"function {name!r}: {err}") from None

    checks = raw.get("checks", [])
    for i, check in enumerate(checks):
        kind = check.get("kind")
        if kind not in CHECK_KINDS:
            raise ConfigError(f"check {i}: unknown kind {kind!r}")
        for key in ("function", "function2"):
            if key in check and check[key] not in functions:
                raise ConfigError(f"check {i}: unknown function {check[key]!r}")
        dom_key = "base" if kind == "factorization" else "domain"
        name = check.get(dom_key)
        if name is None or name not in domains:
            raise ConfigError(f"check {i}: unknown domain {name!r}")
        fn = functions.get(check.get("function", ""))
        if fn is not None and kind != "factorization" \
                and fn.dim != domains[name].dim:
            raise ConfigError(
                f"check {i}: function dimension {fn.dim} does not match "
                f"domain dimension {domains[name].dim}")

    return RunConfig(
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "out")),
        domains=domains,
        functions=functions,
        engine=dict(raw.get("engine", {})),
        checks=checks,
        spectrum=dict(raw.get("spectrum", {})),
        evolve=dict(raw.get("evolve", {})),
        converge=dict(raw.get("converge", {})),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    return parse_config(text)


def default_config_text() -> str:
    """The bundled configuration exercising the canonical panel."""
    return resources.files("oulab").joinpath("data/default.json").read_text()


def load_default_config() -> RunConfig:
    return parse_config(default_config_text())
