"""MDMA two-source cooperative relay network: closed-form analysis and simulation.

Configs are plain dicts with the same shape as the CLI's JSON config files;
``None`` means the default geometry and system parameters.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable, Mapping, Sequence

from . import _core
from ._core import ConfigError, GeometryError, MdmaError, TieError

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "GeometryError",
    "MdmaError",
    "TieError",
    "analyze",
    "default_config",
    "dump_chain",
    "relay_sum_cdf",
    "simulate",
    "sweep",
    "validate",
]


def _cfg(config: Mapping[str, Any] | None) -> str:
    return "" if config is None else json.dumps(config, allow_nan=True)


def default_config() -> dict:
    return json.loads(_core.default_config())


def analyze(config=None, *, perturb_ties=False, numerical=False) -> dict:
    """Closed-form step outages, overall outage, slot cost and efficiency."""
    return _core.analyze(_cfg(config), perturb_ties, numerical)


def dump_chain(config=None, *, perturb_ties=False, literal_chain=False) -> dict:
    return json.loads(_core.dump_chain(_cfg(config), perturb_ties, literal_chain))


def simulate(scheme="mdma", config=None, *, trials=1_000_000, seed=1, threads=0, cooperation=True,
             trace_cap=0) -> dict:
    """Monte Carlo estimate. With ``trace_cap`` > 0 the first events are
    returned under ``"trace"`` as a list of CSV row dicts."""
    summary, trace = _core.simulate(scheme, _cfg(config), trials, seed, threads, cooperation, trace_cap)
    out = json.loads(summary)
    if trace_cap:
        out["trace"] = list(csv.DictReader(io.StringIO(trace)))
    return out


def sweep(parameter="power_dbm", values: Iterable[float] = (), schemes: Sequence[str] = ("mdma",), *,
          trials=1_000_000, seed=1, config=None, analytic_only=False, threads=0) -> tuple[list[dict], dict]:
    """Rows (as CSV string fields) and the manifest."""
    spec = {"parameter": parameter, "values": list(values), "schemes": list(schemes), "trials": trials,
            "seed": seed}
    text, manifest = _core.sweep(json.dumps(spec), _cfg(config), analytic_only, threads)
    return list(csv.DictReader(io.StringIO(text))), json.loads(manifest)


def validate(config=None, *, trials=1_000_000, seed=1, threads=0) -> dict:
    return json.loads(_core.validate(_cfg(config), trials, seed, threads))


def relay_sum_cdf(gates: Sequence[tuple[float, float]], x: Sequence[float], *, perturb_ties=False) -> list[float]:
    """Pr{relay sum <= x, decode set nonempty} for (gate probability, rate) pairs."""
    return _core.relay_sum_cdf(list(gates), list(x), perturb_ties)
