"""Run configuration: TOML ingestion and object construction.

A run file is a single TOML document with nested tables; every command reads
the same schema and uses the parts it needs.  Forcing is always given as
trigonometric-polynomial coefficients so its sup norm and transforms are
exact, never as opaque code.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .geometry import PuncturedBall, SingularFieldParams, singular_example_system
from .system import DelaySystem, linear_system
from .trigpoly import TrigPoly


@dataclass
class RunConfig:
    """Validated configuration with the constructed problem objects."""

    raw: dict
    system: DelaySystem
    domain: Optional[PuncturedBall]
    euler_char: Optional[int]
    degree: int
    budget: int
    seed: int
    nodes: int
    boundary_samples: int
    pair_samples: int
    check_poincare: bool
    scan: Optional[tuple]


def load_config(path):
    with open(path, "rb") as handle:
        return tomllib.load(handle)


def _require(table, key, where):
    if key not in table:
        raise ConfigError(f"missing '{key}' in [{where}]")
    return table[key]


def _matrix(value, where):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"[{where}] must be a square matrix")
    return arr


def _forcing_poly(raw, period, dim):
    table = raw.get("forcing")
    if table is None:
        return None
    amplitude = float(table.get("amplitude", 1.0))
    if amplitude < 0:
        raise ConfigError("forcing amplitude must be nonnegative")
    constant = np.asarray(table.get("constant", np.zeros(dim)), dtype=float)
    cos_rows = [np.asarray(r, dtype=float) for r in table.get("cos", [])]
    sin_rows = [np.asarray(r, dtype=float) for r in table.get("sin", [])]
    for row in [constant, *cos_rows, *sin_rows]:
        if row.shape != (dim,):
            raise ConfigError(f"forcing coefficient rows must have length {dim}")
    poly = TrigPoly.from_harmonics(period, constant, cos_rows, sin_rows)
    return amplitude * poly


def _build_domain(raw, dim, centers_hint=None):
    table = raw.get("domain")
    if table is None:
        return None, None
    chi = table.get("chi")
    if "radius" not in table:
        if chi is None:
            raise ConfigError("[domain] needs a radius or a manual chi")
        return None, int(chi)
    radius = float(table["radius"])
    centers = table.get("centers", centers_hint)
    if centers is None or len(centers) == 0:
        dom = PuncturedBall.ball(dim, radius)
    else:
        centers = np.asarray(centers, dtype=float).reshape(-1, dim)
        if "hole_radii" in table:
            radii = np.asarray(table["hole_radii"], dtype=float)
            dom = PuncturedBall(dim, radius, centers, radii)
        else:
            eta = float(_require(table, "hole_radius", "domain"))
            dom = PuncturedBall.with_holes(dim, radius, centers, eta)
    euler = int(chi) if chi is not None else dom.euler_characteristic()
    return dom, euler


def _build_system(raw, domain):
    table = raw.get("system")
    if table is None:
        raise ConfigError("missing [system] table")
    dyn = raw.get("dynamics", {})
    tau = float(dyn.get("tau", 0.0))
    period = float(_require(dyn, "period", "dynamics"))
    kind = _require(table, "kind", "system")

    if kind == "linear":
        A = _matrix(_require(table, "A", "system"), "system.A")
        B = _matrix(table.get("B", np.zeros_like(A)), "system.B")
        forcing = _forcing_poly(raw, period, A.shape[0])
        return linear_system(A, B, tau, period, forcing=forcing, domain=domain)

    if kind == "singular":
        centers = np.asarray(_require(table, "centers", "system"), dtype=float)
        if centers.ndim != 2:
            raise ConfigError("[system] centers must be a list of vectors")
        count = centers.shape[0]
        params = SingularFieldParams(
            damping=float(table.get("damping", 1.0)),
            weights=tuple(table.get("weights", [1.0] * count)),
            exponents=tuple(table.get("exponents", [3.0] * count)),
            centers=centers,
            undelayed_terms=int(table.get("undelayed_terms", 0)),
        )
        if domain is None:
            raise ConfigError("the singular system needs a [domain] with geometry")
        forcing = _forcing_poly(raw, period, params.dim)
        return singular_example_system(params, domain, tau, period, forcing=forcing)

    if kind == "plugin":
        target = _require(table, "target", "system")
        if ":" not in target:
            raise ConfigError("[system] plugin target must look like 'module:function'")
        mod_name, fn_name = target.split(":", 1)
        builder = getattr(importlib.import_module(mod_name), fn_name)
        sys = builder(raw)
        if not isinstance(sys, DelaySystem):
            raise ConfigError("plugin builder must return a DelaySystem")
        if domain is not None and sys.domain is None:
            sys.domain = domain
        return sys

    raise ConfigError(f"unknown system kind '{kind}'")


def default_degree(sys, forcing_degree=0, override=0):
    """Truncation degree: linear kernels live below the scan limit, nonlinear
    harmonics decay but need headroom, and the forcing must be representable."""
    from .linear_analysis import truncation_limit

    k0 = truncation_limit(sys.linear_pair())
    degree = max(k0 + 4, 8, forcing_degree)
    if override:
        degree = max(int(override), forcing_degree)
    return degree


def build_run(raw, seed_override=None):
    """Construct every object a command might need from a parsed config."""
    sys_table = raw.get("system", {})
    dim_hint = None
    if sys_table.get("kind") == "singular":
        centers = np.asarray(sys_table.get("centers", []), dtype=float)
        if centers.ndim == 2:
            dim_hint = centers.shape[1]
    elif sys_table.get("kind") == "linear":
        dim_hint = _matrix(_require(sys_table, "A", "system"), "system.A").shape[0]

    centers_hint = sys_table.get("centers") if sys_table.get("kind") == "singular" else None
    domain, euler = _build_domain(raw, dim_hint or 1, centers_hint)
    system = _build_system(raw, domain)
    if euler is None and domain is not None:
        euler = domain.euler_characteristic()

    solver_table = raw.get("solver", {})
    integrator_table = raw.get("integrator", {})
    run_table = raw.get("run", {})
    forcing_degree = system.forcing.degree if isinstance(system.forcing, TrigPoly) else 0
    degree = default_degree(system, forcing_degree, int(solver_table.get("degree", 0)))
    seed = int(run_table.get("seed", 0))
    if seed_override is not None:
        seed = int(seed_override)

    scan = None
    scan_table = raw.get("scan")
    if scan_table is not None:
        periods = scan_table.get("periods")
        if periods is None or len(periods) != 2:
            raise ConfigError("[scan] needs periods = [low, high]")
        scan = (float(periods[0]), float(periods[1]), int(scan_table.get("steps", 120)))

    return RunConfig(
        raw=raw,
        system=system,
        domain=domain,
        euler_char=euler,
        degree=degree,
        budget=int(solver_table.get("budget", 32)),
        seed=seed,
        nodes=int(integrator_table.get("nodes", 8)),
        boundary_samples=int(run_table.get("boundary_samples", 2048)),
        pair_samples=int(run_table.get("pair_samples", 2048)),
        check_poincare=bool(integrator_table.get("check_poincare", True)),
        scan=scan,
    )
