"""Preset scenarios and the sectioned key-value run configuration.

A configuration is a nested mapping with the sections below.  Every key
has a default; overrides of unknown keys are rejected.  The equation is
nondimensional so no quantity carries units.

``[sigma]``
    ``kind`` one of zero, constant, inverse_square, smooth_decay, tabulated;
    ``value`` the constant or the coefficient k; ``path`` a two-column
    ``t,sigma`` CSV for tabulated models (relative to the config file).
``[nonlinearity]``
    ``nu``, ``mu`` couplings; ``rho_L``, ``rho_S`` exponents.  ``rho_L = 0``
    selects the threshold ``2 / (n (1 - lambda))``.
``[grid]``
    ``n`` dimension, ``N`` nodes per axis, ``L`` half-width of the box.
``[initial]``
    Gaussian ``width``, ``center``, ``momentum``; ``amplitude`` if nonzero,
    otherwise ``epsilon`` fixes ``||u0||_{g,0} + ||u0||_{0,g}`` with
    ``g = budget_gamma``.
``[time]``
    ``t_end``, ``dt``, ``method`` (strang, lens, exact), ``samples`` and
    ``spacing`` (log, linear) of the diagnostic times starting at
    ``t_first``; ``tol`` of the classical integrator.
``[diagnostics]``
    ``gamma``, ``alpha_holder``, ``r0``; Cauchy fit window
    ``window_lo..window_hi``; decay fit window ``decay_lo..decay_hi``.
``[expected]``
    Optional targets checked by ``run``; see :data:`EXPECTATION_KEYS`.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classical import SigmaModel, load_sigma_csv
from .diagnostics import DiagnosticsSpec, weighted_norms
from .grid import Grid, gaussian
from .nls import EvolutionConfig, NonlinearitySpec

__all__ = [
    "ConfigError",
    "Scenario",
    "DEFAULTS",
    "EXPECTATION_KEYS",
    "REGISTRY",
    "list_scenarios",
    "get_scenario",
    "merge",
    "apply_override",
    "build",
    "sigma_model",
    "diagnostic_times",
]


class ConfigError(ValueError):
    """Malformed configuration or override."""


DEFAULTS = {
    "sigma": {"kind": "zero", "value": 0.0, "path": ""},
    "nonlinearity": {"nu": 0.0, "mu": 0.0, "rho_L": 2.0, "rho_S": 3.0},
    "grid": {"n": 1, "N": 256, "L": 16.0},
    "initial": {"width": 1.0, "amplitude": 0.0, "epsilon": 0.05, "budget_gamma": 1.0,
                "center": 0.0, "momentum": 0.0},
    "time": {"t_end": 200.0, "dt": 4e-3, "method": "lens", "samples": 49, "spacing": "log",
             "t_first": 1.0, "tol": 1e-10},
    "diagnostics": {"gamma": 1.0, "alpha_holder": 0.2, "r0": 1.0, "window_lo": 10.0,
                    "window_hi": 100.0, "decay_lo": 10.0, "decay_hi": 200.0},
    "expected": {},
}

EXPECTATION_KEYS = {
    "decay_slope": "target slope of log ||u||_inf",
    "decay_against": "'t' or 'zeta2' (fit against log(1 + |zeta2|))",
    "decay_tol": "relative tolerance on decay_slope",
    "envelope_factor": "sup of (1+|zeta2|)**(n/2) ||u||_inf over [r0, t_end] within this factor of its value at r0",
    "envelope_slope_lo": "lower bound on the envelope's log-log slope over the last decade",
    "envelope_slope_hi": "upper bound on the same slope",
    "cauchy_slope_max": "corrected Linf Cauchy slope must not exceed this",
    "cauchy_gap": "uncorrected slope must exceed the corrected one by this much",
    "split_rate_tol": "relative tolerance of the remainder/main rate against -delta0 * alpha",
    "pe_drift_max": "maximal relative drift of the pseudo-energy norm",
}


@dataclass(frozen=True)
class Scenario:
    """A named preset: config overrides on top of :data:`DEFAULTS`.

    ``source`` states where the expected targets come from.
    """

    name: str
    description: str
    overrides: dict
    source: str = ""
    supported: bool = True

    def config(self) -> dict:
        return merge(DEFAULTS, self.overrides)


def merge(base: dict, over: dict) -> dict:
    """Section-wise merge; unknown sections or keys raise :class:`ConfigError`."""
    out = copy.deepcopy(base)
    for sec, vals in over.items():
        if sec not in out:
            raise ConfigError(f"unknown section [{sec}]")
        if not isinstance(vals, dict):
            raise ConfigError(f"section [{sec}] must be a table")
        for k, v in vals.items():
            if sec == "expected":
                if k not in EXPECTATION_KEYS:
                    raise ConfigError(f"unknown key expected.{k}")
            elif k not in out[sec]:
                raise ConfigError(f"unknown key {sec}.{k}")
            out[sec][k] = v
    return out


def _coerce(text: str, like):
    if isinstance(like, bool):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    try:
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return text


def apply_override(cfg: dict, item: str) -> dict:
    """Apply one ``section.key=value`` override, coercing to the default's type."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, text = item.split("=", 1)
    parts = key.strip().split(".")
    if len(parts) != 2:
        raise ConfigError(f"override key {key!r} must be section.key")
    sec, k = parts
    if sec not in cfg:
        raise ConfigError(f"unknown section [{sec}]")
    if sec == "expected":
        if k not in EXPECTATION_KEYS:
            raise ConfigError(f"unknown key expected.{k}")
        like = 0.0 if k != "decay_against" else ""
    elif k not in DEFAULTS[sec]:
        raise ConfigError(f"unknown key {sec}.{k}")
    else:
        like = DEFAULTS[sec][k]
    out = copy.deepcopy(cfg)
    out[sec][k] = _coerce(text.strip(), like)
    return out


def sigma_model(sec: dict, base_dir: Path | None = None) -> SigmaModel:
    kind = sec["kind"]
    try:
        if kind == "zero":
            return SigmaModel.zero()
        if kind == "constant":
            return SigmaModel.constant(float(sec["value"]))
        if kind == "inverse_square":
            return SigmaModel.inverse_square(float(sec["value"]))
        if kind == "smooth_decay":
            return SigmaModel.smooth_decay(float(sec["value"]))
        if kind == "tabulated":
            path = Path(sec["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return load_sigma_csv(path)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"[sigma]: {exc}") from None
    raise ConfigError(f"unknown sigma kind {kind!r}")


def diagnostic_times(sec: dict) -> list[float]:
    t_end, count, first = float(sec["t_end"]), int(sec["samples"]), float(sec["t_first"])
    if count < 2 or not 0 < first < t_end:
        raise ConfigError("[time] needs samples >= 2 and 0 < t_first < t_end")
    if sec["spacing"] == "log":
        ts = np.geomspace(first, t_end, count)
    elif sec["spacing"] == "linear":
        ts = np.linspace(first, t_end, count)
    else:
        raise ConfigError(f"unknown spacing {sec['spacing']!r}")
    ts[-1] = t_end
    return [float(t) for t in ts]


def build(cfg: dict, base_dir: Path | None = None) -> tuple[EvolutionConfig, DiagnosticsSpec]:
    """Turn a resolved configuration into solver and diagnostics inputs.

    Raises
    ------
    ConfigError
        For any invalid value.
    """
    try:
        model = sigma_model(cfg["sigma"], base_dir)
        g = cfg["grid"]
        grid = Grid(int(g["n"]), int(g["N"]), float(g["L"]))
        nl = dict(cfg["nonlinearity"])
        if float(nl["rho_L"]) == 0.0:
            nl["rho_L"] = 2.0 / (grid.n * (1.0 - model.lam))
        spec = NonlinearitySpec(float(nl["nu"]), float(nl["mu"]), float(nl["rho_L"]), float(nl["rho_S"]))
        ini = cfg["initial"]
        shape = gaussian(grid, float(ini["width"]), 1.0, float(ini["center"]), float(ini["momentum"]))
        amp = float(ini["amplitude"])
        if amp == 0.0:
            wn = weighted_norms(shape, float(ini["budget_gamma"]))
            amp = float(ini["epsilon"]) / (wn.h_gamma0 + wn.h_0gamma)
        u0 = shape * amp
        tm = cfg["time"]
        d = cfg["diagnostics"]
        evo = EvolutionConfig(model, spec, grid, u0, float(tm["t_end"]), float(tm["dt"]),
                              diagnostic_times(tm), float(d["r0"]), str(tm["method"]))
        dspec = DiagnosticsSpec(float(d["gamma"]), float(d["alpha_holder"]), float(d["r0"]),
                                (float(d["window_lo"]), float(d["window_hi"])), grid.n)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    return evo, dspec


_LAM15 = (1 - math.sqrt(0.4)) / 2
_LINEAR_LONG = {"time": {"method": "exact", "t_end": 1e4, "samples": 41, "dt": 1.0},
                "diagnostics": {"decay_lo": 1e2, "decay_hi": 1e4, "window_lo": 1e2, "window_hi": 1e3}}
_ENVELOPE = {"envelope_factor": 10.0, "envelope_slope_lo": -0.1, "envelope_slope_hi": 0.02}


def _lin(sigma: dict, extra: dict | None = None) -> dict:
    out = copy.deepcopy(_LINEAR_LONG)
    out["sigma"] = sigma
    for k, v in (extra or {}).items():
        out.setdefault(k, {}).update(v)
    return out


REGISTRY: dict[str, Scenario] = {s.name: s for s in [
    Scenario("free-linear", "sigma = 0, linear, Gaussian decay over t in [1e2, 1e4]",
             _lin({"kind": "zero"}, {"expected": {"decay_slope": -0.5, "decay_against": "t",
                                                    "decay_tol": 0.03, "pe_drift_max": 1e-6}}),
             "closed-form free Gaussian decay t**(-n/2)"),
    Scenario("free-short", "sigma = 0, short-range mu |u|**3 u, lens frame to t = 200",
             {"nonlinearity": {"mu": 1.0, "rho_S": 3.0},
              "expected": {"cauchy_slope_max": -0.2, **_ENVELOPE}},
             "short-range profiles converge without correction; envelope from the global decay bound"),
    Scenario("free-long", "sigma = 0, threshold cubic nu |u|**2 u, lens frame to t = 200",
             {"nonlinearity": {"nu": 1.0, "rho_L": 2.0}, "expected": dict(_ENVELOPE)},
             "global decay bound at the threshold power 2/n"),
    Scenario("inverse-square-k0-linear", "sigma = 0/(1+t^2), linear (same as free)",
             _lin({"kind": "inverse_square", "value": 0.0},
                  {"expected": {"decay_slope": -0.5, "decay_against": "t", "decay_tol": 0.03}}),
             "k = 0 gives lambda = 0 and free decay"),
    Scenario("inverse-square-k0-long", "sigma = 0/(1+t^2), threshold power 2/n",
             {"sigma": {"kind": "inverse_square", "value": 0.0},
              "nonlinearity": {"nu": 1.0, "rho_L": 0.0}, "expected": dict(_ENVELOPE)},
             "threshold power 2/(n(1-lambda)) with lambda = 0"),
    Scenario("inverse-square-k0.15-linear", "sigma = 0.15/(1+t^2), linear, slowed decay",
             _lin({"kind": "inverse_square", "value": 0.15},
                  {"expected": {"decay_slope": -(1 - _LAM15) / 2, "decay_against": "t",
                                "decay_tol": 0.05, "pe_drift_max": 1e-6}}),
             "weak dispersion t**(-n(1-lambda)/2), lambda = (1 - sqrt(1 - 4k))/2"),
    Scenario("inverse-square-k0.15-short", "sigma = 0.15/(1+t^2), mu |u|**3 u",
             {"sigma": {"kind": "inverse_square", "value": 0.15},
              "nonlinearity": {"mu": 1.0, "rho_S": 3.0}, "expected": dict(_ENVELOPE)},
             "rho_S = 3 exceeds the threshold 2/(1-lambda)"),
    Scenario("inverse-square-k0.15-long", "sigma = 0.15/(1+t^2), threshold power 2/(n(1-lambda))",
             {"sigma": {"kind": "inverse_square", "value": 0.15},
              "nonlinearity": {"nu": 1.0, "rho_L": 0.0}, "expected": dict(_ENVELOPE)},
             "threshold power from the model table; zeta1/zeta2 does not decay for this sigma, "
             "so no Cauchy expectation is attached"),
    Scenario("smooth-decay-k0.15-linear", "sigma with zeta1 = (1+t^2)^(lambda/2), linear",
             _lin({"kind": "smooth_decay", "value": 0.15},
                  {"expected": {"decay_slope": -(1 - _LAM15) / 2, "decay_against": "t",
                                "decay_tol": 0.05, "pe_drift_max": 1e-6}}),
             "zeta2 ~ t**(1-lambda) by the closed form"),
    Scenario("smooth-decay-k0.15-short", "smooth-decay sigma, mu |u|**3 u",
             {"sigma": {"kind": "smooth_decay", "value": 0.15},
              "nonlinearity": {"mu": 1.0, "rho_S": 3.0},
              "expected": {"cauchy_slope_max": -0.2, **_ENVELOPE}},
             "short-range profiles converge without correction"),
    Scenario("smooth-decay-k0.15-long", "smooth-decay sigma, nu |u|**2 u, modified scattering",
             {"sigma": {"kind": "smooth_decay", "value": 0.15},
              "nonlinearity": {"nu": 1.0, "rho_L": 2.0},
              "diagnostics": {"gamma": 1.5, "alpha_holder": 0.4},
              "expected": {"cauchy_slope_max": -0.2, "cauchy_gap": 0.3, "split_rate_tol": 0.3,
                           **_ENVELOPE}},
             "phase-corrected profiles converge; splitting remainder decays like |zeta1/zeta2|**alpha"),
    Scenario("constant-negative-linear", "sigma = -1, linear, decay against 1 + |sinh t|",
             {"sigma": {"kind": "constant", "value": -1.0},
              "time": {"method": "exact", "t_end": 12.0, "samples": 45, "spacing": "linear", "dt": 1.0},
              "diagnostics": {"decay_lo": 5.0, "decay_hi": 12.0, "window_lo": 5.0, "window_hi": 10.0},
              "expected": {"decay_slope": -0.5, "decay_against": "zeta2", "decay_tol": 0.03,
                           "pe_drift_max": 1e-6}},
             "repulsive decay (1 + |sinh t|)**(-n/2)"),
    Scenario("constant-negative-short", "sigma = -1, mu |u|**3 u, to t = 12",
             {"sigma": {"kind": "constant", "value": -1.0},
              "nonlinearity": {"mu": 1.0, "rho_S": 3.0},
              "time": {"t_end": 12.0, "samples": 45, "spacing": "linear", "dt": 1e-3},
              "diagnostics": {"decay_lo": 5.0, "decay_hi": 12.0, "window_lo": 5.0, "window_hi": 10.0},
              "expected": {"decay_slope": -0.5, "decay_against": "zeta2", "decay_tol": 0.03}},
             "any positive short-range power is admissible for sigma = -1"),
    Scenario("constant-negative-long", "sigma = -1 with a long-range term",
             {"sigma": {"kind": "constant", "value": -1.0}, "nonlinearity": {"nu": 1.0}},
             "the model table marks this combination as not covered", supported=False),
    Scenario("constant-positive-linear", "sigma = +1, linear, periodic (no dispersion)",
             {"sigma": {"kind": "constant", "value": 1.0},
              "time": {"method": "exact", "t_end": 20.0, "samples": 41, "spacing": "linear", "dt": 1.0},
              "diagnostics": {"decay_lo": 1.0, "decay_hi": 20.0, "window_lo": 1.0, "window_hi": 10.0},
              "expected": {"pe_drift_max": 1e-6}},
             "pseudo-energy conservation under the linear flow"),
]}


def list_scenarios(include_unsupported: bool = False) -> list[tuple[str, str]]:
    """Names and one-line descriptions of the runnable presets."""
    return [(s.name, s.description) for s in REGISTRY.values() if s.supported or include_unsupported]


def get_scenario(name: str) -> Scenario:
    try:
        s = REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}") from None
    if not s.supported:
        raise ConfigError(f"scenario {name!r} is not supported: {s.source}")
    return s
