import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ALL_MODELS, chain_grid, random_field
from hillnls.classical import SigmaModel, solve_fundamental
from hillnls.grid import Grid, WaveField, gaussian, relative_difference
from hillnls.oracles import crank_nicolson_linear, gaussian_exact
from hillnls.propagator import (
    FactorizationKind as K,
    FactorizationUndefined,
    apply_korotyaev,
    apply_mdfm,
    apply_mdmdfm,
    apply_quadratic_phase,
    defined_kinds,
    flow_grid,
    harmonic_flow,
    propagate,
    pullback,
)

G = Grid(1, 256, 16.0)


def free_gaussian(t, x):
    return (1 + 1j * t) ** -0.5 * np.exp(-x**2 / (2 * (1 + 1j * t)))


def test_t0_is_identity(solutions):
    u = random_field(G, np.random.default_rng(0))
    for sol in solutions.values():
        assert np.array_equal(propagate(sol, 0.0, u).samples, u.samples)
        assert np.array_equal(pullback(sol, 0.0, u).samples, u.samples)
        out = apply_korotyaev(sol, 0.0, u)
        assert relative_difference(out, u) < 1e-14
        out = apply_mdmdfm(sol, 0.0, u)
        assert relative_difference(out, u) < 1e-14


@pytest.mark.parametrize("chain", [apply_korotyaev, apply_mdfm])
def test_zero_model_free_gaussian(solutions, chain):
    out = chain(solutions["zero"], 1.0, gaussian(G))
    ref = WaveField(free_gaussian(1.0, G.nodes()), G)
    assert relative_difference(out, ref) < 1e-8


def test_zero_model_pullback_is_backward_free_flow(solutions):
    out = pullback(solutions["zero"], 1.0, gaussian(G))
    ref = WaveField(free_gaussian(-1.0, G.nodes()), G)
    assert relative_difference(out, ref) < 1e-8


def test_korotyaev_constant_negative_vs_gaussian_exact(solutions):
    sol = solutions["constant-negative"]
    g = Grid(1, 256, 24.0)
    out = apply_korotyaev(sol, 1.0, gaussian(g))
    assert relative_difference(out, gaussian_exact(sol, 1.0, 1.0, g)) < 1e-6


def test_quadratic_phase_coefficients_zero_model(solutions):
    g = chain_grid(solutions["zero"], 2.0)
    u = random_field(g, np.random.default_rng(2))
    out = apply_quadratic_phase(solutions["zero"], 2.0, u)
    ref = WaveField(free_gaussian(2.0, G.nodes()), G)
    assert relative_difference(apply_quadratic_phase(solutions["zero"], 2.0, gaussian(G)), ref) < 1e-10
    assert relative_difference(out, apply_mdfm(solutions["zero"], 2.0, u)) < 1e-10


def test_quadratic_phase_harmonic_quarter_period(solutions):
    sol = solutions["constant-positive"]
    out = apply_quadratic_phase(sol, math.pi / 4, gaussian(G, width=0.8))
    assert relative_difference(out, gaussian_exact(sol, math.pi / 4, 0.8, G)) < 1e-6


def test_quadratic_phase_undefined_at_zero():
    sol = solve_fundamental(SigmaModel.zero(), 1.0)
    with pytest.raises(FactorizationUndefined):
        apply_quadratic_phase(sol, 1e-10, gaussian(G))


@pytest.mark.parametrize("name", list(ALL_MODELS))
def test_chain_pairs_agree_on_random_fields(solutions, name):
    sol = solutions[name]
    rng = np.random.default_rng(11)
    for t in (0.5, 1.3, 3.0):
        g = chain_grid(sol, t)
        u = random_field(g, rng)
        outs = {k: propagate(sol, t, u, k) for k in defined_kinds(sol, t)}
        assert K.MDMDFM in outs
        ks = list(outs)
        for i, a in enumerate(ks):
            for b in ks[i + 1:]:
                tol = 1e-9 if t < 2 else 1e-8
                assert relative_difference(outs[a], outs[b]) < tol, (name, t, a, b)


@pytest.mark.parametrize("name", list(ALL_MODELS))
def test_norm_preserved_at_t3(solutions, name):
    sol = solutions[name]
    g = chain_grid(sol, 3.0)
    u = random_field(g, np.random.default_rng(4))
    for k in defined_kinds(sol, 3.0):
        out = propagate(sol, 3.0, u, k, native=True)
        assert abs(out.norm() / u.norm() - 1) < 1e-10


@given(t=st.floats(0.0, 30.0))
def test_mdmdfm_harmonic_ground_state(t):
    sol = _harmonic()
    out = apply_mdmdfm(sol, t, gaussian(G))
    ref = WaveField(np.exp(-0.5j * t) * np.exp(-G.nodes() ** 2 / 2), G)
    assert relative_difference(out, ref) < 1e-7


_CACHE = {}


def _harmonic():
    if "h" not in _CACHE:
        _CACHE["h"] = solve_fundamental(SigmaModel.constant(1.0), 30.0)
    return _CACHE["h"]


def test_mdfm_undefined_where_zeta2_vanishes(solutions):
    with pytest.raises(FactorizationUndefined):
        propagate(solutions["constant-positive"], math.pi, gaussian(G), K.MDFM)
    with pytest.raises(FactorizationUndefined):
        apply_mdfm(solutions["constant-positive"], math.pi, gaussian(G))


def test_mdmdfm_through_degenerate_angles(solutions):
    sol = solutions["constant-positive"]
    u = random_field(G, np.random.default_rng(6))
    for t in (math.pi / 2, math.pi, math.pi + 1e-9, 2 * math.pi - 1e-7):
        out = apply_mdmdfm(sol, t, u)
        back = apply_mdmdfm(sol, t, out, inverse=True)
        assert relative_difference(back, u) < 1e-10
    # a full period of the harmonic flow is the parity operator squared
    assert relative_difference(apply_mdmdfm(sol, 2 * math.pi, u), u * -1) < 1e-9


@pytest.mark.parametrize("t", [-7.0, -4.0, 4.0, 5.5, 10.0, 12.0])
def test_chains_agree_past_zeros(t):
    """Branch of the prefactor continued through zeros of zeta1 and zeta2, both time directions."""
    sol = solve_fundamental(SigmaModel.constant(1.0), 15.0)
    g = Grid(1, 1024, 24.0)
    u = gaussian(g, width=1.0, center=0.5, momentum=0.3)
    ref = apply_mdmdfm(sol, t, u)
    for k in defined_kinds(sol, t):
        assert relative_difference(propagate(sol, t, u, k), ref) < 1e-8, k


def test_chains_agree_past_zeros_2d():
    sol = solve_fundamental(SigmaModel.constant(1.0), 9.0)
    g = Grid(2, 128, 12.0)
    u = gaussian(g, center=0.5, momentum=0.3)
    for t in (4.0, 8.0):
        ref = apply_mdmdfm(sol, t, u)
        for k in (K.MDFM, K.QUADRATIC_PHASE):
            assert relative_difference(propagate(sol, t, u, k), ref) < 1e-8, (t, k)


def test_auto_near_zeta2_zero_matches_crank_nicolson(solutions):
    sol = solutions["constant-positive"]
    t = math.pi + 1e-9
    kinds = defined_kinds(sol, t)
    assert K.MDFM not in kinds and K.QUADRATIC_PHASE not in kinds
    u = gaussian(G, width=0.9, center=0.7, momentum=0.5)
    auto = propagate(sol, t, u)
    cn = crank_nicolson_linear(sol.model, 0.0, t, 2e-3, u)
    assert relative_difference(auto, cn) < 1e-4
    assert relative_difference(auto, propagate(sol, t, u, K.MDMDFM)) < 1e-8


@pytest.mark.parametrize("name", list(ALL_MODELS))
def test_round_trip(solutions, name):
    sol = solutions[name]
    g = chain_grid(sol, 2.0)
    u = random_field(g, np.random.default_rng(8))
    for k in [K.AUTO] + defined_kinds(sol, 2.0):
        back = pullback(sol, 2.0, propagate(sol, 2.0, u, k, native=True), k)
        assert relative_difference(back, u) < 1e-9, k


@pytest.mark.parametrize("name", ["zero", "inverse-square", "constant-positive"])
def test_group_property(solutions, name):
    sol = solutions[name]
    t1, t2 = 1.2, 2.7
    g = chain_grid(sol, t2)
    u = random_field(g, np.random.default_rng(9))
    direct = propagate(sol, t2, u)
    via = propagate(sol, t2, pullback(sol, t1, propagate(sol, t1, u)))
    assert relative_difference(direct, via) < 1e-7


@given(theta=st.floats(-7.0, 7.0))
def test_harmonic_flow_forms_agree(theta):
    u = random_field(G, np.random.default_rng(12))
    a = harmonic_flow(u, theta)
    b = harmonic_flow(u, theta, method="shear")
    from hillnls.grid import resample
    assert relative_difference(resample(a, G, 1.0), resample(b, G, 1.0)) < 1e-9


def test_harmonic_flow_rejects_unknown_method():
    with pytest.raises(ValueError):
        harmonic_flow(gaussian(G), 0.3, method="euler")


@pytest.mark.parametrize("model", [SigmaModel.zero(), SigmaModel.inverse_square(0.15),
                                   SigmaModel.smooth_decay(0.15), SigmaModel.constant(-1.0)])
def test_dispersive_bound(model):
    sol = solve_fundamental(model, 100.0)
    g = Grid(1, 64, 8.0)
    worst = 0.0
    for t in np.geomspace(1, 100 if model.value >= 0 or model.lam > 0 else 20, 25):
        z2 = abs(sol(t)[2])
        for w in (0.5, 1.0, 2.0, 4.0):
            v = gaussian_exact(sol, t, w, g)
            l1 = w * math.sqrt(2 * math.pi)
            worst = max(worst, np.max(np.abs(v.samples)) * z2**0.5 / l1)
    assert worst <= (2 * math.pi) ** -0.5 * (1 + 1e-9)


def test_flow_grid_covers_flow(solutions):
    g = flow_grid(solutions["constant-negative"], 3.0, 4.0)
    assert g.L >= 4.0 * math.cosh(3.0)
    assert math.pi * g.N / (2 * g.L) >= 4.0 * math.cosh(3.0)
