import math

import numpy as np
import pytest

from conftest import random_field
from hillnls.classical import SigmaModel
from hillnls.grid import Grid, WaveField, gaussian, relative_difference
from hillnls.oracles import ConvergenceError, crank_nicolson_linear, gaussian_exact
from hillnls.propagator import propagate

G = Grid(1, 256, 16.0)


def test_cn_identity():
    u = random_field(G, np.random.default_rng(0))
    assert crank_nicolson_linear(SigmaModel.constant(1.0), 0.7, 0.7, 0.1, u) is u


def test_cn_rejects_bad_input():
    with pytest.raises(ValueError):
        crank_nicolson_linear(SigmaModel.zero(), 0.0, 1.0, 0.0, gaussian(G))


def test_cn_free_gaussian_second_order():
    x = G.nodes()
    ref = WaveField((1 + 1j) ** -0.5 * np.exp(-x**2 / (2 * (1 + 1j))), G)
    errs = [relative_difference(crank_nicolson_linear(SigmaModel.zero(), 0, 1, dt, gaussian(G)), ref)
            for dt in (0.02, 0.01, 0.005)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.2)


@pytest.mark.parametrize("name", ["constant-negative", "inverse-square", "smooth-decay"])
def test_cn_against_factorization_order(solutions, name):
    sol = solutions[name]
    g = Grid(1, 256, 20.0)
    u = random_field(g, np.random.default_rng(1))
    ref = propagate(sol, 1.5, u)
    errs = [relative_difference(crank_nicolson_linear(sol.model, 0, 1.5, dt, u), ref)
            for dt in (0.02, 0.01, 0.005)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.2)


def test_cn_preserves_norm():
    u = random_field(G, np.random.default_rng(2))
    out = crank_nicolson_linear(SigmaModel.constant(1.0), 0, 2, 0.01, u)
    assert out.norm() == pytest.approx(u.norm(), rel=1e-11)


def test_cn_reports_nonconvergence():
    with pytest.raises(ConvergenceError):
        crank_nicolson_linear(SigmaModel.constant(1.0), 0, 0.1, 0.1, gaussian(G), rtol=1e-40)


def test_gaussian_exact_examples(solutions):
    x = G.nodes()
    for sol in solutions.values():
        out = gaussian_exact(sol, 0.0, 0.7, G)
        assert np.allclose(out.samples, np.exp(-x**2 / (2 * 0.49)), atol=1e-15)
    out = gaussian_exact(solutions["zero"], 1.0, 1.0, G)
    assert np.allclose(out.samples, (1 + 1j) ** -0.5 * np.exp(-x**2 / (2 * (1 + 1j))), atol=1e-14)
    for t in (0.3, math.pi, 7.0):
        out = gaussian_exact(solutions["constant-positive"], t, 1.0, G)
        assert np.allclose(np.abs(out.samples), np.exp(-x**2 / 2), atol=1e-12)
        assert np.allclose(out.samples, np.exp(-0.5j * t - x**2 / 2), atol=1e-12)
    with pytest.raises(ValueError):
        gaussian_exact(solutions["zero"], 1.0, 0.0, G)


@pytest.mark.parametrize("name", ["constant-negative", "constant-positive", "inverse-square", "smooth-decay"])
def test_gaussian_exact_matches_cn(solutions, name):
    sol = solutions[name]
    g = Grid(1, 1024, 40.0)
    for t in (1.0, 2.0 if name == "constant-negative" else 3.5):
        cn = crank_nicolson_linear(sol.model, 0, t, 2e-3, gaussian(g, width=0.8))
        assert relative_difference(cn, gaussian_exact(sol, t, 0.8, g)) < 1e-4
