import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import hyp2f1

from hillnls.classical import (
    IntegrationError,
    SigmaModel,
    count_zeta1_zeros,
    estimate_delta0,
    evaluate_sigma,
    exclusion_band,
    export_solution_csv,
    factor_coefficients,
    load_sigma_csv,
    solve_fundamental,
)

LAM = (1 - math.sqrt(0.4)) / 2


# -- sigma models ---------------------------------------------------------------

def test_evaluate_sigma_examples():
    assert evaluate_sigma(SigmaModel.zero(), 3.7) == 0.0
    assert evaluate_sigma(SigmaModel.constant(-1.0), 5.0) == -1.0
    assert evaluate_sigma(SigmaModel.inverse_square(0.15), 0.0) == pytest.approx(0.15)


def test_inverse_square_asymptotics_and_lambda():
    m = SigmaModel.inverse_square(0.15)
    assert m.lam == pytest.approx(LAM)
    t = 1e5
    assert t**2 * evaluate_sigma(m, t) == pytest.approx(0.15, rel=1e-8)


def test_smooth_decay_limit():
    m = SigmaModel.smooth_decay(0.15)
    t = 1e5
    assert t**2 * evaluate_sigma(m, t) == pytest.approx(0.15, rel=1e-6)
    assert m.lam == pytest.approx(LAM)


@pytest.mark.parametrize("k", [-0.1, 0.25, 0.3])
def test_inverse_square_rejects_k(k):
    with pytest.raises(ValueError):
        SigmaModel.inverse_square(k)


def test_tabulated_interpolation_and_span():
    m = SigmaModel.tabulated([-1.0, 0.0, 2.0], [1.0, 3.0, -1.0])
    assert evaluate_sigma(m, 1.0) == pytest.approx(1.0)
    np.testing.assert_allclose(evaluate_sigma(m, np.array([-0.5, 0.0])), [2.0, 3.0])
    with pytest.raises(ValueError):
        evaluate_sigma(m, 2.5)
    with pytest.raises(ValueError):
        SigmaModel.tabulated([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])


def test_load_sigma_csv_with_and_without_header(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("t,sigma\n-1,0.5\n0,0.5\n1,0.5\n")
    b = tmp_path / "b.csv"
    b.write_text("-1,0.5\n0,0.5\n1,0.5\n")
    for p in (a, b):
        m = load_sigma_csv(p)
        assert evaluate_sigma(m, 0.3) == pytest.approx(0.5)


def test_tabulated_constant_matches_constant_model():
    ts = np.linspace(-5, 5, 101)
    sol = solve_fundamental(SigmaModel.tabulated(ts, np.full_like(ts, 1.0)), 5.0)
    z1, _, z2, _ = sol(2.0)
    assert z1 == pytest.approx(math.cos(2.0), abs=1e-8)
    assert z2 == pytest.approx(math.sin(2.0), abs=1e-8)


# -- fundamental solutions -------------------------------------------------------

def test_initial_values(solutions):
    for sol in solutions.values():
        assert sol(0.0) == (1.0, 0.0, 0.0, 1.0)
        assert sol.theta(0.0) == 0.0


def test_zero_model_example(solutions):
    z1, z1p, z2, z2p = solutions["zero"](2.5)
    assert (z1, z1p, z2, z2p) == pytest.approx((1.0, 0.0, 2.5, 1.0), abs=1e-12)


def test_constant_negative_example(solutions):
    z1, _, z2, _ = solutions["constant-negative"](1.0)
    assert z1 == pytest.approx(math.cosh(1.0), rel=1e-9)
    assert z2 == pytest.approx(math.sinh(1.0), rel=1e-9)


def test_constant_positive_example(solutions):
    z1, _, z2, _ = solutions["constant-positive"](math.pi / 2)
    assert abs(z1) < 1e-9
    assert z2 == pytest.approx(1.0, abs=1e-9)


@given(c=st.floats(-1.0, 1.0), t=st.floats(-10.0, 10.0))
def test_constant_closed_forms(c, t):
    sol = solve_fundamental(SigmaModel.constant(c), 10.0)
    z1, z1p, z2, z2p = sol(t)
    if c > 0:
        w = math.sqrt(c)
        ref = (math.cos(w * t), -w * math.sin(w * t), math.sin(w * t) / w, math.cos(w * t))
    elif c < 0:
        w = math.sqrt(-c)
        ref = (math.cosh(w * t), w * math.sinh(w * t), math.sinh(w * t) / w, math.cosh(w * t))
    else:
        ref = (1.0, 0.0, t, 1.0)
    scale = max(1.0, abs(ref[0]), abs(ref[2]))
    for a, b in zip((z1, z1p, z2, z2p), ref):
        assert abs(a - b) <= 1e-8 * scale


def test_smooth_decay_closed_forms(solutions):
    sol = solutions["smooth-decay"]
    ts = np.array([-15.0, -3.0, 0.5, 2.0, 7.0, 19.0])
    z1, _, z2, _ = sol(ts)
    ref1 = (1 + ts**2) ** (LAM / 2)
    ref2 = ref1 * ts * hyp2f1(0.5, LAM, 1.5, -ts**2)
    np.testing.assert_allclose(z1, ref1, rtol=1e-8)
    np.testing.assert_allclose(z2, ref2, rtol=1e-8)


def test_theta_is_continuous_polar_angle(solutions):
    for name, sol in solutions.items():
        ts = np.linspace(0, 20, 4001)
        z1, _, z2, _ = sol(ts)
        ref = np.unwrap(np.arctan2(z2, z1))
        np.testing.assert_allclose(sol.theta(ts), ref, atol=1e-8, err_msg=name)


def test_wronskian_and_no_simultaneous_zeros(solutions):
    for name, sol in solutions.items():
        assert np.max(sol.wronskian_residual) < 1e-9, name
        z1, z1p, z2, z2p = sol(sol.time)
        floor = 0.1 * np.minimum(1.0, 1.0 / np.maximum(np.abs(z1p), np.abs(z2p)))
        assert np.all(np.maximum(np.abs(z1), np.abs(z2)) > floor), name


def test_zero_count_examples(solutions):
    assert count_zeta1_zeros(solutions["zero"], 17.0) == 0
    assert count_zeta1_zeros(solutions["constant-positive"], 2.0) == 1
    assert count_zeta1_zeros(solutions["constant-negative"], 10.0) == 0


@given(t=st.floats(-19.9, 19.9))
def test_zero_count_cosine(solutions, t):
    expect = math.floor(abs(t) / math.pi + 0.5)
    assert count_zeta1_zeros(solutions["constant-positive"], t) == expect


def test_zero_count_monotone(solutions):
    sol = solutions["constant-positive"]
    counts = sol.zero_count
    assert counts[np.argmin(np.abs(sol.time))] == 0
    pos = sol.time >= 0
    assert np.all(np.diff(counts[pos]) >= 0)
    neg = sol.time[~pos]
    assert np.all(np.diff(counts[~pos][np.argsort(-neg)]) >= 0)
    assert sol.degenerate_zeros.size == 0


def test_factor_coefficient_examples(solutions):
    co = factor_coefficients(solutions["zero"], 2.0)
    assert co.quadratic_phase == pytest.approx((0.0, 1.0, 0.0), abs=1e-12)
    for sol in solutions.values():
        assert factor_coefficients(sol, 0.0).mdmdfm == (1.0, 0.0, 0.0)
    kor = factor_coefficients(solutions["constant-negative"], 1.0).korotyaev
    assert kor[0] == pytest.approx(math.tanh(1.0) / 2, rel=1e-9)


def test_factor_coefficient_absence(solutions):
    co = factor_coefficients(solutions["zero"], 0.0)
    assert co.quadratic_phase is None and co.mdfm is None and co.korotyaev is not None
    co = factor_coefficients(solutions["constant-positive"], math.pi / 2)
    assert co.korotyaev is None and co.mdfm is None and co.quadratic_phase is not None
    assert exclusion_band(0.0) == pytest.approx(1e-8)


def test_a1_positive_bounded(solutions):
    for sol in solutions.values():
        a1 = np.array([factor_coefficients(sol, t).mdmdfm[0] for t in np.linspace(-20, 20, 81)])
        assert np.all(a1 > 0)


def test_inverse_square_growth_exponent():
    sol = solve_fundamental(SigmaModel.inverse_square(0.15), 1e4)
    ts = np.geomspace(1e2, 1e4, 50)
    slope = np.polyfit(np.log(ts), np.log(np.abs(sol(ts)[2])), 1)[0]
    assert abs(slope - (1 - LAM)) < 0.02 * (1 - LAM)
    r = [sol(t)[2] / t ** (1 - LAM) for t in (3e3, 1e4)]
    assert abs(r[1]) > 0.1
    assert abs(r[1] / r[0] - 1) < 0.02


def test_estimate_delta0_smooth_decay():
    sol = solve_fundamental(SigmaModel.smooth_decay(0.15), 1e3)
    assert estimate_delta0(sol, 1e2, 1e3) == pytest.approx(1 - 2 * LAM, rel=0.02)


def test_solution_csv_export(tmp_path, solutions):
    p = export_solution_csv(solutions["constant-positive"], tmp_path / "c.csv", times=[0.0, 2.0])
    lines = p.read_text().splitlines()
    assert lines[0] == "t,zeta1,zeta1p,zeta2,zeta2p,nu,wronskian_residual"
    row = lines[2].split(",")
    assert float(row[0]) == 2.0 and int(row[5]) == 1


def test_solve_rejects_bad_arguments():
    with pytest.raises(ValueError):
        solve_fundamental(SigmaModel.zero(), 0.0)
    with pytest.raises(ValueError):
        solve_fundamental(SigmaModel.zero(), 1.0, tol=0.0)


def test_wronskian_budget_enforced(monkeypatch):
    import hillnls.classical as classical
    monkeypatch.setattr(classical, "wronskian_residual", lambda *a: np.full(np.shape(a[0]), 1e-3))
    with pytest.raises(IntegrationError):
        solve_fundamental(SigmaModel.zero(), 1.0, tol=1e-10)
