"""Diffusion-operator identities and the three hypothesis checkers.

The preset quartic functionals are integrals of u^4 (what the worked
derivations actually produce); with that reading each preset inequality
is exact at the discrete level and the checks below pass with the 1e-8
relative tolerance, while the deliberately broken variants fail by large
margins.
"""

import math

import numpy as np
import pytest

from sedes import (
    Field,
    FourierSampler,
    Grid,
    LyapunovSpec,
    NoiseModel,
    OperatorCoeff,
    ProblemSpec,
    check_exponential,
    check_khasminskii,
    check_lasalle,
    diffusion_operator,
    h_norm,
    make_preset,
    quartic,
    v_norm,
)
from sedes.fields import h_norm_sq_values


def default_sampler(p, seed=0):
    return FourierSampler(p.grid, seed=seed, t_max=p.t_final)


def test_diffusion_operator_zero_state_is_zero():
    for name in ("eq16", "eq6", "eq24"):
        pre = make_preset(name)
        z = Field.zero(pre.problem.grid)
        assert diffusion_operator(pre.problem, pre.lyapunov, 0.37, z, z) == 0.0


def test_heat_zero_diffusion_identity():
    # with f = g = 0 and U = ||x||^2 the operator is exactly -2 ||x||_V^2
    pre = make_preset("heat", grid_n=63)
    rng = np.random.default_rng(2)
    for _ in range(20):
        f = Field(pre.problem.grid, rng.standard_normal(63))
        lu = diffusion_operator(pre.problem, pre.lyapunov, 1.0, f, f)
        assert lu == pytest.approx(-2 * v_norm(f) ** 2, rel=1e-12)


def test_eq6_certified_bound():
    # LU <= -2 (Q4(x) + 2||x||_H^2) + ||y||_H^2 up to the discrete slack
    pre = make_preset("eq6")
    s = default_sampler(pre.problem)
    for i in range(500):
        t, x, y = s.sample(i)
        lu = diffusion_operator(pre.problem, pre.lyapunov, t, x, y)
        bound = (-2 * (quartic(x) + 2 * h_norm(x) ** 2) + h_norm(y) ** 2)
        assert lu <= bound + 1e-8 * (1 + abs(lu) + abs(bound))


def test_eq24_certified_bound():
    pre = make_preset("eq24")  # nu=2, a=0.5, b=1, c=1
    s = default_sampler(pre.problem)
    for i in range(500):
        t, x, y = s.sample(i)
        lu = diffusion_operator(pre.problem, pre.lyapunov, t, x, y)
        bound = (-2 * (2.0 - 0.5) * h_norm(x) ** 2 + 2 * h_norm(y) ** 2
                 - quartic(x) + 0.5 * quartic(y))
        assert lu <= bound + 1e-8 * (1 + abs(lu) + abs(bound))


def test_trace_term_quadratic_in_g():
    pre = make_preset("eq6")
    p = pre.problem
    s = default_sampler(p)
    t, x, y = s.sample(3)
    values = {}
    for c in (0.0, 1.0, 2.0):
        q = p.replace(diffusion=lambda tt, u, v, _c=c: _c * v * math.sin(tt))
        values[c] = diffusion_operator(q, pre.lyapunov, t, x, y)
    base = values[1.0] - values[0.0]
    assert values[2.0] - values[0.0] == pytest.approx(4.0 * base, rel=1e-12)


def test_custom_u_matches_fast_path():
    # U = ||x||_H^2 spelled out through the custom callbacks must agree
    # with the dedicated fast path
    pre = make_preset("eq24")
    p = pre.problem
    custom = LyapunovSpec(
        u_kind="custom",
        U_fn=lambda t, f: float(h_norm_sq_values(f.values, f.grid.dx)),
        U_t_fn=lambda t, f: 0.0,
        U_x_fn=lambda t, f: Field(f.grid, 2.0 * f.values),
        U_xx_quadform_fn=lambda t, f, g: 2.0 * h_norm(g) ** 2)
    s = default_sampler(p)
    for i in range(50):
        t, x, y = s.sample(i)
        fast = diffusion_operator(p, pre.lyapunov, t, x, y)
        slow = diffusion_operator(p, custom, t, x, y)
        assert slow == pytest.approx(fast, rel=1e-11, abs=1e-11)


def test_sampler_is_deterministic_prefix_stream():
    g = Grid(63)
    s1 = FourierSampler(g, seed=4, t_max=10.0)
    s2 = FourierSampler(g, seed=4, t_max=10.0)
    for i in (0, 5, 17):
        t1, x1, y1 = s1.sample(i)
        t2, x2, y2 = s2.sample(i)
        assert t1 == t2
        assert np.array_equal(x1.values, x2.values)
        assert np.array_equal(y1.values, y2.values)
    norms = [h_norm(s1.sample(i)[1]) for i in range(200)]
    assert min(norms) >= 1e-2
    assert max(norms) <= 8.0 + 1e-9


def test_khasminskii_eq16_passes():
    pre = make_preset("eq16")
    rep = check_khasminskii(pre.problem, pre.lyapunov,
                            default_sampler(pre.problem), 10000)
    assert rep.passed
    assert rep.max_violation <= rep.tolerance
    ladder = rep.extras["u_radial_ladder"]
    assert all(b > a for a, b in zip(ladder, ladder[1:]))


def test_khasminskii_trivial_zero_problem_passes():
    grid = Grid(31)
    p = ProblemSpec(grid, OperatorCoeff.laplacian(),
                    drift=lambda t, u, v: 0 * u,
                    diffusion=lambda t, u, v: 0 * u,
                    tau=1.0, noise=NoiseModel.scalar(),
                    initial_history=lambda th, x: 0.1 * np.sin(x),
                    t_final=10.0, dt=0.01)
    L = LyapunovSpec(u_kind="h_norm_sq", W_fn=lambda f: 0.0,
                     lam1=1.0, lam2=1.0)
    rep = check_khasminskii(p, L, FourierSampler(grid, t_max=10.0), 2000)
    assert rep.passed


def test_khasminskii_broken_lam2_fails():
    pre = make_preset("eq16", lam2=10.0)
    rep = check_khasminskii(pre.problem, pre.lyapunov,
                            default_sampler(pre.problem), 10000)
    assert not rep.passed
    assert rep.max_violation > 0
    # direct construction of a violating state: the drift only sinks the
    # quartic at rate 2, so demanding 10 Q4(x) on the right fails at
    # large ||x||
    p, L = pre.problem, pre.lyapunov
    x = Field(p.grid, np.sin(p.grid.points)
              * (6.0 / math.sqrt(math.pi / 2)))
    y = Field.zero(p.grid)
    lu = diffusion_operator(p, L, 0.0, x, y)
    rhs = L.lam1 * (1 + h_norm(x) ** 2) - 10.0 * quartic(x)
    assert lu > rhs


def test_lasalle_eq6_passes():
    pre = make_preset("eq6")
    rep = check_lasalle(pre.problem, pre.lyapunov,
                        default_sampler(pre.problem), 10000)
    assert rep.passed
    assert math.isfinite(rep.extras["gamma_integral"])
    for ladder in rep.extras["u_radial_ladders"].values():
        assert all(b > a for a, b in zip(ladder, ladder[1:]))


def test_lasalle_strictness_boundary_fails():
    pre = make_preset("eq6")
    L = LyapunovSpec(u_kind="h_norm_sq",
                     w1_fn=lambda f: h_norm(f) ** 2,
                     w2_fn=lambda f: h_norm(f) ** 2,
                     gamma_fn=lambda t: 0.0)
    rep = check_lasalle(pre.problem, L, default_sampler(pre.problem), 200)
    assert not rep.passed
    assert "strictness" in rep.argmax_sample


def test_lasalle_amplified_noise_fails():
    pre = make_preset("eq6", g_factor=3.0)
    rep = check_lasalle(pre.problem, pre.lyapunov,
                        default_sampler(pre.problem), 10000)
    assert not rep.passed
    assert rep.max_violation > 0
    # direct evaluation at x = 0, ||y||_H = 1, t = pi/2: the dissipation
    # bound is beaten by (9 sin^2 t - 1) ||y||^2 = 8
    p, L = pre.problem, pre.lyapunov
    x = Field.zero(p.grid)
    y = Field(p.grid, np.sin(p.grid.points) / math.sqrt(math.pi / 2))
    lu = diffusion_operator(p, L, math.pi / 2, x, y)
    rhs = -float(L.w1_fn(x)) + float(L.w2_fn(y))
    assert lu - rhs == pytest.approx(8.0, rel=1e-6)


def test_exponential_eq24_passes():
    pre = make_preset("eq24")
    rep = check_exponential(pre.problem, pre.lyapunov,
                            default_sampler(pre.problem), 10000)
    assert rep.passed
    assert rep.extras["gamma_exp_integral"] == 0.0


def test_exponential_gamma_integral_value():
    # gamma(t) = e^{-2 mu t}: the weighted integral tends to 1/mu
    pre = make_preset("eq24", t_final=50.0)
    mu = 1.0
    L = LyapunovSpec(u_kind="h_norm_sq", W1_fn=quartic,
                     alpha1=3.0, alpha2=2.0, alpha3=1.0, alpha4=0.5,
                     mu=mu, beta1=1.0, beta2=1.0,
                     gamma_fn=lambda t: math.exp(-2 * mu * t))
    rep = check_exponential(pre.problem, L, default_sampler(pre.problem), 100)
    assert rep.extras["gamma_exp_integral"] == pytest.approx(1.0 / mu,
                                                             rel=1e-4)


def test_exponential_constants_fail_at_construction():
    # c = 1.3 gives alpha4 = c^4/2 = 1.428 > alpha3 = 1
    with pytest.raises(ValueError, match="alpha3 > alpha4"):
        LyapunovSpec(u_kind="h_norm_sq", W1_fn=quartic,
                     alpha1=3.0, alpha2=2.0, alpha3=1.0,
                     alpha4=0.5 * 1.3 ** 4, mu=math.inf,
                     beta1=1.0, beta2=1.0, gamma_fn=lambda t: 0.0)
    with pytest.raises(ValueError, match="c\\^4 < 2"):
        make_preset("eq24", c=1.3)
    # but a deliberately broken spec can be built and is then reported
    pre = make_preset("eq24", c=1.3, enforce_constraints=False)
    rep = check_exponential(pre.problem, pre.lyapunov,
                            default_sampler(pre.problem), 100)
    assert not rep.passed
    assert "constants" in rep.argmax_sample


def test_report_monotone_under_prefix_extension():
    pre = make_preset("eq16", lam2=10.0)
    s = default_sampler(pre.problem)
    small = check_khasminskii(pre.problem, pre.lyapunov, s, 2000)
    large = check_khasminskii(pre.problem, pre.lyapunov, s, 4000)
    assert not small.passed
    assert not large.passed
    assert large.max_violation >= small.max_violation


def test_report_serializes():
    import json

    pre = make_preset("eq16")
    rep = check_khasminskii(pre.problem, pre.lyapunov,
                            default_sampler(pre.problem), 100)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert doc["name"] == "khasminskii"
    assert doc["passed"] == (doc["max_violation"] <= doc["tolerance"])
