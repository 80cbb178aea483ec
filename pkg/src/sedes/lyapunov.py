"""Numerical evaluation of the diffusion operator and the stability
hypotheses it enters.

For a functional U(t, x) along the delay equation, the Ito drift is

    LU(t, x, y) = dU/dt + <A(t,x) + f(t,x,y), U_x(t,x)>
                  + 1/2 trace(U_xx(t,x) g(t,x,y) Q g*(t,x,y)).

Every worked example uses U = ||x||_H^2, for which this collapses to

    LU = 2 <A x, x>_H + 2 <f, x>_H + ||g||_HS^2,

with <A x, x>_H evaluated through the summation-by-parts identity so the
coercive term is exact at the discrete level.  A custom U supplies the
time derivative, the gradient, and the second derivative as a quadratic
form evaluated per noise mode (assembling a dense second Frechet
derivative would buy nothing for these checks).

The three checkers draw (t, x, y) samples, evaluate the relevant
inequality family, and report the worst relative violation

    (lhs - rhs) / (1 + |lhs| + |rhs|),

declaring a pass when no family exceeds the tolerance (default 1e-8).
The relative floor absorbs the O(dx^2) gap between the discrete
grounded-mode pairing <A x, x> and its continuum value.  Limit-type
hypotheses (radial unboundedness of U) are verified as finite ladders of
doubling norms; a ladder is an honest proxy for the limit statement, not
a proof, and is reported as such.

Samples are a prefix-extension stream: growing the sample count only
appends samples, so a failed report can never turn into a pass with the
same seed.
"""

import math

import numpy as np

from .fields import (
    Field,
    apply_operator_values,
    h_norm_sq_values,
    operator_quad_form,
    v_norm_sq_values,
)
from .noise import keyed_gaussians, keyed_uniforms

__all__ = [
    "LyapunovSpec",
    "ConditionReport",
    "FourierSampler",
    "diffusion_operator",
    "check_khasminskii",
    "check_lasalle",
    "check_exponential",
]

DEFAULT_TOLERANCE = 1e-8


class LyapunovSpec:
    """Functionals and constants entering the three stability theorems.

    u_kind "h_norm_sq" is the fast path U = ||x||_H^2 used by every
    preset; "custom" requires U_fn, U_t_fn, U_x_fn and the quadratic-form
    callback U_xx_quadform_fn(t, x, g) = U_xx(t,x)[g, g].

    Constant families are validated on construction when present:
    lam1, lam2 > 0 (existence); alpha1 > alpha2 >= 0, alpha3 > alpha4 > 0,
    mu > 0 (exponential; mu may be inf when gamma vanishes).  Pass
    enforce_constants=False to build a deliberately broken spec; the
    checkers then report the violated hypothesis instead of raising.
    """

    def __init__(self, u_kind="h_norm_sq", U_fn=None, U_t_fn=None,
                 U_x_fn=None, U_xx_quadform_fn=None, W_fn=None, w1_fn=None,
                 w2_fn=None, W1_fn=None, gamma_fn=None, lam1=None, lam2=None,
                 alpha1=None, alpha2=None, alpha3=None, alpha4=None, mu=None,
                 beta1=None, beta2=None, enforce_constants=True):
        if u_kind not in ("h_norm_sq", "custom"):
            raise ValueError("unknown u_kind %r" % u_kind)
        if u_kind == "custom":
            missing = [nm for nm, fn in (("U_fn", U_fn), ("U_t_fn", U_t_fn),
                                         ("U_x_fn", U_x_fn),
                                         ("U_xx_quadform_fn", U_xx_quadform_fn))
                       if fn is None]
            if missing:
                raise ValueError("custom U needs %s" % ", ".join(missing))
        self.u_kind = u_kind
        self.U_fn = U_fn
        self.U_t_fn = U_t_fn
        self.U_x_fn = U_x_fn
        self.U_xx_quadform_fn = U_xx_quadform_fn
        self.W_fn = W_fn
        self.w1_fn = w1_fn
        self.w2_fn = w2_fn
        self.W1_fn = W1_fn
        self.gamma_fn = gamma_fn
        self.lam1 = lam1
        self.lam2 = lam2
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.alpha3 = alpha3
        self.alpha4 = alpha4
        self.mu = mu
        self.beta1 = beta1
        self.beta2 = beta2
        if enforce_constants:
            bad = self.constant_violations()
            if bad:
                raise ValueError("hypothesis constants violated: "
                                 + "; ".join(bad))

    def constant_violations(self):
        """Human-readable list of violated constant hypotheses."""
        bad = []
        if self.lam1 is not None and not self.lam1 > 0:
            bad.append("lam1 > 0 fails (lam1=%g)" % self.lam1)
        if self.lam2 is not None and not self.lam2 > 0:
            bad.append("lam2 > 0 fails (lam2=%g)" % self.lam2)
        a1, a2, a3, a4 = self.alpha1, self.alpha2, self.alpha3, self.alpha4
        if a1 is not None or a2 is not None or a3 is not None or a4 is not None:
            if a1 is None or a2 is None or a3 is None or a4 is None:
                bad.append("alpha1..alpha4 must all be set together")
            else:
                if not a1 > a2:
                    bad.append("alpha1 > alpha2 fails (%g <= %g)" % (a1, a2))
                if not a2 >= 0:
                    bad.append("alpha2 >= 0 fails (alpha2=%g)" % a2)
                if not a3 > a4:
                    bad.append("alpha3 > alpha4 fails (%g <= %g)" % (a3, a4))
                if not a4 > 0:
                    bad.append("alpha4 > 0 fails (alpha4=%g)" % a4)
        if self.mu is not None and not self.mu > 0:
            bad.append("mu > 0 fails (mu=%g)" % self.mu)
        for nm in ("beta1", "beta2"):
            v = getattr(self, nm)
            if v is not None and not v > 0:
                bad.append("%s > 0 fails (%s=%g)" % (nm, nm, v))
        return bad

    def U(self, t, f: Field) -> float:
        if self.u_kind == "h_norm_sq":
            return float(h_norm_sq_values(f.values, f.grid.dx))
        return float(self.U_fn(t, f))


class ConditionReport:
    """Outcome of a sampled hypothesis check.

    max_violation is the worst relative margin (lhs - rhs)/(1+|lhs|+|rhs|)
    over every inequality family tested; positive means the hypothesis
    failed by that margin, and passed is exactly max_violation <= tolerance.
    """

    def __init__(self, name, n_samples, max_violation, argmax_sample,
                 tolerance, extras=None):
        self.name = name
        self.n_samples = int(n_samples)
        self.max_violation = float(max_violation)
        self.argmax_sample = argmax_sample
        self.tolerance = float(tolerance)
        self.passed = self.max_violation <= self.tolerance
        self.extras = extras or {}

    def to_dict(self):
        return {
            "name": self.name,
            "n_samples": self.n_samples,
            "max_violation": self.max_violation,
            "argmax_sample": self.argmax_sample,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "extras": self.extras,
        }

    def __repr__(self):
        return ("ConditionReport(%s, passed=%s, max_violation=%.3e, n=%d)"
                % (self.name, self.passed, self.max_violation,
                   self.n_samples))


class _Worst:
    """Running maximum of relative violations with a description."""

    def __init__(self):
        self.margin = -math.inf
        self.where = "no samples"

    def update(self, lhs, rhs, desc):
        m = (lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
        if m > self.margin:
            self.margin = m
            self.where = desc
        return m

    def update_flagged(self, failed, margin, desc):
        # for strict or boolean hypotheses, where a tie must register as a
        # failure: a failing sample scores at least 1.0, a passing one
        # scores its genuine (nonpositive) margin
        if failed:
            margin = max(margin, 1.0)
        if margin > self.margin:
            self.margin = margin
            self.where = desc
        return margin


def _h_of(f: Field) -> float:
    return math.sqrt(float(h_norm_sq_values(f.values, f.grid.dx)))


class FourierSampler:
    """Random truncated Fourier states for the hypothesis checkers.

    Each sample i yields (t, x, y) with x = sum_{k<=n_modes} c_k sin(k x_j),
    Gaussian coefficients rescaled so the H norm hits a log-uniform target
    in [norm_lo, norm_hi], and t uniform in [0, t_max].  The stream is
    keyed by (seed, i): samples are a prefix-extension family, and two
    checkers with the same seed see the same states.
    """

    def __init__(self, grid, seed=0, t_max=50.0, n_modes=8,
                 norm_lo=1e-2, norm_hi=8.0):
        if n_modes > grid.n_interior:
            raise ValueError("more sampler modes than grid points")
        if not 0 < norm_lo < norm_hi:
            raise ValueError("need 0 < norm_lo < norm_hi")
        self.grid = grid
        self.seed = int(seed)
        self.t_max = float(t_max)
        self.n_modes = int(n_modes)
        self.norm_lo = float(norm_lo)
        self.norm_hi = float(norm_hi)
        k = np.arange(1, self.n_modes + 1)
        self._sines = np.sin(k[:, None] * grid.points[None, :])
        self._log_lo = math.log(norm_lo)
        self._log_span = math.log(norm_hi) - math.log(norm_lo)

    def _field(self, stream, i):
        c = keyed_gaussians(self.seed, stream, i, np.arange(self.n_modes))
        vals = c @ self._sines
        target = math.exp(self._log_lo + self._log_span
                          * float(keyed_uniforms(self.seed, stream + 1, i, 0)))
        hn = math.sqrt(float(h_norm_sq_values(vals, self.grid.dx)))
        if hn == 0.0:  # measure-zero draw; fall back to the ground mode
            vals = self._sines[0].copy()
            hn = math.sqrt(float(h_norm_sq_values(vals, self.grid.dx)))
        return Field(self.grid, vals * (target / hn))

    def sample(self, i):
        """(t, x, y) for sample index i; pure in (seed, i)."""
        t = self.t_max * float(keyed_uniforms(self.seed, 10, i, 0))
        x = self._field(20, i)
        y = self._field(30, i)
        return t, x, y


def _mode_fields(p, g_values):
    """Diffusion output as one field per noise mode.

    All presets use multiplication-operator diffusions, so the mode fields
    coincide with the single pointwise output (the sqrt(lambda_k) weights
    live in the increments and in the Q-weighted trace)."""
    return [g_values] * p.noise.n_modes


def _hs_sq(p, g_values):
    base = float(h_norm_sq_values(g_values, p.grid.dx))
    return p.noise.trace * base


def diffusion_operator(p, L: LyapunovSpec, t, x: Field, y: Field) -> float:
    """LU(t, x, y) for the problem's drift, diffusion, and noise model."""
    dx = p.grid.dx
    fv = np.asarray(p.drift.evaluate(t, x.values, y.values, dx), dtype=float)
    gv = np.asarray(p.diffusion.evaluate(t, x.values, y.values, dx),
                    dtype=float)
    fv = np.broadcast_to(fv, x.values.shape)
    gv = np.broadcast_to(gv, x.values.shape)
    if L.u_kind == "h_norm_sq":
        out = (2.0 * operator_quad_form(p.op, t, x)
               + 2.0 * dx * float(np.dot(fv, x.values))
               + _hs_sq(p, gv))
    else:
        a_mid = p.op.midpoint_values(t, p.grid)
        ax = apply_operator_values(a_mid, x.values, dx)
        ux = L.U_x_fn(t, x)
        ux_vals = ux.values if isinstance(ux, Field) else np.asarray(ux)
        pairing = dx * float(np.dot(ax + fv, ux_vals))
        trace = 0.0
        for lam, gk in zip(p.noise.eigenvalues, _mode_fields(p, gv)):
            trace += float(lam) * float(
                L.U_xx_quadform_fn(t, x, Field(p.grid, gk)))
        out = float(L.U_t_fn(t, x)) + pairing + 0.5 * trace
    if not math.isfinite(out):
        raise ValueError("evaluation overflow")
    return out


def _u_inf_proxy(L, field, t_grid):
    """inf over time of U(t, x), proxied by the minimum over sampled t."""
    if L.u_kind == "h_norm_sq":
        return L.U(0.0, field)
    return min(L.U(t, field) for t in t_grid)


def _radial_ladder(p, L, worst, which="h"):
    """Check U grows along fields of doubling norm (limit-statement proxy).

    which="h": H norms 2^i on the ground mode; which="v": V norms 2^i on
    the top grid mode (whose H norm also grows, keeping the discrete
    statement meaningful).  Returns the ladder for the report."""
    grid = p.grid
    t_grid = np.linspace(0.0, p.t_final, 9)
    base = np.sin((1 if which == "h" else grid.n_interior) * grid.points)
    if which == "h":
        scale0 = math.sqrt(float(h_norm_sq_values(base, grid.dx)))
    else:
        scale0 = math.sqrt(float(v_norm_sq_values(base, grid.dx)))
    ladder = []
    for i in range(1, 11):
        f = Field(grid, base * (2.0 ** i / scale0))
        ladder.append(_u_inf_proxy(L, f, t_grid))
    for i in range(len(ladder) - 1):
        worst.update_flagged(not ladder[i + 1] > ladder[i],
                             (ladder[i] - ladder[i + 1])
                             / (1.0 + abs(ladder[i]) + abs(ladder[i + 1])),
                             "radial %s-ladder not increasing at rung %d"
                             % (which.upper(), i + 1))
    return ladder


def _gamma_integral(L, t_final, mu=None):
    """Quadrature of gamma(t) (mu None) or gamma(t) e^{mu t} over [0, t_final].

    With gamma identically zero the weighted integral is 0 for every mu,
    including mu = inf (the convention letting the decay bound come from
    the root solver alone)."""
    ts = np.linspace(0.0, t_final, 4097)
    g = np.asarray([float(L.gamma_fn(t)) for t in ts])
    if mu is None:
        w = g
    elif not np.any(g != 0.0):
        return 0.0
    elif math.isinf(mu):
        return math.inf
    else:
        w = g * np.exp(mu * ts)
    return float(np.trapezoid(w, ts))


def _constants_family(L, worst, names):
    for msg in L.constant_violations():
        if any(msg.startswith(nm) for nm in names):
            worst.update_flagged(True, 1.0, "constants: " + msg)


def check_khasminskii(p, L: LyapunovSpec, sampler, n,
                      tolerance=DEFAULT_TOLERANCE) -> ConditionReport:
    """Existence-theorem hypotheses: the LU growth bound

        LU(t,x,y) <= lam1 [1 + U(t,x) + U(t-tau,y) + W(y)] - lam2 W(x)

    on n sampled states, plus the radial-unboundedness ladder for U."""
    if L.lam1 is None or L.lam2 is None or L.W_fn is None:
        raise ValueError("check_khasminskii needs lam1, lam2 and W_fn")
    worst = _Worst()
    _constants_family(L, worst, ("lam1", "lam2"))
    tau = p.tau
    for i in range(n):
        t, x, y = sampler.sample(i)
        lhs = diffusion_operator(p, L, t, x, y)
        rhs = (L.lam1 * (1.0 + L.U(t, x) + L.U(max(t - tau, 0.0), y)
                         + float(L.W_fn(y)))
               - L.lam2 * float(L.W_fn(x)))
        worst.update(lhs, rhs,
                     "growth bound at sample %d: t=%.3f, |x|_H=%.3f, "
                     "|y|_H=%.3f" % (i, t, _h_of(x), _h_of(y)))
    ladder = _radial_ladder(p, L, worst, "h")
    return ConditionReport("khasminskii", n, worst.margin, worst.where,
                           tolerance, extras={"u_radial_ladder": ladder})


def check_lasalle(p, L: LyapunovSpec, sampler, n,
                  tolerance=DEFAULT_TOLERANCE) -> ConditionReport:
    """Pathwise-stability hypotheses: the dissipation bound

        LU(t,x,y) <= gamma(t) - w1(x) + w2(y),

    strictness w1 > w2 away from zero (with w1(0) = w2(0) = 0), both
    radial ladders for U, and integrability of gamma by quadrature."""
    if L.w1_fn is None or L.w2_fn is None or L.gamma_fn is None:
        raise ValueError("check_lasalle needs w1_fn, w2_fn and gamma_fn")
    worst = _Worst()
    zero = Field.zero(p.grid)
    w10, w20 = float(L.w1_fn(zero)), float(L.w2_fn(zero))
    zero_bad = w10 != 0.0 or w20 != 0.0
    worst.update_flagged(zero_bad,
                         abs(w10) + abs(w20) if zero_bad else -math.inf,
                         "w1(0)=%g, w2(0)=%g not both zero" % (w10, w20))
    for i in range(n):
        t, x, y = sampler.sample(i)
        lhs = diffusion_operator(p, L, t, x, y)
        rhs = float(L.gamma_fn(t)) - float(L.w1_fn(x)) + float(L.w2_fn(y))
        worst.update(lhs, rhs,
                     "dissipation bound at sample %d: t=%.3f, |x|_H=%.3f, "
                     "|y|_H=%.3f" % (i, t, _h_of(x), _h_of(y)))
        w1x, w2x = float(L.w1_fn(x)), float(L.w2_fn(x))
        strict_fail = not w1x > w2x
        worst.update_flagged(
            strict_fail,
            (w2x - w1x) / (1.0 + abs(w1x) + abs(w2x)),
            "strictness w1 > w2 at sample %d (w1=%g, w2=%g)" % (i, w1x, w2x))
    ladders = {"h": _radial_ladder(p, L, worst, "h"),
               "v": _radial_ladder(p, L, worst, "v")}
    gamma_int = _gamma_integral(L, p.t_final)
    worst.update_flagged(not math.isfinite(gamma_int), -math.inf,
                         "gamma quadrature not finite")
    return ConditionReport("lasalle", n, worst.margin, worst.where, tolerance,
                           extras={"u_radial_ladders": ladders,
                                   "gamma_integral": gamma_int})


def check_exponential(p, L: LyapunovSpec, sampler, n,
                      tolerance=DEFAULT_TOLERANCE) -> ConditionReport:
    """Exponential-decay hypotheses: the sandwich

        beta1 ||x||_H^2 <= U(t,x) <= beta2 ||x||_H^2,

    the decay bound

        LU <= gamma(t) - alpha1 U(t,x) + alpha2 U(t-tau,y)
              - alpha3 W1(x) + alpha4 W1(y),

    the constants ordering, and finiteness of int gamma(t) e^{mu t} dt."""
    need = (L.alpha1, L.alpha2, L.alpha3, L.alpha4, L.mu, L.beta1, L.beta2,
            L.W1_fn, L.gamma_fn)
    if any(v is None for v in need):
        raise ValueError("check_exponential needs alpha1..4, mu, beta1, "
                         "beta2, W1_fn and gamma_fn")
    worst = _Worst()
    _constants_family(L, worst, ("alpha", "mu", "beta"))
    tau = p.tau
    for i in range(n):
        t, x, y = sampler.sample(i)
        hx2 = float(h_norm_sq_values(x.values, p.grid.dx))
        u = L.U(t, x)
        worst.update(L.beta1 * hx2, u,
                     "sandwich lower bound at sample %d" % i)
        worst.update(u, L.beta2 * hx2,
                     "sandwich upper bound at sample %d" % i)
        lhs = diffusion_operator(p, L, t, x, y)
        rhs = (float(L.gamma_fn(t)) - L.alpha1 * u
               + L.alpha2 * L.U(max(t - tau, 0.0), y)
               - L.alpha3 * float(L.W1_fn(x)) + L.alpha4 * float(L.W1_fn(y)))
        worst.update(lhs, rhs,
                     "decay bound at sample %d: t=%.3f, |x|_H=%.3f, "
                     "|y|_H=%.3f" % (i, t, _h_of(x), _h_of(y)))
    mu = L.mu
    gamma_int = _gamma_integral(L, p.t_final, mu=mu)
    worst.update_flagged(not math.isfinite(gamma_int), -math.inf,
                         "int gamma e^{mu t} dt diverges on [0, t_final]")
    return ConditionReport("exponential", n, worst.margin, worst.where,
                           tolerance,
                           extras={"gamma_exp_integral": gamma_int})
