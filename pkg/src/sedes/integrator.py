"""IMEX Euler-Maruyama integration of the discretized delay equation

    dx(t) = [A(t, x(t)) + f(t, x(t), x(t - tau))] dt
            + g(t, x(t), x(t - tau)) dB(t)

on the interior grid of (0, pi).  One step solves

    (I - dt A(t_{n+1})) x_{n+1} = x_n + dt f(t_n, x_n, x_{n-m})
                                  + g(t_n, x_n, x_{n-m}) * dB_n,

implicit in the stiff linear part (whose largest eigenvalue grows like
4/dx^2 and would otherwise force dt = O(dx^2)), explicit in the
nonlinearity and the noise so the scheme stays Ito-consistent.  The
tridiagonal solve uses the Thomas algorithm without pivoting; the matrix
is strictly diagonally dominant for any positive diffusion coefficient,
so breakdown cannot occur.

The delay tau is pinned to an exact multiple m * dt (the constructor
shrinks dt to the nearest divisor and records the adjustment), so the
delayed state is always a stored step and never interpolated.

Paths are pure functions of (ProblemSpec, path_id): all randomness is
counter-based, and the batched ensemble driver performs exactly the same
elementwise arithmetic per path as a single-path run, so batching is a
speed knob, not a semantics knob.  Blow-up is reported, never masked: a
non-finite state or an H norm beyond the explosion limit truncates the
trajectory with status "exploded".
"""

import math

import numpy as np

from .fields import (
    Field,
    Grid,
    OperatorCoeff,
    h_norm_sq_values,
    v_norm_sq_values,
)
from .noise import NoiseIncrement, NoiseModel

__all__ = [
    "PointwiseCoeff",
    "BallClampedCoeff",
    "ProblemSpec",
    "HistoryBuffer",
    "Trajectory",
    "BatchResult",
    "imex_em_step",
    "simulate",
    "simulate_paths",
    "truncate_problem",
    "stopping_time_sigma_k",
]

EXPLOSION_LIMIT = 1e12


class PointwiseCoeff:
    """Coefficient applied entrywise: fn(t, u, v) with u current, v delayed.

    fn must be numpy-vectorized (it receives arrays of grid values).
    """

    field_level = False

    def __init__(self, fn):
        self.fn = fn

    def evaluate(self, t, x, y, dx):
        return self.fn(t, x, y)


def clamp_to_ball(values, radius, dx):
    """Rescale whole fields onto the H ball of the given radius.

    Fields already inside the ball are returned bitwise unchanged (the
    scale factor is exactly 1.0); the zero field maps to itself, matching
    the convention that the radial projection of 0 is 0.
    """
    h = np.sqrt(h_norm_sq_values(values, dx))
    h = h[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(h > 0.0, np.minimum(h, radius) / h, 0.0)
    return values * scale


class BallClampedCoeff:
    """Coefficient that first projects x and y onto the H ball of radius k.

    This is a field-level operation (the scale factor depends on the whole
    field), which is why it is a distinct coefficient kind rather than a
    pointwise function of (u, v).
    """

    field_level = True

    def __init__(self, inner, radius):
        if radius <= 0:
            raise ValueError("truncation radius must be positive")
        self.inner = inner
        self.radius = float(radius)

    def evaluate(self, t, x, y, dx):
        xk = clamp_to_ball(x, self.radius, dx)
        yk = clamp_to_ball(y, self.radius, dx)
        return self.inner.evaluate(t, xk, yk, dx)


def _as_coeff(c):
    if hasattr(c, "evaluate"):
        return c
    if callable(c):
        return PointwiseCoeff(c)
    raise TypeError("coefficient must be callable or provide .evaluate")


class ProblemSpec:
    """Discrete instance of the delay evolution equation.

    drift and diffusion are pointwise (t, u, v) callables or coefficient
    objects; initial_history is psi(theta, x) for theta in [-tau, 0],
    vectorized in x, with psi(., 0) = psi(., pi) = 0.  Construction
    validates the operator bounds, the boundedness of f(t,0,0) and
    g(t,0,0) over the horizon, and (by a sampled refinement check) the
    continuity of psi in theta.
    """

    def __init__(self, grid: Grid, op: OperatorCoeff, drift, diffusion,
                 tau: float, noise: NoiseModel, initial_history,
                 t_final: float, dt: float, explosion_limit=EXPLOSION_LIMIT,
                 validate: bool = True):
        if tau <= 0:
            raise ValueError("delay tau must be positive")
        if dt <= 0:
            raise ValueError("dt must be positive")
        if t_final <= 0:
            raise ValueError("t_final must be positive")
        self.grid = grid
        self.op = op
        self.drift = _as_coeff(drift)
        self.diffusion = _as_coeff(diffusion)
        self.tau = float(tau)
        self.noise = noise
        self.initial_history = initial_history
        self.t_final = float(t_final)
        self.explosion_limit = float(explosion_limit)

        # pin tau to an exact multiple of dt, shrinking dt if needed
        self.dt_requested = float(dt)
        m = int(math.ceil(self.tau / dt - 1e-9))
        self.m_delay = max(m, 1)
        self.dt = self.tau / self.m_delay
        self.dt_adjusted = not math.isclose(self.dt, self.dt_requested,
                                            rel_tol=1e-12)
        self.n_steps = int(math.ceil(self.t_final / self.dt - 1e-9))

        if validate:
            self._validate()

    def _validate(self):
        self.op.validate(self.grid, self.t_final)
        pts = self.grid.points
        dx = self.grid.dx
        zero = np.zeros_like(pts)

        # (B.2)-style boundedness of f(t,0,0) and g(t,0,0), sampled in t
        sup = 0.0
        for t in np.linspace(0.0, self.t_final, 33):
            for coeff in (self.drift, self.diffusion):
                out = np.asarray(coeff.evaluate(t, zero, zero, dx), dtype=float)
                if not np.all(np.isfinite(out)):
                    raise ValueError(
                        "coefficient at the zero state is non-finite "
                        "(boundedness check failed at t=%g)" % t)
                sup = max(sup, float(np.max(np.abs(out))) if out.size else 0.0)
        self.zero_state_bound = sup

        # initial history: walls, continuity in theta, and H-norm bound
        walls = np.array([0.0, math.pi])
        thetas = np.linspace(-self.tau, 0.0, 65)
        coarse = np.array([self.initial_history(th, pts) for th in thetas])
        scale = float(np.max(np.abs(coarse))) if coarse.size else 0.0
        tol = 1e-9 * (1.0 + scale)
        for th in thetas[::8]:
            w = np.asarray(self.initial_history(th, walls), dtype=float)
            if np.any(np.abs(w) > tol):
                raise ValueError(
                    "initial history does not vanish on the walls "
                    "(psi(%g, {0, pi}) = %s)" % (th, w))
        fine_thetas = np.linspace(-self.tau, 0.0, 257)
        fine = np.array([self.initial_history(th, pts) for th in fine_thetas])
        if not np.all(np.isfinite(fine)):
            raise ValueError("initial history evaluated non-finite")
        jump_coarse = float(np.max(np.abs(np.diff(coarse, axis=0))))
        jump_fine = float(np.max(np.abs(np.diff(fine, axis=0))))
        if jump_fine > 0.75 * jump_coarse + tol:
            raise ValueError(
                "initial history looks discontinuous in theta "
                "(refinement does not shrink the largest jump)")
        self.psi_h_bound = float(
            np.max(np.sqrt(h_norm_sq_values(fine, dx))))

    def history_values(self, batch: int = 1):
        """Initial ring (m+1, batch, n): psi at theta = -m dt, ..., -dt, 0."""
        m, n = self.m_delay, self.grid.n_interior
        ring = np.empty((m + 1, batch, n))
        for j in range(m, -1, -1):
            theta = -(j * self.dt)
            vals = np.asarray(self.initial_history(theta, self.grid.points),
                              dtype=float)
            ring[m - j] = np.broadcast_to(vals, (batch, n))
        return ring

    def replace(self, **kw) -> "ProblemSpec":
        args = dict(grid=self.grid, op=self.op, drift=self.drift,
                    diffusion=self.diffusion, tau=self.tau, noise=self.noise,
                    initial_history=self.initial_history,
                    t_final=self.t_final, dt=self.dt_requested,
                    explosion_limit=self.explosion_limit)
        args.update(kw)
        return ProblemSpec(**args)


class HistoryBuffer:
    """Ring of the m+1 most recent states, covering one delay window.

    current() is the state at head_time; delayed() is the state stored
    exactly m steps earlier (no interpolation, by construction).
    """

    def __init__(self, ring, dt, head_time=0.0):
        ring = np.asarray(ring, dtype=float)
        if ring.ndim == 2:
            ring = ring[:, None, :]
        self._ring = ring
        self._m = ring.shape[0] - 1
        self._head = self._m
        self.dt = float(dt)
        self.head_time = float(head_time)

    @classmethod
    def from_problem(cls, p: ProblemSpec, batch: int = 1) -> "HistoryBuffer":
        return cls(p.history_values(batch), p.dt, head_time=0.0)

    @property
    def m(self) -> int:
        return self._m

    def current(self):
        return self._ring[self._head]

    def delayed(self):
        """State from m steps ago (lag exactly tau)."""
        return self._ring[(self._head + 1) % (self._m + 1)]

    def at_lag(self, j: int):
        """State stored j steps before head_time, 0 <= j <= m."""
        if not 0 <= j <= self._m:
            raise ValueError("lag out of the delay window")
        return self._ring[(self._head - j) % (self._m + 1)]

    def push(self, values):
        self._head = (self._head + 1) % (self._m + 1)
        self._ring[self._head] = values
        self.head_time += self.dt

    def current_field(self, grid: Grid) -> Field:
        return Field(grid, self.current()[0])


class _TridiagFactor:
    """Prefactored Thomas solve of (I - dt A(t)) x = rhs, batched over rows.

    No pivoting: the matrix is strictly diagonally dominant with positive
    diagonal for any a > 0, so the elimination cannot break down.
    """

    def __init__(self, a_mid, dt, dx):
        r = dt / (dx * dx)
        n = a_mid.size - 1
        lower = -r * a_mid[:-1]          # subdiagonal, entry j couples j-1
        upper = -r * a_mid[1:]           # superdiagonal, entry j couples j+1
        diag = 1.0 + r * (a_mid[:-1] + a_mid[1:])
        denom = np.empty(n)
        w = np.empty(n)
        denom[0] = diag[0]
        w[0] = upper[0] / denom[0]
        for j in range(1, n):
            denom[j] = diag[j] - lower[j] * w[j - 1]
            w[j] = upper[j] / denom[j]
        assert np.all(denom > 0.0), "tridiagonal elimination broke down"
        self.n = n
        self._lower = lower.tolist()
        self._inv_denom = (1.0 / denom).tolist()
        self._w = w.tolist()

    def solve(self, rhs):
        n = self.n
        lo, inv, w = self._lower, self._inv_denom, self._w
        x = np.empty_like(rhs)
        x[..., 0] = rhs[..., 0] * inv[0]
        for j in range(1, n):
            x[..., j] = (rhs[..., j] - lo[j] * x[..., j - 1]) * inv[j]
        for j in range(n - 2, -1, -1):
            x[..., j] -= w[j] * x[..., j + 1]
        return x


def _factor_for(p: ProblemSpec, t_next: float, cache=None):
    if cache is not None and not p.op.time_dependent:
        if cache.get("factor") is None:
            a_mid = p.op.midpoint_values(t_next, p.grid)
            cache["factor"] = _TridiagFactor(a_mid, p.dt, p.grid.dx)
        return cache["factor"]
    a_mid = p.op.midpoint_values(t_next, p.grid)
    return _TridiagFactor(a_mid, p.dt, p.grid.dx)


def imex_em_step(p: ProblemSpec, h: HistoryBuffer, t: float,
                 dW: NoiseIncrement) -> Field:
    """One IMEX Euler-Maruyama step from the state at time t in h.

    Pure: h is not advanced (push the returned state to advance).  The
    increment dW must carry the problem's step size.
    """
    if not math.isclose(dW.dt, p.dt, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError("noise increment dt=%g does not match problem dt=%g"
                         % (dW.dt, p.dt))
    x = h.current()
    y = h.delayed()
    dx = p.grid.dx
    drift = np.asarray(p.drift.evaluate(t, x, y, dx), dtype=float)
    diff = np.asarray(p.diffusion.evaluate(t, x, y, dx), dtype=float)
    z = float(np.sum(dW.coords))
    rhs = x + p.dt * drift + diff * z
    factor = _factor_for(p, t + p.dt)
    out = factor.solve(rhs)
    return Field(p.grid, out[0] if out.ndim == 2 else out)


class Trajectory:
    """One sample path: per-step norms, optional snapshots, and a status."""

    def __init__(self, times, h_norms, v_norms, status, status_time=None,
                 snapshots=None, path_id=0):
        self.times = times
        self.h_norms = h_norms
        self.v_norms = v_norms
        self.status = status            # completed | exploded | clamped
        self.status_time = status_time
        self.snapshots = snapshots or []
        self.path_id = path_id

    def __repr__(self):
        return ("Trajectory(path_id=%d, steps=%d, status=%s)"
                % (self.path_id, len(self.times) - 1, self.status))


class BatchResult:
    """Ensemble run: norms are (n_paths, n_steps+1); dead entries are NaN."""

    def __init__(self, times, h_norms, v_norms, statuses, status_times,
                 path_ids):
        self.times = times
        self.h_norms = h_norms
        self.v_norms = v_norms
        self.statuses = statuses
        self.status_times = status_times
        self.path_ids = path_ids

    @property
    def n_paths(self):
        return len(self.path_ids)

    def exploded_ids(self):
        return [pid for pid, s in zip(self.path_ids, self.statuses)
                if s == "exploded"]


def simulate_paths(p: ProblemSpec, path_ids, record_v=None, clamp=False,
                   snapshot_steps=()) -> BatchResult:
    """Integrate a batch of paths; each path's arithmetic is identical to a
    single-path run, so results do not depend on how paths are grouped."""
    path_arr = np.asarray(list(path_ids), dtype=np.int64)
    B = path_arr.size
    n = p.grid.n_interior
    dx = p.grid.dx
    dt = p.dt
    n_steps = p.n_steps
    n_v = B if record_v is None else min(record_v, B)

    ring = p.history_values(B)
    head = p.m_delay
    x = ring[head]

    times = dt * np.arange(n_steps + 1)
    h_norms = np.full((B, n_steps + 1), np.nan)
    v_norms = np.full((n_v, n_steps + 1), np.nan) if n_v else None
    h_norms[:, 0] = np.sqrt(h_norm_sq_values(x, dx))
    if n_v:
        v_norms[:, 0] = np.sqrt(v_norm_sq_values(x[:n_v], dx))

    alive = np.ones(B, dtype=bool)
    statuses = ["completed"] * B
    status_times = [None] * B
    limit_sq = p.explosion_limit * p.explosion_limit
    cache = {}
    snapshots = {}
    snapshot_steps = set(int(s) for s in snapshot_steps)
    if 0 in snapshot_steps:
        snapshots[0] = x.copy()

    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * dt
        y = ring[(head + 1) % (p.m_delay + 1)]
        # a path heading for blow-up may overflow inside the coefficients;
        # that is detected and reported below, not warned about
        with np.errstate(over="ignore", invalid="ignore"):
            drift = np.asarray(p.drift.evaluate(t_prev, x, y, dx),
                               dtype=float)
            diff = np.asarray(p.diffusion.evaluate(t_prev, x, y, dx),
                              dtype=float)
            coords = p.noise.increments(path_arr, step - 1, dt)
            z = coords.sum(axis=1)[:, None]
            rhs = x + dt * drift + diff * z
            x_new = _factor_for(p, step * dt, cache).solve(rhs)
            hn2 = h_norm_sq_values(x_new, dx)

        finite = np.isfinite(hn2) & np.all(np.isfinite(x_new), axis=1)
        over = finite & (hn2 > limit_sq)
        if clamp:
            newly_clamped = over & alive
            if newly_clamped.any():
                with np.errstate(invalid="ignore", divide="ignore"):
                    scale = np.where(over,
                                     p.explosion_limit / np.sqrt(hn2), 1.0)
                x_new = x_new * scale[:, None]
                hn2 = np.where(over, limit_sq, hn2)
                for i in np.nonzero(newly_clamped)[0]:
                    if statuses[i] == "completed":
                        statuses[i] = "clamped"
                        status_times[i] = step * dt
            bad = ~finite
        else:
            bad = ~finite | over
        newly_bad = bad & alive
        if newly_bad.any():
            for i in np.nonzero(newly_bad)[0]:
                statuses[i] = "exploded"
                status_times[i] = step * dt
            alive &= ~bad
            x_new[bad] = 0.0
            hn2 = np.where(bad, np.nan, hn2)

        with np.errstate(invalid="ignore", over="ignore"):
            h_norms[:, step] = np.where(alive, np.sqrt(hn2), np.nan)
            if n_v:
                vn2 = v_norm_sq_values(x_new[:n_v], dx)
                v_norms[:, step] = np.where(alive[:n_v], np.sqrt(vn2), np.nan)

        head = (head + 1) % (p.m_delay + 1)
        ring[head] = x_new
        x = ring[head]
        if step in snapshot_steps:
            snapshots[step] = x.copy()

    res = BatchResult(times, h_norms, v_norms, statuses, status_times,
                      list(path_arr))
    res.snapshots = snapshots
    return res


def simulate(p: ProblemSpec, path_id: int, snapshot_times=(),
             clamp=False) -> Trajectory:
    """Integrate one path; deterministic given (p.noise.seed, path_id).

    On explosion the trajectory is truncated at the first bad step and the
    status records when it happened.
    """
    snap_steps = sorted({min(p.n_steps, int(round(t / p.dt)))
                         for t in snapshot_times})
    res = simulate_paths(p, [path_id], clamp=clamp, snapshot_steps=snap_steps)
    status = res.statuses[0]
    status_time = res.status_times[0]
    times = res.times
    h = res.h_norms[0]
    v = res.v_norms[0]
    if status == "exploded":
        last_good = int(round(status_time / p.dt)) - 1
        times = times[: last_good + 1]
        h = h[: last_good + 1]
        v = v[: last_good + 1]
    snaps = [(s * p.dt, Field(p.grid, res.snapshots[s][0]))
             for s in snap_steps if s in res.snapshots
             and np.all(np.isfinite(res.snapshots[s][0]))]
    return Trajectory(times, h, v, status, status_time, snaps,
                      path_id=int(path_id))


def truncate_problem(p: ProblemSpec, k: float) -> ProblemSpec:
    """Problem with drift/diffusion composed with radial projection onto
    the H ball of radius k (the device reducing local-Lipschitz existence
    to the globally Lipschitz case).  k must dominate the initial data."""
    if k < p.psi_h_bound:
        raise ValueError(
            "truncation below initial data: k=%g < psi bound %g"
            % (k, p.psi_h_bound))
    return p.replace(drift=BallClampedCoeff(p.drift, k),
                     diffusion=BallClampedCoeff(p.diffusion, k))


def stopping_time_sigma_k(traj: Trajectory, k: float):
    """First time the H norm reaches k, or None for 'never' (inf empty set).

    An exploded trajectory that never reached k before blowing up counts as
    crossing at its explosion time (the norm left every ball)."""
    hit = np.nonzero(traj.h_norms >= k)[0]
    if hit.size:
        return float(traj.times[hit[0]])
    if traj.status == "exploded":
        return float(traj.status_time)
    return None
