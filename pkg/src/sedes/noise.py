"""Driving noise for the delay integrator.

Two models: a real standard Brownian motion (the case used by every worked
example) and a truncated Q-Wiener process, represented through its
eigenvalue sequence lambda_1 >= lambda_2 >= ... >= lambda_M >= 0.  An
increment over a step of length dt carries the coordinates
sqrt(lambda_k) * (beta_k(t+dt) - beta_k(t)), one per retained mode.

Gaussians are generated counter-based: every draw is a pure function of
(seed, path_id, step_index, mode), obtained by hashing the key words with
the SplitMix64 finalizer and feeding two 53-bit uniforms to Box-Muller.
No generator state exists, so ensembles produce identical numbers no
matter how paths are scheduled or batched.  Transcendental evaluations
are always performed on buffers padded to a multiple of 64 entries so
that numpy never routes a straggler through a scalar libm path; this
keeps the stream bitwise reproducible across batch shapes.
"""

import math

import numpy as np

from .fields import Field, h_norm

__all__ = ["NoiseModel", "NoiseIncrement", "sample_increment", "hs_norm_sq"]

_U64 = np.uint64
_GOLD = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_S11 = _U64(11)
_TWO53 = 2.0 ** -53


def _mix64(z):
    """SplitMix64 finalizer, elementwise on uint64 arrays (bijective)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def _absorb(h, word):
    with np.errstate(over="ignore"):
        return _mix64(h ^ (np.asarray(word).astype(np.uint64) + _GOLD))


def keyed_words(seed, *keys):
    """64-bit hash words from (seed, keys...); keys broadcast elementwise."""
    h = _mix64(_U64(int(seed) & 0xFFFFFFFFFFFFFFFF) + _GOLD)
    for k in keys:
        h = _absorb(h, k)
    return h


def _uniform_from_words(words):
    """Map uint64 words to doubles in [0, 1) using the top 53 bits."""
    return (words >> _S11) * _TWO53


def _padded_transform(u1, u2):
    # Box-Muller on flat buffers padded to a multiple of 64 entries; the
    # padding keeps every element on numpy's vector code path so results
    # do not depend on the caller's batch shape.
    n = u1.size
    pad = (-n) % 64
    if pad:
        u1 = np.concatenate([u1, np.full(pad, 0.5)])
        u2 = np.concatenate([u2, np.full(pad, 0.5)])
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos((2.0 * math.pi) * u2)
    return z[:n] if pad else z


def keyed_gaussians(seed, *keys):
    """Standard normals keyed by (seed, keys...); broadcast over the keys."""
    h = keyed_words(seed, *keys)
    w1 = _absorb(h, 0x5151)
    w2 = _absorb(h, 0xA2A2)
    shape = w1.shape
    u1 = (_uniform_from_words(w1.reshape(-1)) + _TWO53)  # (0, 1]; log-safe
    u2 = _uniform_from_words(w2.reshape(-1))
    return _padded_transform(u1, u2).reshape(shape)


def keyed_uniforms(seed, *keys):
    """Uniforms in [0, 1) keyed by (seed, keys...)."""
    return _uniform_from_words(keyed_words(seed, *keys))


class NoiseModel:
    """Scalar Brownian motion or truncated Q-Wiener noise.

    eigenvalues must be nonincreasing and nonnegative with a finite sum
    (the trace of Q).  The scalar model is the q_wiener model with the
    single eigenvalue 1, kept as its own kind because it is what all the
    worked examples use.
    """

    def __init__(self, kind, eigenvalues=None, seed=0):
        if kind not in ("scalar", "q_wiener"):
            raise ValueError("unknown noise kind %r" % kind)
        self.kind = kind
        self.seed = int(seed)
        if kind == "scalar":
            if eigenvalues is not None:
                raise ValueError("scalar noise takes no eigenvalues")
            self.eigenvalues = np.ones(1)
        else:
            lam = np.asarray(eigenvalues, dtype=float)
            if lam.ndim != 1 or lam.size == 0:
                raise ValueError("q_wiener needs a 1-D eigenvalue sequence")
            if np.any(lam < 0) or not np.all(np.isfinite(lam)):
                raise ValueError("eigenvalues must be finite and >= 0")
            if np.any(np.diff(lam) > 0):
                raise ValueError("eigenvalues must be nonincreasing")
            self.eigenvalues = lam.copy()
        self.eigenvalues.flags.writeable = False
        self._sqrt_lam = np.sqrt(self.eigenvalues)
        self._sqrt_lam.flags.writeable = False

    @classmethod
    def scalar(cls, seed=0) -> "NoiseModel":
        return cls("scalar", seed=seed)

    @classmethod
    def q_wiener(cls, eigenvalues=None, n_modes=16, seed=0) -> "NoiseModel":
        """Truncated Q-Wiener model; defaults to lambda_k = 1/k^2, M modes."""
        if eigenvalues is None:
            k = np.arange(1, int(n_modes) + 1, dtype=float)
            eigenvalues = 1.0 / (k * k)
        return cls("q_wiener", eigenvalues=eigenvalues, seed=seed)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    def increments(self, path_ids, step_index, dt):
        """Batch of increment coordinates, shape (len(path_ids), n_modes)."""
        if dt <= 0:
            raise ValueError("nonpositive step")
        paths = np.atleast_1d(np.asarray(path_ids))
        modes = np.arange(self.n_modes)
        z = keyed_gaussians(self.seed, paths[:, None], int(step_index),
                            modes[None, :])
        return (math.sqrt(dt) * self._sqrt_lam) * z


class NoiseIncrement:
    """Coordinates sqrt(lambda_k) dbeta_k of one noise increment."""

    __slots__ = ("dt", "coords")

    def __init__(self, dt, coords):
        self.dt = float(dt)
        self.coords = np.asarray(coords, dtype=float)

    def __repr__(self):
        return "NoiseIncrement(dt=%g, coords=%s)" % (self.dt, self.coords)


def sample_increment(m: NoiseModel, path_id: int, step_index: int,
                     dt: float) -> NoiseIncrement:
    """Increment over [t_n, t_n + dt) for one path; pure in its arguments."""
    coords = m.increments([int(path_id)], int(step_index), dt)[0]
    return NoiseIncrement(dt, coords)


def hs_norm_sq(g_out, m: NoiseModel) -> float:
    """Squared Hilbert-Schmidt norm trace(G Q G*) of a diffusion output.

    g_out is one Field per retained mode (a bare Field for scalar noise).
    For the scalar model with Q the identity on R this is just the squared
    H norm of the single field.
    """
    if isinstance(g_out, Field):
        g_fields = [g_out]
    else:
        g_fields = list(g_out)
    if len(g_fields) != m.n_modes:
        raise ValueError(
            "diffusion output has %d mode fields, noise model has %d modes"
            % (len(g_fields), m.n_modes))
    total = 0.0
    for lam, g in zip(m.eigenvalues, g_fields):
        hn = h_norm(g)
        total += float(lam) * hn * hn
    return total
