"""Surface volumes, spherical cap volumes and two-cap intersections.

All cap volumes are normalized by the surface volume of the sphere, so they
are probabilities under the uniform distribution on ``S^d``.  The cap
``C(y; t)`` is ``{z : <y, z> >= t}``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .quadrature import integrate_batch
from .special import betainc_complement, betainc_reg, log_betainc_reg

BOUNDARY_TOL = 1e-12
CLAMP_TOL = 1e-9
LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the one-dimensional integrals.

    Attributes
    ----------
    rel_tol, abs_tol : float
        An integral is accepted when its error estimate is below
        ``max(abs_tol * scale, rel_tol * |value|)``.  ``scale`` is a natural
        upper bound of the integral (a single cap volume for ``V2``), so
        ``abs_tol`` acts relative to the magnitude of the problem.
    max_subdivisions : int
        Leaf interval limit per integral.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class CapSpec:
    """A spherical cap of height ``t`` on ``S^d``."""

    d: int
    t: float

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"sphere dimension must be >= 1, got {self.d}")
        object.__setattr__(self, "t", _clamp_height(self.t))

    @property
    def volume(self):
        return cap_volume(self.d, self.t)

    @property
    def log_volume(self):
        return log_cap_volume(self.d, self.t)

    def complement(self):
        """Cap of height ``-t``; its volume is ``1 - volume``."""
        return CapSpec(self.d, -self.t)


def _clamp_height(t, tol=BOUNDARY_TOL, name="cap height"):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(np.abs(t) > 1.0 + tol):
        raise DomainError(f"{name} outside [-1, 1]: {t}")
    t = np.clip(t, -1.0, 1.0)
    return t[()] if t.ndim == 0 else t


def clamp_cosine(u, name="cosine"):
    """Clamp a cosine that may overshoot ``[-1, 1]`` by rounding.

    Values further than ``CLAMP_TOL`` outside the interval raise
    :class:`DomainError`.
    """
    return _clamp_height(u, tol=CLAMP_TOL, name=name)


def surface_volume(d):
    """Surface volume ``omega_d = 2 pi^((d+1)/2) / Gamma((d+1)/2)`` of ``S^d``."""
    return np.exp(log_surface_volume(d))


def log_surface_volume(d):
    """``log(omega_d)``; stays finite for very large ``d``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("sphere dimension must be >= 0")
    out = math.log(2.0) + 0.5 * (d + 1.0) * math.log(math.pi) - gammaln(0.5 * (d + 1.0))
    return out[()] if np.ndim(out) == 0 else out


def projection_constant(d):
    """``omega_{d-1} / omega_d``, the normalizer of the projection density on ``S^d``."""
    d = np.asarray(d, dtype=float)
    out = np.exp(gammaln(0.5 * (d + 1.0)) - gammaln(0.5 * d) - 0.5 * math.log(math.pi))
    return out[()] if out.ndim == 0 else out


def projection_density(s, d):
    """Density of ``<z, y>`` for ``z`` uniform on ``S^d`` and fixed unit ``y``.

    Equal to ``(omega_{d-1} / omega_d) (1 - s^2)^(d/2 - 1)`` on ``(-1, 1)``.
    """
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        out = projection_constant(d) * ((1.0 - s) * (1.0 + s)) ** (0.5 * d - 1.0)
    out = np.where(np.abs(s) < 1.0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def _cap_volume_sat(d, t):
    """Cap volume with heights saturated to ``[-1, 1]``; also defined for ``d = 0``.

    ``S^0 = {-1, +1}``, so its cap volume is 1, 1/2 or 0.
    """
    d, t = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(t, dtype=float))
    t = np.clip(t, -1.0, 1.0)
    a = np.abs(t)
    x = (1.0 - a) * (1.0 + a)
    out = np.empty(t.shape)
    zero = d == 0
    if zero.any():
        tz = t[zero]
        out[zero] = np.where(tz <= -1.0, 1.0, np.where(tz <= 1.0, 0.5, 0.0))
    pos = ~zero
    if pos.any():
        dd, xx, aa, tt = d[pos], x[pos], a[pos], t[pos]
        half_i = 0.5 * betainc_reg(0.5 * dd, 0.5, xx, aa * aa)
        out[pos] = np.where(tt >= 0.0, half_i, 1.0 - half_i)
    return out[()] if out.ndim == 0 else out


def cap_volume(d, t):
    """Normalized volume of the cap ``C(y; t)`` on ``S^d``.

    Parameters
    ----------
    d : int or array_like
        Sphere dimension, at least 1.
    t : float or array_like
        Cap height in ``[-1, 1]``; values within ``1e-12`` outside are clamped.

    Returns
    -------
    float or ndarray
        ``I_{1-t^2}(d/2, 1/2) / 2`` for ``t >= 0`` and one minus that for
        ``t < 0``.

    Examples
    --------
    >>> cap_volume(5, 0.0)
    0.5
    >>> round(float(cap_volume(1, 0.5)), 12)   # arccos(0.5) / pi
    0.333333333333
    """
    if np.any(np.asarray(d) < 1):
        raise DomainError("sphere dimension must be >= 1")
    return _cap_volume_sat(d, _clamp_height(t))


def log_cap_volume(d, t):
    """Natural log of :func:`cap_volume`, accurate far below double underflow."""
    if np.any(np.asarray(d) < 1):
        raise DomainError("sphere dimension must be >= 1")
    t = _clamp_height(t)
    d, t = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(t, dtype=float))
    a = np.abs(t)
    x = (1.0 - a) * (1.0 + a)
    with np.errstate(divide="ignore"):
        upper = LOG_HALF + log_betainc_reg(0.5 * d, 0.5, x, a * a)
        # 1 - I/2 = (1 + (1 - I)) / 2
        lower = LOG_HALF + np.log1p(betainc_complement(0.5 * d, 0.5, x, a * a))
    out = np.where(t >= 0.0, upper, lower)
    return out[()] if out.ndim == 0 else out


def _cap_band(d, theta_a, theta_b):
    """``P(theta_a <= angle(z, y) <= theta_b)`` on ``S^d`` (clipped angles)."""
    ta = np.clip(theta_a, 0.0, math.pi)
    tb = np.clip(theta_b, 0.0, math.pi)
    return np.where(tb > ta, _cap_volume_sat(d, np.cos(tb)) - _cap_volume_sat(d, np.cos(ta)), 0.0)


def two_cap_batch(d, h1, h2, w, q=DEFAULT_QUADRATURE, scale=None, labels=None):
    """``P(<z, a> >= h1, <z, b> >= h2)`` for ``z`` uniform on ``S^d``.

    ``<a, b> = w`` must lie strictly inside ``(-1, 1)``; heights outside
    ``[-1, 1]`` saturate.  All arguments broadcast; ``d >= 1``.

    The angle ``theta`` between ``z`` and ``a`` is integrated with weight
    ``sin^(d-1) theta``.  Given ``theta`` the residual of ``z`` is uniform on
    ``S^(d-1)``, so the second cap contributes a cap volume on that sphere.
    The range of ``theta`` is cut where that inner volume saturates: it is 1
    for ``theta <= alpha2 - beta`` and 0 for ``theta`` outside
    ``[|alpha2 - beta|, alpha2 + beta]``, where ``alpha2 = arccos h2`` and
    ``beta = arccos w``.  Only the middle band needs quadrature.
    """
    d, h1, h2, w = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (d, h1, h2, w)))
    shape = d.shape
    d, h1, h2, w = (v.ravel() for v in (d, h1, h2, w))
    h1 = np.clip(h1, -1.0, 1.0)
    h2 = np.clip(h2, -1.0, 1.0)
    alpha1 = np.arccos(h1)
    alpha2 = np.arccos(h2)
    beta = np.arccos(w)
    sin_beta = np.sqrt((1.0 - w) * (1.0 + w))

    full_hi = np.minimum(alpha1, alpha2 - beta)
    out = _cap_band(d, 0.0, full_hi)

    lo = np.abs(alpha2 - beta)
    hi = np.minimum(alpha1, alpha2 + beta)
    hi = np.maximum(hi, lo)
    inner_d = d - 1.0
    const = projection_constant(d)

    def f(theta, owner):
        s = np.cos(theta)
        sn = np.sin(theta)
        o = owner[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            h = (h2[o] - s * w[o]) / (sn * sin_beta[o])
        h = np.where(np.isnan(h), 1.0, h)
        return const[o] * sn ** (d[o] - 1.0) * _cap_volume_sat(inner_d[o], h)

    if scale is None:
        scale = np.minimum(_cap_volume_sat(d, h1), _cap_volume_sat(d, h2))
    scale = np.broadcast_to(np.asarray(scale, dtype=float), d.shape)
    band, _ = integrate_batch(
        f, lo, hi, abs_tol=q.abs_tol * scale, rel_tol=q.rel_tol,
        max_subdivisions=q.max_subdivisions, labels=labels,
    )
    out = np.clip(out + band, 0.0, 1.0)
    return out.reshape(shape)


def cap_intersection_volume(u, t, d, q=DEFAULT_QUADRATURE, labels=None):
    """Volume ``V2(u; t, d)`` of the intersection of two caps of height ``t``.

    The caps sit on ``S^d`` with centers at inner product ``u``.

    Parameters
    ----------
    u : float or array_like
        Inner product of the two centers.
    t : float
        Common cap height.
    d : int
        Sphere dimension, at least 2.
    q : QuadratureConfig
    labels : sequence, optional
        One label per entry of ``u``, reported on quadrature failure.

    Returns
    -------
    float or ndarray
        ``u = 1`` gives the single cap volume.  ``u = -1`` gives 0 for
        ``t >= 0`` and ``1 - 2 cap_volume(d, |t|)`` otherwise.
    """
    if d < 2:
        raise DomainError(f"cap intersection needs d >= 2, got {d}")
    t = float(_clamp_height(t))
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(clamp_cosine(u, "center inner product"), dtype=float))
    single = float(_cap_volume_sat(d, t))
    out = np.empty(u.shape)
    top = np.abs(u - 1.0) <= BOUNDARY_TOL
    bottom = np.abs(u + 1.0) <= BOUNDARY_TOL
    out[top] = single
    out[bottom] = 0.0 if t >= 0.0 else 1.0 - 2.0 * float(_cap_volume_sat(d, -t))
    mid = ~(top | bottom)
    if mid.any():
        if labels is None:
            labels = [f"V2(u={v!r}, t={t!r}, d={d})" for v in u]
        lab = [labels[i] for i in np.flatnonzero(mid)]
        out[mid] = two_cap_batch(d, t, t, u[mid], q, scale=single, labels=lab)
    return float(out[0]) if scalar else out


def two_sided_cap_intersection(u, t, d, q=DEFAULT_QUADRATURE):
    """``P(|<z, x1>| >= |t|, |<z, x2>| >= |t|)`` with ``<x1, x2> = u``.

    Equal to ``2 V2(u; |t|) + 2 V2(-u; |t|)``.
    """
    t = abs(float(_clamp_height(t)))
    u = np.asarray(clamp_cosine(u, "center inner product"), dtype=float)
    both = cap_intersection_volume(np.concatenate([np.atleast_1d(u), -np.atleast_1d(u)]), t, d, q)
    k = np.atleast_1d(u).size
    out = np.clip(2.0 * both[:k] + 2.0 * both[k:], 0.0, 1.0)
    return float(out[0]) if u.ndim == 0 else out
