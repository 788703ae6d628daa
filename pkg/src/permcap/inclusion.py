"""Inclusion probabilities for caps centered on a conditioned subsphere.

The cap center ``y`` is uniform on ``{y in S^d : <y, x_c> = rho_tilde}``, i.e.
``y = rho_tilde x_c + sqrt(1 - rho_tilde^2) y*`` with ``y*`` uniform on the
unit sphere ``S^(d-1)`` orthogonal to ``x_c``.  ``P1`` is the probability that
a fixed point ``x1`` with ``<x1, x_c> = u1`` lies in ``C(y; rho_hat)``; ``P2``
is the joint probability for two points.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .sphere import (
    BOUNDARY_TOL,
    DEFAULT_QUADRATURE,
    _cap_volume_sat,
    _clamp_height,
    clamp_cosine,
    two_cap_batch,
)


class EqualityClass(enum.Enum):
    """Which of ``x1``, ``x2`` and the center ``x_c`` coincide."""

    ALL_EQUAL = "x1 = x2 = xc"
    FIRST_IS_CENTER = "x1 = xc != x2"
    SECOND_IS_CENTER = "x2 = xc != x1"
    PAIR_EQUAL = "x1 = x2 != xc"
    DISTINCT = "all distinct"


@dataclass(frozen=True)
class SubsphereContext:
    """Dimension, conditioned inner product and cap height."""

    d: int
    rho_tilde: float
    rho_hat: float

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"need d >= 2, got {self.d}")
        object.__setattr__(self, "rho_tilde", float(_clamp_height(self.rho_tilde, name="rho_tilde")))
        object.__setattr__(self, "rho_hat", float(_clamp_height(self.rho_hat, name="rho_hat")))

    def two_sided(self):
        """Context with the cap height replaced by ``|rho_hat|``."""
        return SubsphereContext(self.d, self.rho_tilde, abs(self.rho_hat))


def _is_unit(v):
    return np.abs(np.abs(v) - 1.0) <= BOUNDARY_TOL


def _reduced_height(rt, rh, u):
    """Height of the cap seen by ``y*``: ``(rh - rt u) / sqrt((1 - rt^2)(1 - u^2))``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        h = (rh - rt * u) / np.sqrt((1.0 - rt) * (1.0 + rt) * (1.0 - u) * (1.0 + u))
    return np.clip(h, -1.0, 1.0)


def p1_batch(d, rho_tilde, rho_hat, u):
    """Vectorized :func:`single_inclusion` over ``u`` (and broadcast partners)."""
    rt, rh, u = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho_tilde, rho_hat, u)))
    u = np.asarray(clamp_cosine(u, "u1"), dtype=float)
    indicator = _is_unit(u) | _is_unit(rt)
    out = np.empty(u.shape)
    out[indicator] = (rt[indicator] * u[indicator] >= rh[indicator]).astype(float)
    gen = ~indicator
    if gen.any():
        out[gen] = _cap_volume_sat(d - 1, _reduced_height(rt[gen], rh[gen], u[gen]))
    return out


def single_inclusion(u1, ctx):
    """Probability that ``x1`` with ``<x1, x_c> = u1`` lies in ``C(y; rho_hat)``.

    Parameters
    ----------
    u1 : float
        Inner product of the fixed point with the center ``x_c``.
    ctx : SubsphereContext

    Returns
    -------
    float
        ``1(rho_tilde u1 >= rho_hat)`` when ``u1`` or ``rho_tilde`` is
        ``+-1``, otherwise the ``S^(d-1)`` cap volume at the reduced height.

    Examples
    --------
    >>> single_inclusion(1.0, SubsphereContext(10, 0.4, 0.4))
    1.0
    """
    return float(p1_batch(ctx.d, ctx.rho_tilde, ctx.rho_hat, u1))


def _p2_core(d, rt, rh, u1, u2, u3, q, labels=None):
    """Joint inclusion for arbitrary geometric configurations, vectorized.

    ``u1``, ``u2`` may be ``+-1`` (the point is ``+-x_c``), and the reduced
    cosine ``u3*`` may be ``+-1`` (reduced points collinear).
    """
    rt, rh, u1, u2, u3 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float).ravel() for v in (rt, rh, u1, u2, u3))
    )
    out = np.zeros(u1.shape)
    e1, e2, ert = _is_unit(u1), _is_unit(u2), _is_unit(rt)
    ind1 = (rt * u1 >= rh).astype(float)
    ind2 = (rt * u2 >= rh).astype(float)

    # deterministic inner products
    both = ert | (e1 & e2)
    out[both] = ind1[both] * ind2[both]
    only1 = e1 & ~both
    if only1.any():
        out[only1] = ind1[only1] * p1_batch(d, rt[only1], rh[only1], u2[only1])
    only2 = e2 & ~both & ~e1
    if only2.any():
        out[only2] = ind2[only2] * p1_batch(d, rt[only2], rh[only2], u1[only2])

    gen = ~(both | e1 | e2)
    if not gen.any():
        return out
    idx = np.flatnonzero(gen)
    r1 = _reduced_height(rt[idx], rh[idx], u1[idx])
    r2 = _reduced_height(rt[idx], rh[idx], u2[idx])
    with np.errstate(invalid="ignore"):
        w = (u3[idx] - u1[idx] * u2[idx]) / np.sqrt(
            (1.0 - u1[idx]) * (1.0 + u1[idx]) * (1.0 - u2[idx]) * (1.0 + u2[idx])
        )
    w = np.asarray(clamp_cosine(w, "reduced cosine u3*"), dtype=float)
    dm = d - 1
    vals = np.zeros(idx.size)

    empty = (r1 >= 1.0) | (r2 >= 1.0)
    full1 = (r1 <= -1.0) & ~empty
    full2 = (r2 <= -1.0) & ~empty & ~full1
    vals[full1] = _cap_volume_sat(dm, r2[full1])
    vals[full2] = _cap_volume_sat(dm, r1[full2])
    rest = ~(empty | full1 | full2)

    same = rest & (w >= 1.0 - BOUNDARY_TOL)
    vals[same] = _cap_volume_sat(dm, np.maximum(r1[same], r2[same]))
    opposite = rest & (w <= -1.0 + BOUNDARY_TOL)
    band = _cap_volume_sat(dm, r1[opposite]) - _cap_volume_sat(dm, -r2[opposite])
    vals[opposite] = np.where(r1[opposite] <= -r2[opposite], np.maximum(band, 0.0), 0.0)

    generic = rest & ~same & ~opposite
    if generic.any():
        lab = None if labels is None else [labels[i] for i in idx[generic]]
        vals[generic] = two_cap_batch(dm, r1[generic], r2[generic], w[generic], q, labels=lab)
    out[idx] = vals
    return out


def _check_class(u1, u2, u3, cls):
    one = lambda v: abs(v - 1.0) <= BOUNDARY_TOL  # noqa: E731
    expect = {
        EqualityClass.ALL_EQUAL: one(u1) and one(u2) and one(u3),
        EqualityClass.FIRST_IS_CENTER: one(u1) and not one(u2) and abs(u2 - u3) <= BOUNDARY_TOL,
        EqualityClass.SECOND_IS_CENTER: one(u2) and not one(u1) and abs(u1 - u3) <= BOUNDARY_TOL,
        EqualityClass.PAIR_EQUAL: one(u3) and not one(u1) and abs(u1 - u2) <= BOUNDARY_TOL,
        EqualityClass.DISTINCT: not (one(u1) or one(u2) or one(u3)),
    }[cls]
    if not expect:
        raise DomainError(f"inner products ({u1}, {u2}, {u3}) inconsistent with {cls.value}")
    if cls is EqualityClass.DISTINCT and abs(u1 + 1.0) <= BOUNDARY_TOL and abs(u2 + 1.0) <= BOUNDARY_TOL:
        # both points antipodal to the center would make them equal
        raise DomainError("u1 = u2 = -1 cannot occur for distinct points")


def double_inclusion(u1, u2, u3, equality_class, ctx, q=DEFAULT_QUADRATURE):
    """Probability that both ``x1`` and ``x2`` lie in ``C(y; rho_hat)``.

    Parameters
    ----------
    u1, u2 : float
        Inner products ``<x1, x_c>`` and ``<x2, x_c>``.
    u3 : float
        Inner product ``<x1, x2>``.
    equality_class : EqualityClass
        Which points coincide; supplied by the caller, who knows the swap
        distances exactly.
    ctx : SubsphereContext
    q : QuadratureConfig

    Returns
    -------
    float
    """
    u1, u2, u3 = (float(clamp_cosine(v, n)) for v, n in ((u1, "u1"), (u2, "u2"), (u3, "u3")))
    _check_class(u1, u2, u3, equality_class)
    rt, rh, d = ctx.rho_tilde, ctx.rho_hat, ctx.d
    if equality_class is EqualityClass.ALL_EQUAL:
        return float(rt >= rh)
    if equality_class is EqualityClass.FIRST_IS_CENTER:
        return float(rt >= rh) * single_inclusion(u2, ctx)
    if equality_class is EqualityClass.SECOND_IS_CENTER:
        return float(rt >= rh) * single_inclusion(u1, ctx)
    if equality_class is EqualityClass.PAIR_EQUAL:
        return single_inclusion(u1, ctx)
    label = [f"P2(u1={u1!r}, u2={u2!r}, u3={u3!r}, rho_tilde={rt!r}, rho_hat={rh!r}, d={d})"]
    return float(_p2_core(d, rt, rh, u1, u2, u3, q, labels=label)[0])


def p2_distinct_batch(d, rho_tilde, rho_hat, u1, u2, u3, q=DEFAULT_QUADRATURE, labels=None):
    """Vectorized ``P2`` for pairwise distinct points."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if np.any((np.abs(u1 + 1.0) <= BOUNDARY_TOL) & (np.abs(u2 + 1.0) <= BOUNDARY_TOL)):
        raise DomainError("u1 = u2 = -1 cannot occur for distinct points")
    return _p2_core(d, rho_tilde, rho_hat, u1, u2, u3, q, labels)


def p1_two_sided_batch(d, rho_tilde, rho_hat, u):
    """Vectorized :func:`two_sided_single`."""
    c = np.abs(np.asarray(rho_hat, dtype=float))
    u = np.asarray(u, dtype=float)
    out = p1_batch(d, rho_tilde, c, u) + p1_batch(d, rho_tilde, c, -u)
    # |<y, x1>| >= 0 always holds; the two halves would double count it
    return np.where(c == 0.0, 1.0, np.minimum(out, 1.0))


def two_sided_single(u1, ctx):
    """``P(|<y, x1>| >= |rho_hat|) = P1(u1, |rho_hat|) + P1(-u1, |rho_hat|)``.

    At ``rho_hat = 0`` the event is certain and 1 is returned.
    """
    return float(p1_two_sided_batch(ctx.d, ctx.rho_tilde, ctx.rho_hat, u1))


_SIGN_PATTERNS = ((1, 1, 1), (-1, 1, -1), (1, -1, -1), (-1, -1, 1))


def p2_two_sided_batch(d, rho_tilde, rho_hat, u1, u2, u3, q=DEFAULT_QUADRATURE, labels=None):
    """Vectorized two-sided ``P2``: the four sign patterns of ``(u1, u2, u3)``.

    Each pattern replaces ``x1`` and/or ``x2`` by its antipode.  Returns 1
    where ``rho_hat = 0``.
    """
    c = np.abs(np.asarray(rho_hat, dtype=float))
    rt, c, u1, u2, u3 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float).ravel() for v in (rho_tilde, c, u1, u2, u3))
    )
    k = u1.size
    stack = lambda v, signs: np.concatenate([s * v for s in signs])  # noqa: E731
    s1, s2, s3 = zip(*_SIGN_PATTERNS)
    lab = None if labels is None else [f"{lbl} sign pattern {p}" for p in _SIGN_PATTERNS for lbl in labels]
    terms = _p2_core(
        d, np.tile(rt, 4), np.tile(c, 4), stack(u1, s1), stack(u2, s2), stack(u3, s3), q, lab
    )
    out = terms.reshape(4, k).sum(axis=0)
    return np.where(c == 0.0, 1.0, np.clip(out, 0.0, 1.0))


def two_sided_double(u1, u2, u3, equality_class, ctx, q=DEFAULT_QUADRATURE):
    """``P(|<y, x1>| >= |rho_hat|, |<y, x2>| >= |rho_hat|)``.

    Sum of ``P2`` over the sign patterns ``(u1, u2, u3)``, ``(-u1, u2, -u3)``,
    ``(u1, -u2, -u3)`` and ``(-u1, -u2, u3)`` at height ``|rho_hat|``.
    """
    u1, u2, u3 = (float(clamp_cosine(v, n)) for v, n in ((u1, "u1"), (u2, "u2"), (u3, "u3")))
    _check_class(u1, u2, u3, equality_class)
    label = [f"two-sided P2(u1={u1!r}, u2={u2!r}, u3={u3!r}, rho_tilde={ctx.rho_tilde!r}, "
             f"rho_hat={ctx.rho_hat!r}, d={ctx.d})"]
    return float(p2_two_sided_batch(ctx.d, ctx.rho_tilde, ctx.rho_hat, u1, u2, u3, q, label)[0])
