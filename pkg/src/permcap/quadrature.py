"""Batched adaptive Gauss-Kronrod (G10/K21) quadrature.

Many independent one-dimensional integrals are refined together so the
integrand is evaluated on large arrays.  Each integral owns a list of leaf
intervals; after every sweep an integral whose summed error estimate exceeds
its tolerance has its worst leaves bisected.  A leaf is bisected when its error
is larger than its share of the tolerance, proportional to its length, which
guarantees progress whenever the total error is too large.
"""

import numpy as np

from .errors import QuadratureError

# 21-point Kronrod abscissae on [0, 1]; the odd positions are the 10-point
# Gauss nodes.
XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980259540,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full symmetric rule on [-1, 1]: 21 Kronrod nodes, and Gauss weights placed
# on the matching positions (zero elsewhere).
NODES = np.concatenate([-XGK[:-1], XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([WGK[:-1], WGK[::-1]])
_wg_full = np.zeros(11)
_wg_full[1:10:2] = WG
GAUSS_WEIGHTS = np.concatenate([_wg_full[:-1], _wg_full[::-1]])

_EPS = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny


def _rule(f, lo, hi, owner):
    """Apply the G10/K21 pair to every interval; return (value, error, floor)."""
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = center[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x, owner), dtype=float)
    if fx.shape != x.shape:
        raise ValueError(f"integrand returned shape {fx.shape}, expected {x.shape}")
    hk = fx @ KRONROD_WEIGHTS
    hg = fx @ GAUSS_WEIGHTS
    mean = 0.5 * hk
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    resasc = np.abs(fx - mean[:, None]) @ KRONROD_WEIGHTS
    ahalf = np.abs(half)
    value = hk * half
    err = np.abs((hk - hg) * half)
    resabs = resabs * ahalf
    resasc = resasc * ahalf
    # QUADPACK error scaling
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0.0) & (err != 0.0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _UFLOW / (50.0 * _EPS), np.maximum(floor, err), err)
    return value, err, floor


def integrate_batch(f, a, b, abs_tol=1e-14, rel_tol=1e-10, max_subdivisions=200, labels=None):
    """Integrate ``f`` over ``[a[i], b[i]]`` for every ``i`` simultaneously.

    Parameters
    ----------
    f : callable
        ``f(x, owner)`` receives nodes ``x`` of shape ``(k, 21)`` and an integer
        array ``owner`` of shape ``(k,)`` naming the integral each row belongs
        to.  It must return values with the shape of ``x``.
    a, b : array_like
        Integration limits, broadcast to a common 1-D shape.  Empty intervals
        integrate to zero.
    abs_tol, rel_tol : float or array_like
        Per-integral tolerances; an integral is accepted once its error
        estimate is below ``max(abs_tol, rel_tol * |value|)``.
    max_subdivisions : int
        Maximum number of leaf intervals for any single integral.
    labels : sequence, optional
        Context attached to a :class:`QuadratureError` for the failing
        integral.

    Returns
    -------
    value, error : ndarray
        Integral values and error estimates.
    """
    a, b = np.broadcast_arrays(np.atleast_1d(np.asarray(a, dtype=float)),
                               np.atleast_1d(np.asarray(b, dtype=float)))
    m = a.size
    a = a.ravel()
    b = b.ravel()
    abs_tol = np.broadcast_to(np.asarray(abs_tol, dtype=float), (m,))
    rel_tol = np.broadcast_to(np.asarray(rel_tol, dtype=float), (m,))
    total_len = np.abs(b - a)

    owner = np.flatnonzero(total_len > 0)
    lo = a[owner]
    hi = b[owner]
    val, err, flo = _rule(f, lo, hi, owner)
    nleaves = np.bincount(owner, minlength=m)

    while True:
        total = np.bincount(owner, weights=val, minlength=m)
        total_err = np.bincount(owner, weights=err, minlength=m)
        # accumulated rounding noise bounds the attainable accuracy
        noise = np.bincount(owner, weights=flo, minlength=m)
        tol = np.maximum(np.maximum(abs_tol, rel_tol * np.abs(total)), 2.0 * noise)
        bad = total_err > tol
        if not bad.any():
            return total, total_err

        share = tol[owner] * np.abs(hi - lo) / total_len[owner]
        split = bad[owner] & (err > share) & (err > flo)
        # intervals at the resolution limit cannot be refined
        mid = 0.5 * (lo + hi)
        refinable = (mid != lo) & (mid != hi)
        stuck = bad & (np.bincount(owner, weights=(split & refinable), minlength=m) == 0)
        split &= refinable
        if stuck.any() or (nleaves + np.bincount(owner[split], minlength=m) > max_subdivisions).any():
            over = nleaves + np.bincount(owner[split], minlength=m) > max_subdivisions
            i = int(np.flatnonzero(stuck | over)[0])
            where = None if labels is None else labels[i]
            raise QuadratureError(
                f"tolerance {tol[i]:.3g} not reached (error estimate {total_err[i]:.3g}, "
                f"{nleaves[i]} subintervals)",
                where=where,
            )

        s_lo, s_hi, s_own = lo[split], hi[split], owner[split]
        s_mid = 0.5 * (s_lo + s_hi)
        new_lo = np.concatenate([s_lo, s_mid])
        new_hi = np.concatenate([s_mid, s_hi])
        new_own = np.concatenate([s_own, s_own])
        new_val, new_err, new_flo = _rule(f, new_lo, new_hi, new_own)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        owner = np.concatenate([owner[keep], new_own])
        val = np.concatenate([val[keep], new_val])
        err = np.concatenate([err[keep], new_err])
        flo = np.concatenate([flo[keep], new_flo])
        nleaves += np.bincount(s_own, minlength=m)


def integrate(f, a, b, abs_tol=1e-14, rel_tol=1e-10, max_subdivisions=200):
    """Scalar convenience wrapper around :func:`integrate_batch`.

    ``f`` takes a single array of nodes and returns values of the same shape.
    """
    value, error = integrate_batch(lambda x, _owner: f(x), a, b, abs_tol, rel_tol,
                                   max_subdivisions)
    return float(value[0]), float(error[0])
