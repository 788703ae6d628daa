"""Closed-form approximations to permutation p-values and their moments.

For a binary label vector ``x0`` and a response ``y0``, both centered and
scaled to the unit sphere, the one-sided permutation p-value of the linear
statistic ``rho_hat = <x0, y0>`` is the fraction of the ``N`` label
permutations ``x_k`` with ``<x_k, y0> >= rho_hat``.  Treating ``y0`` as a
random cap center gives three estimates:

* ``p1``: the cap volume, the mean of ``p`` for ``y`` uniform on the sphere;
* ``p2``: the mean of ``p`` for ``y`` uniform on ``{<y, x0> = rho_hat}``;
* ``p3``: as ``p2`` but conditioning on the permutation closest to ``y0``.

Second moments of ``p`` under the same models give RMSE values for each
estimate.
"""

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .combinatorics import (
    GroupSizes,
    count_at_distance,
    distance_weights,
    inner_product_at_swap,
    swap_distance,
    triple_table,
)
from .errors import DegenerateInputError, DomainError
from .inclusion import (
    p1_batch,
    p1_two_sided_batch,
    p2_distinct_batch,
    p2_two_sided_batch,
)
from .sphere import (
    DEFAULT_QUADRATURE,
    _clamp_height,
    cap_intersection_volume,
    cap_volume,
    log_cap_volume,
)

LN10 = math.log(10.0)
NORM_TOL = 1e-10
CLAMP_WARN = 1e-10


class Sided(enum.Enum):
    ONE = "one"
    TWO = "two"


class Estimator(enum.Enum):
    P1 = "p1"
    P2 = "p2"
    P3 = "p3"


def _sided(s):
    return s if isinstance(s, Sided) else Sided(s)


def _estimator(e):
    return e if isinstance(e, Estimator) else Estimator(e)


def standardized_labels(labels):
    """Map a binary label vector to the centered unit vector with the same order.

    Label 1 maps to ``sqrt(m0 / (n m1))`` and label 0 to ``-sqrt(m1 / (n m0))``.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or not np.isin(labels, (0, 1)).all():
        raise DomainError("labels must be a 1-D array of 0/1 values")
    n = labels.size
    m1 = int(labels.sum())
    m0 = n - m1
    if m0 == 0 or m1 == 0:
        raise DegenerateInputError("both label classes must be present")
    hi = math.sqrt(m0 / (n * m1))
    lo = -math.sqrt(m1 / (n * m0))
    return np.where(labels == 1, hi, lo)


@dataclass(frozen=True)
class StandardizedPair:
    """Standardized labels ``x0`` and response ``y0`` on the unit sphere.

    Attributes
    ----------
    labels : ndarray of int
        Original 0/1 labels.
    x0, y0 : ndarray
        Centered unit vectors.
    g : GroupSizes
    rho_hat : float
        ``<x0, y0>``, the sample correlation of labels and response.
    """

    labels: np.ndarray
    x0: np.ndarray
    y0: np.ndarray
    g: GroupSizes
    rho_hat: float

    def __post_init__(self):
        for name in ("x0", "y0"):
            v = getattr(self, name)
            if abs(np.linalg.norm(v) - 1.0) > NORM_TOL or abs(v.sum()) > NORM_TOL:
                raise DomainError(f"{name} must be a centered unit vector")
        x_expected = standardized_labels(self.labels)
        if not np.allclose(self.x0, x_expected, rtol=0.0, atol=NORM_TOL):
            raise DomainError("x0 does not match the standardized labels")

    @property
    def d(self):
        return self.g.n - 2

    @classmethod
    def from_data(cls, labels, response):
        """Center and scale a response against binary labels.

        Raises
        ------
        DegenerateInputError
            If the response is constant or one label class is empty.
        """
        labels = np.asarray(labels).astype(int)
        y = np.asarray(response, dtype=float)
        if y.shape != labels.shape:
            raise DomainError("labels and response must have the same length")
        x0 = standardized_labels(labels)
        yc = y - y.mean()
        norm = np.linalg.norm(yc)
        if not np.isfinite(norm) or norm <= 1e-300 or norm <= 1e-14 * np.abs(y).max():
            raise DegenerateInputError("response has zero variance")
        y0 = yc / norm
        y0 = y0 - y0.mean()
        y0 = y0 / np.linalg.norm(y0)
        m1 = int(labels.sum())
        g = GroupSizes(labels.size - m1, m1)
        rho = float(np.clip(x0 @ y0, -1.0, 1.0))
        return cls(labels, x0, y0, g, rho)


@dataclass(frozen=True)
class MomentReport:
    """An estimate of a permutation p-value together with its error model.

    ``reference`` names the model under which the second moment was taken:
    1 for ``y`` uniform on the sphere, 2 for ``y`` uniform on the
    conditioned subsphere.
    """

    estimator: Estimator
    sided: Sided
    estimate: float
    second_moment: float
    variance: float
    rmse: float
    cv: float
    log10_estimate: float
    granularity: float
    log10_granularity: float
    reference: int
    rho_hat: float
    rho_tilde: float
    variance_clamped: bool = False


def _finish_report(estimator, sided, g, estimate, second, log10_est, reference, rho_hat, rho_tilde):
    log_n = g.log_n_orbit
    variance = second - estimate * estimate
    clamped = False
    if variance < 0.0:
        if variance < -CLAMP_WARN * estimate * estimate:
            clamped = True
            warnings.warn(
                f"negative variance {variance:.3g} clamped to 0 for {estimator.value}",
                RuntimeWarning, stacklevel=3,
            )
        variance = 0.0
    rmse = math.sqrt(variance)
    if estimate > 0.0:
        cv = rmse / estimate
    else:
        cv = 0.0 if rmse == 0.0 else math.inf
    return MomentReport(
        estimator=estimator, sided=sided, estimate=estimate, second_moment=second,
        variance=variance, rmse=rmse, cv=cv, log10_estimate=log10_est,
        granularity=math.exp(-log_n), log10_granularity=-log_n / LN10, reference=reference,
        rho_hat=rho_hat, rho_tilde=rho_tilde, variance_clamped=clamped,
    )


def _p1_value(d, t, sided):
    if sided is Sided.ONE:
        return float(cap_volume(d, t)), float(log_cap_volume(d, t)) / LN10
    a = abs(t)
    return float(min(1.0, 2.0 * cap_volume(d, a))), min(0.0, (math.log(2.0) + float(log_cap_volume(d, a))) / LN10)


def var_ref1(g, t, sided=Sided.ONE, q=DEFAULT_QUADRATURE):
    """Variance of ``p(y, t)`` for ``y`` uniform on ``S^d``.

    ``(1/N) sum_r C(m0, r) C(m1, r) V2(u(r); t, d) - p1(t)^2``; the two-sided
    version replaces ``V2`` with the two-sided intersection and ``p1`` with
    ``2 cap_volume(d, |t|)``.

    Parameters
    ----------
    g : GroupSizes
    t : float
        Cap height.
    sided : Sided or str
    q : QuadratureConfig

    Returns
    -------
    float
        Not clamped; may be slightly negative from rounding.
    """
    sided = _sided(sided)
    t = float(_clamp_height(t))
    d = g.d
    r = np.arange(g.m_min + 1)
    u = inner_product_at_swap(r, g)
    w = distance_weights(g)
    if sided is Sided.ONE:
        labels = [f"var_ref1 term r={k} (u={v!r}, t={t!r}, d={d})" for k, v in zip(r, u)]
        v2 = cap_intersection_volume(u, t, d, q, labels=labels)
    else:
        a = abs(t)
        uu = np.concatenate([u, -u])
        labels = [f"var_ref1 two-sided term r={k} (u={v!r}, t={a!r}, d={d})"
                  for k, v in zip(np.concatenate([r, r]), uu)]
        both = cap_intersection_volume(uu, a, d, q, labels=labels)
        v2 = np.clip(2.0 * both[: r.size] + 2.0 * both[r.size:], 0.0, 1.0)
    mean, _ = _p1_value(d, t, sided)
    return math.fsum(w * v2) - mean * mean


def p_hat1(sp, sided=Sided.ONE, q=DEFAULT_QUADRATURE, with_variance=True):
    """Cap-volume estimate with its variance under the uniform-sphere model.

    Parameters
    ----------
    sp : StandardizedPair
    sided : Sided or str
        ``"two"`` gives ``2 cap_volume(d, |rho_hat|)``.
    with_variance : bool
        Skip the ``O(m_min)`` quadratures when False; variance fields are
        then NaN.

    Returns
    -------
    MomentReport
    """
    sided = _sided(sided)
    est, log10_est = _p1_value(sp.d, sp.rho_hat, sided)
    if not with_variance:
        return MomentReport(Estimator.P1, sided, est, math.nan, math.nan, math.nan, math.nan,
                            log10_est, math.exp(-sp.g.log_n_orbit), -sp.g.log_n_orbit / LN10,
                            1, sp.rho_hat, sp.rho_hat)
    second = var_ref1(sp.g, sp.rho_hat, sided, q) + est * est
    return _finish_report(Estimator.P1, sided, sp.g, est, second, log10_est, 1, sp.rho_hat, sp.rho_hat)


def choose_conditioning_point(sp, estimator=Estimator.P3, sided=Sided.ONE):
    """Center ``x_c`` for the conditioned model.

    Returns
    -------
    xc : ndarray
        Standardized label vector used as the center.
    rho_tilde : float
        ``<xc, y0>``.
    r_c : int
        Swap distance between ``xc`` and ``x0``.

    Notes
    -----
    For ``p3`` the label permutation maximizing ``<x_k, y0>`` puts the ones
    on the ``m1`` largest entries of ``y0``.  Ties are broken toward the
    lowest index.  The two-sided version also considers the minimizing
    assignment, on the ``m1`` smallest entries, and keeps whichever has the
    larger ``|<x_k, y0>|``, preferring the maximizer on a tie.
    """
    estimator = _estimator(estimator)
    sided = _sided(sided)
    if estimator is Estimator.P2:
        return sp.x0.copy(), sp.rho_hat, 0
    if estimator is not Estimator.P3:
        raise DomainError("conditioning point is only defined for p2 and p3")
    m1 = sp.g.m1
    n = sp.g.n
    top = np.argsort(-sp.y0, kind="stable")[:m1]
    lab_max = np.zeros(n, dtype=int)
    lab_max[top] = 1
    x_max = standardized_labels(lab_max)
    rho_max = float(np.clip(x_max @ sp.y0, -1.0, 1.0))
    best_lab, best_x, best_rho = lab_max, x_max, rho_max
    if sided is Sided.TWO:
        bottom = np.argsort(sp.y0, kind="stable")[:m1]
        lab_min = np.zeros(n, dtype=int)
        lab_min[bottom] = 1
        x_min = standardized_labels(lab_min)
        rho_min = float(np.clip(x_min @ sp.y0, -1.0, 1.0))
        if abs(rho_min) > abs(rho_max):
            best_lab, best_x, best_rho = lab_min, x_min, rho_min
    return best_x, best_rho, swap_distance(best_lab, sp.labels)


def tilde_p_c(g, d, rho_tilde, rho_hat, sided=Sided.ONE):
    """Mean of ``p(y, rho_hat)`` for ``y`` uniform on ``{<y, x_c> = rho_tilde}``.

    ``(1/N) sum_r C(m0, r) C(m1, r) P1(u(r), rho_tilde, rho_hat)``; the
    two-sided version uses the two-sided ``P1``.  One-sided values are at
    least ``1/N`` whenever ``rho_tilde >= rho_hat``.
    """
    sided = _sided(sided)
    rho_tilde = float(_clamp_height(rho_tilde, name="rho_tilde"))
    rho_hat = float(_clamp_height(rho_hat, name="rho_hat"))
    r = np.arange(g.m_min + 1)
    u = inner_product_at_swap(r, g)
    w = distance_weights(g)
    if sided is Sided.ONE:
        p1 = p1_batch(d, rho_tilde, rho_hat, u)
    else:
        p1 = p1_two_sided_batch(d, rho_tilde, rho_hat, u)
    return math.fsum(w * p1)


class SecondMomentDetail(NamedTuple):
    """Second moment with bookkeeping from the pruned pair sum."""

    value: float
    truncation_bound: float
    n_triples: int
    n_evaluated: int


def second_moment_weights(g):
    """Pair-class weights divided by ``N^2``, as used by :func:`second_moment_ref2`.

    Returns
    -------
    dict
        ``both_center`` (scalar), ``one_center`` and ``same_point`` (arrays
        over ``r = 1..m_min``, the former counting both orders), and
        ``distinct`` as ``(r1, r2, r3, weight)`` arrays restricted to
        ``r1 <= r2`` with off-diagonal rows doubled.
    """
    log_n2 = 2.0 * g.log_n_orbit
    r = np.arange(1, g.m_min + 1)
    w_r = np.exp(count_at_distance(r, g) - log_n2)
    table = triple_table(g)
    keep = table.r1 <= table.r2
    mult = np.where(table.r1[keep] < table.r2[keep], 2.0, 1.0)
    w_t = mult * np.exp(table.log_count[keep] - log_n2)
    return {
        "both_center": math.exp(-log_n2),
        "one_center": 2.0 * w_r,
        "same_point": w_r,
        "distinct": (table.r1[keep], table.r2[keep], table.r3[keep], w_t),
    }


def second_moment_detail(g, d, rho_tilde, rho_hat, sided=Sided.ONE, q=DEFAULT_QUADRATURE,
                         prune_rel_tol=None, batch_size=4096):
    """Second moment of ``p(y, rho_hat)`` under the conditioned model, with diagnostics.

    Distinct-pair terms are bounded by ``count * min(P1(u1), P1(u2))`` and
    evaluated in decreasing order of that bound.  Evaluation stops once the
    bounds of the remaining terms sum to at most ``prune_rel_tol`` times the
    running total, so the result is low by at most that relative amount.
    ``prune_rel_tol`` defaults to ``q.rel_tol``; pass 0 to evaluate every
    term.
    """
    sided = _sided(sided)
    rho_tilde = float(_clamp_height(rho_tilde, name="rho_tilde"))
    rho_hat = float(_clamp_height(rho_hat, name="rho_hat"))
    if prune_rel_tol is None:
        prune_rel_tol = q.rel_tol
    weights = second_moment_weights(g)
    r = np.arange(0, g.m_min + 1)
    u = inner_product_at_swap(r, g)
    if sided is Sided.ONE:
        p1 = p1_batch(d, rho_tilde, rho_hat, u)
        center_in = float(rho_tilde >= rho_hat)
    else:
        p1 = p1_two_sided_batch(d, rho_tilde, rho_hat, u)
        center_in = 1.0 if rho_hat == 0.0 else float(abs(rho_tilde) >= abs(rho_hat))

    terms = [weights["both_center"] * center_in]
    # x_k = x_c: the joint event is the center indicator times P1 of the other point
    if sided is Sided.ONE:
        p2_center = center_in * p1[1:]
    else:
        ones = np.ones(g.m_min)
        p2_center = p2_two_sided_batch(d, rho_tilde, rho_hat, ones, u[1:], u[1:], q)
    terms.extend(weights["one_center"] * p2_center)
    terms.extend(weights["same_point"] * p1[1:])

    r1, r2, r3, w_t = weights["distinct"]
    bound = w_t * np.minimum(p1[r1], p1[r2])
    live = np.flatnonzero(bound > 0.0)
    order = live[np.argsort(-bound[live], kind="stable")]
    tail = np.cumsum(bound[order][::-1])[::-1]
    running = math.fsum(terms)
    evaluated = 0
    truncation = 0.0
    for start in range(0, order.size, batch_size):
        if prune_rel_tol > 0.0 and tail[start] <= prune_rel_tol * running:
            truncation = float(tail[start])
            break
        idx = order[start:start + batch_size]
        u1, u2, u3 = u[r1[idx]], u[r2[idx]], u[r3[idx]]
        labels = [f"P2 cell (r1={a}, r2={b}, r3={c})" for a, b, c in zip(r1[idx], r2[idx], r3[idx])]
        if sided is Sided.ONE:
            p2 = p2_distinct_batch(d, rho_tilde, rho_hat, u1, u2, u3, q, labels)
        else:
            p2 = p2_two_sided_batch(d, rho_tilde, rho_hat, u1, u2, u3, q, labels)
        terms.extend(w_t[idx] * p2)
        running = math.fsum(terms)
        evaluated += idx.size
    return SecondMomentDetail(running, truncation, int(r1.size), evaluated)


def second_moment_ref2(g, d, rho_tilde, rho_hat, sided=Sided.ONE, q=DEFAULT_QUADRATURE,
                       prune_rel_tol=None):
    """``E[p(y, rho_hat)^2]`` for ``y`` uniform on ``{<y, x_c> = rho_tilde}``.

    Sums the joint inclusion probability over every ordered pair of
    permutations, grouped by their swap distances to the center and to each
    other.

    Parameters
    ----------
    g : GroupSizes
    d : int
        Sphere dimension, ``m0 + m1 - 2``.
    rho_tilde, rho_hat : float
    sided : Sided or str
    q : QuadratureConfig
    prune_rel_tol : float, optional
        See :func:`second_moment_detail`.

    Returns
    -------
    float

    Notes
    -----
    Results are memoized on the full argument tuple, since ``p2`` and the
    conditioned RMSE of ``p1`` share the same moment.
    """
    return _second_moment_cached(g, int(d), float(rho_tilde), float(rho_hat), _sided(sided), q,
                                 prune_rel_tol)


@lru_cache(maxsize=512)
def _second_moment_cached(g, d, rho_tilde, rho_hat, sided, q, prune_rel_tol):
    return second_moment_detail(g, d, rho_tilde, rho_hat, sided, q, prune_rel_tol).value


def report(sp, estimator=Estimator.P2, sided=Sided.ONE, q=DEFAULT_QUADRATURE, with_rmse=True):
    """Estimate and error model for one estimator.

    Parameters
    ----------
    sp : StandardizedPair
    estimator : Estimator or str
    sided : Sided or str
    q : QuadratureConfig
    with_rmse : bool
        When False only the estimate is computed; moment fields are NaN.

    Returns
    -------
    MomentReport
    """
    estimator = _estimator(estimator)
    sided = _sided(sided)
    if estimator is Estimator.P1:
        return p_hat1(sp, sided, q, with_variance=with_rmse)
    _, rho_tilde, _ = choose_conditioning_point(sp, estimator, sided)
    est = tilde_p_c(sp.g, sp.d, rho_tilde, sp.rho_hat, sided)
    log10_est = math.log10(est) if est > 0.0 else -math.inf
    if not with_rmse:
        return MomentReport(estimator, sided, est, math.nan, math.nan, math.nan, math.nan,
                            log10_est, math.exp(-sp.g.log_n_orbit), -sp.g.log_n_orbit / LN10,
                            2, sp.rho_hat, rho_tilde)
    second = second_moment_ref2(sp.g, sp.d, rho_tilde, sp.rho_hat, sided, q)
    return _finish_report(estimator, sided, sp.g, est, second, log10_est, 2, sp.rho_hat, rho_tilde)


def rmse_ref2_of_p1(sp, sided=Sided.ONE, q=DEFAULT_QUADRATURE):
    """RMSE of the cap-volume estimate when ``y`` follows the conditioned model at ``x0``.

    ``sqrt(E2[p^2] - 2 p1 p2 + p1^2)``, where ``p2`` and ``E2[p^2]`` are the
    first two moments given ``<y, x0> = rho_hat``.
    """
    sided = _sided(sided)
    p1, _ = _p1_value(sp.d, sp.rho_hat, sided)
    p2 = tilde_p_c(sp.g, sp.d, sp.rho_hat, sp.rho_hat, sided)
    m2 = second_moment_ref2(sp.g, sp.d, sp.rho_hat, sp.rho_hat, sided, q)
    return math.sqrt(max(0.0, m2 - 2.0 * p1 * p2 + p1 * p1))


class ChebychevBound(NamedTuple):
    """Conservative p-value from the first two moments."""

    p_star: float
    lambda_used: float
    closed_form: float


def chebychev_bound(mu, sigma):
    """Minimize ``mu + lambda sigma + 1 / (1 + lambda^2)`` over ``lambda > 0``.

    The minimizer solves ``2 lambda = sigma (1 + lambda^2)^2``; the larger
    root is found by bracketing root search.  When no root exists the
    objective increases on ``lambda > 0`` and ``lambda = 0`` is used.  Both
    ``p_star`` and the closed form ``mu + (2^(1/3) + 2^(-2/3)) sigma^(2/3)``
    are capped at 1.

    Examples
    --------
    >>> b = chebychev_bound(1e-30, 3e-30)
    >>> b.closed_form <= 4e-20
    True
    """
    if mu < 0 or sigma < 0 or not (math.isfinite(mu) and math.isfinite(sigma)):
        raise DomainError("mu and sigma must be finite and non-negative")
    closed = min(1.0, mu + (2.0 ** (1.0 / 3.0) + 2.0 ** (-2.0 / 3.0)) * sigma ** (2.0 / 3.0))
    if sigma == 0.0:
        return ChebychevBound(min(1.0, mu), math.inf, closed)

    def objective(lam):
        return mu + lam * sigma + 1.0 / (1.0 + lam * lam)

    # 2 lam / (1 + lam^2)^2 peaks at lam = 1/sqrt(3) with value 3 sqrt(3) / 8
    peak = 1.0 / math.sqrt(3.0)
    if sigma >= 3.0 * math.sqrt(3.0) / 8.0:
        lam = 0.0
    else:
        # split the power so subnormal sigma does not overflow
        hi = 2.0 * 2.0 ** (1.0 / 3.0) * sigma ** (-1.0 / 3.0) + 1.0

        def h(lam):
            # scaled by lam^-4 so the root search stays well conditioned for huge lam
            inv = 1.0 / lam
            return sigma * (inv * inv + 1.0) ** 2 - 2.0 * inv ** 3

        lam = brentq(h, peak, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        if objective(lam) > objective(0.0):
            lam = 0.0
    return ChebychevBound(min(1.0, objective(lam)), lam, closed)


def z_score(p_true, estimate, rmse):
    """``(p_true - estimate) / rmse``.

    With ``rmse = 0`` the score is 0 when ``p_true`` equals ``estimate`` (to
    relative precision ``1e-9``) and signed infinity otherwise.
    """
    if rmse < 0 or math.isnan(rmse):
        raise DomainError("rmse must be non-negative")
    diff = p_true - estimate
    if rmse == 0.0:
        if math.isclose(p_true, estimate, rel_tol=1e-9, abs_tol=0.0):
            return 0.0
        return math.copysign(math.inf, diff)
    return diff / rmse

