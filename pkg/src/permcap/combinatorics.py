"""Counting over the permutation orbit of a binary label vector.

A label vector with ``m0`` zeros and ``m1`` ones has ``N = C(m0 + m1, m1)``
distinct permutations.  Two of them are at swap distance ``r`` when ``r`` of
the ones in the first sit on zeros of the second; the inner product of their
standardized versions then depends on ``r`` alone.  Counts are carried as
logarithms since ``N^2`` overflows fixed-width integers at realistic sizes.
"""

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

_INT_LIMIT = 2**63


def log_binom(n, k):
    """``log C(n, k)``, or ``-inf`` when ``k`` is outside ``[0, n]``."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= 0) & (k <= n) & (n >= 0)
    with np.errstate(invalid="ignore"):
        out = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    out = np.where(valid, out, -np.inf)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class GroupSizes:
    """Group sizes of a two-sample design.

    Attributes
    ----------
    m0 : int
        Number of controls (label 0).
    m1 : int
        Number of cases (label 1).
    """

    m0: int
    m1: int

    def __post_init__(self):
        if int(self.m0) != self.m0 or int(self.m1) != self.m1:
            raise DomainError("group sizes must be integers")
        if self.m0 < 1 or self.m1 < 1:
            raise DomainError(f"both groups must be non-empty, got m0={self.m0}, m1={self.m1}")
        if self.m0 + self.m1 < 4:
            raise DomainError(f"need m0 + m1 >= 4, got {self.m0 + self.m1}")

    @property
    def n(self):
        return self.m0 + self.m1

    @property
    def d(self):
        """Dimension of the sphere holding standardized vectors."""
        return self.n - 2

    @property
    def m_min(self):
        return min(self.m0, self.m1)

    @property
    def log_n_orbit(self):
        return log_orbit_size(self)[0]

    @property
    def n_orbit(self):
        """Exact orbit size as a Python integer."""
        return math.comb(self.n, self.m1)


def inner_product_at_swap(r, g):
    """Inner product ``u(r) = 1 - r (1/m0 + 1/m1)`` of standardized permutations.

    Parameters
    ----------
    r : int or array_like of int
        Swap distance, ``0 <= r <= min(m0, m1)``.
    g : GroupSizes

    Examples
    --------
    >>> inner_product_at_swap(1, GroupSizes(2, 2))
    0.0
    """
    r_arr = np.asarray(r)
    if np.any(r_arr < 0) or np.any(r_arr > g.m_min):
        raise DomainError(f"swap distance outside 0..{g.m_min}: {r}")
    # integer numerator keeps u(m_min) = -1 exact when m0 = m1
    out = 1.0 - (r_arr * g.n) / (g.m0 * g.m1)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def log_orbit_size(g):
    """``(log N, N_exact)`` with ``N = C(m0 + m1, m1)``.

    ``N_exact`` is the integer when ``N < 2**63`` and ``None`` otherwise.
    """
    log_n = float(log_binom(g.n, g.m1))
    exact = math.comb(g.n, g.m1)
    return log_n, (exact if exact < _INT_LIMIT else None)


def count_at_distance(r, g):
    """``log[C(m0, r) C(m1, r)]``: permutations at swap distance ``r`` from a fixed one."""
    r_arr = np.asarray(r)
    if np.any(r_arr < 0) or np.any(r_arr > g.m_min):
        raise DomainError(f"swap distance outside 0..{g.m_min}: {r}")
    return log_binom(g.m0, r) + log_binom(g.m1, r)


def distance_weights(g):
    """Weights ``C(m0, r) C(m1, r) / N`` for ``r = 0..m_min``.

    Correctly rounded integer ratios while ``N < 2**63``, log space beyond.
    """
    _, exact = log_orbit_size(g)
    if exact is not None:
        return np.array([math.comb(g.m0, r) * math.comb(g.m1, r) / exact for r in range(g.m_min + 1)])
    r = np.arange(g.m_min + 1)
    return np.exp(count_at_distance(r, g) - g.log_n_orbit)


def delta_ranges(r1, r2, g):
    """Ranges ``D1`` (overlap among zeros) and ``D2`` (overlap among ones)."""
    d1 = range(max(0, r1 + r2 - g.m0), min(r1, r2) + 1)
    d2 = range(max(0, r1 + r2 - g.m1), min(r1, r2) + 1)
    return d1, d2


def r3_range(r1, r2, g):
    """Attainable distances ``r3 >= 1`` between two points at distances ``r1, r2``."""
    lo = max(1, abs(r1 - r2))
    hi = min(r1 + r2, g.m_min, g.n - r1 - r2)
    return range(lo, hi + 1)


def pair_config_count(r1, r2, delta1, delta2, g):
    """Log-count of ordered pairs with distances ``(r1, r2)`` from the center.

    ``delta1`` is the number of shared moved positions among the center's
    zeros (``m0`` group) and ``delta2`` among its ones (``m1`` group); the pair
    is then at distance ``r1 + r2 - delta1 - delta2``.  Arguments outside the
    admissible ranges give ``-inf``.
    """
    m0, m1 = g.m0, g.m1
    parts = (
        log_binom(m0, delta1),
        log_binom(m1, delta2),
        log_binom(m0 - delta1, r1 - delta1),
        log_binom(m1 - delta2, r1 - delta2),
        log_binom(m0 - r1, r2 - delta1),
        log_binom(m1 - r1, r2 - delta2),
    )
    if any(np.isneginf(p) for p in parts):
        return -math.inf
    return float(math.fsum(parts))


def _logsumexp_exact(terms):
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def triple_config_count(r1, r2, r3, g):
    """Log-count ``c(r1, r2, r3)`` of ordered pairs at the given pairwise distances.

    Sums :func:`pair_config_count` over the overlaps ``(delta1, delta2)``
    with ``r3 = r1 + r2 - delta1 - delta2``, scaled by the largest term and
    accumulated with compensated summation.
    """
    for name, v in (("r1", r1), ("r2", r2)):
        if int(v) != v or v < 1 or v > g.m_min:
            raise DomainError(f"{name}={v} outside 1..{g.m_min}")
    d1, d2 = delta_ranges(r1, r2, g)
    terms = []
    for a in d1:
        b = r1 + r2 - r3 - a
        if b in d2:
            terms.append(pair_config_count(r1, r2, a, b, g))
    return _logsumexp_exact(terms)


@dataclass(frozen=True)
class SwapTriple:
    """Pairwise swap distances among two orbit points and the center.

    ``r1`` and ``r2`` are the distances of the points from the center and
    ``r3`` their distance from each other.
    """

    r1: int
    r2: int
    r3: int

    def validate(self, g):
        for name in ("r1", "r2"):
            v = getattr(self, name)
            if v < 1 or v > g.m_min:
                raise DomainError(f"{name}={v} outside 1..{g.m_min}")
        if self.r3 not in r3_range(self.r1, self.r2, g):
            raise DomainError(f"r3={self.r3} not attainable for r1={self.r1}, r2={self.r2}")
        return self

    def log_count(self, g):
        return triple_config_count(self.r1, self.r2, self.r3, g)


@dataclass(frozen=True)
class TripleTable:
    """All triples with nonzero count for a design, as flat arrays.

    ``log_count`` holds ``log c(r1, r2, r3)``.  Rows are ordered by ``r1``,
    then ``r2``, then ``r3``.
    """

    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    log_count: np.ndarray


@lru_cache(maxsize=64)
def triple_table(g):
    """Vectorized census of every ordered pair of distinct non-center points.

    Cached per design; the returned arrays are read-only.
    """
    m = g.m_min
    cols = {"r1": [], "r2": [], "r3": [], "lc": []}
    for r1 in range(1, m + 1):
        r2, a, b = np.meshgrid(np.arange(1, m + 1), np.arange(0, r1 + 1), np.arange(0, r1 + 1),
                               indexing="ij")
        r2, a, b = r2.ravel(), a.ravel(), b.ravel()
        keep = (a <= r2) & (b <= r2) & (a >= r1 + r2 - g.m0) & (b >= r1 + r2 - g.m1)
        r2, a, b = r2[keep], a[keep], b[keep]
        lc = (
            log_binom(g.m0, a) + log_binom(g.m1, b)
            + log_binom(g.m0 - a, r1 - a) + log_binom(g.m1 - b, r1 - b)
            + log_binom(g.m0 - r1, r2 - a) + log_binom(g.m1 - r1, r2 - b)
        )
        r3 = r1 + r2 - a - b
        ok = (r3 >= 1) & np.isfinite(lc)
        cols["r1"].append(np.full(ok.sum(), r1))
        cols["r2"].append(r2[ok])
        cols["r3"].append(r3[ok])
        cols["lc"].append(lc[ok])
    r1, r2, r3, lc = (np.concatenate(cols[k]) for k in ("r1", "r2", "r3", "lc"))

    key = (r1 * (m + 1) + r2) * (2 * m + 1) + r3
    uniq, inv = np.unique(key, return_inverse=True)
    top = np.full(uniq.size, -np.inf)
    np.maximum.at(top, inv, lc)
    acc = np.zeros(uniq.size)
    np.add.at(acc, inv, np.exp(lc - top[inv]))
    log_count = top + np.log(acc)

    out_r3 = uniq % (2 * m + 1)
    rest = uniq // (2 * m + 1)
    out_r2 = rest % (m + 1)
    out_r1 = rest // (m + 1)
    arrays = [out_r1, out_r2, out_r3, log_count]
    for v in arrays:
        v.setflags(write=False)
    return TripleTable(*arrays)


class PairCase(enum.Enum):
    """Classes of ordered pairs ``(x_k, x_l)`` relative to the center ``x_c``."""

    BOTH_CENTER = 1      # x_k = x_l = x_c
    ONE_CENTER = 2       # exactly one of them is x_c (both orders)
    SAME_POINT = 3       # x_k = x_l != x_c
    DISTINCT = 4         # x_k, x_l, x_c pairwise distinct


def pair_census(g):
    """Yield ``(case, r1, r2, r3, log_count)`` partitioning all ``N^2`` ordered pairs.

    ``ONE_CENTER`` rows carry the count for both orders together.  For
    ``BOTH_CENTER`` all distances are 0; for ``ONE_CENTER`` and ``SAME_POINT``
    ``r1 = r2 = r`` is the distance from the center, and ``r3`` is ``r`` or 0
    respectively.
    """
    yield PairCase.BOTH_CENTER, 0, 0, 0, 0.0
    for r in range(1, g.m_min + 1):
        lc = float(count_at_distance(r, g))
        yield PairCase.ONE_CENTER, r, r, r, math.log(2.0) + lc
    for r in range(1, g.m_min + 1):
        lc = float(count_at_distance(r, g))
        yield PairCase.SAME_POINT, r, r, 0, lc
    table = triple_table(g)
    for r1, r2, r3, lc in zip(table.r1, table.r2, table.r3, table.log_count):
        yield PairCase.DISTINCT, int(r1), int(r2), int(r3), float(lc)


def swap_distance(a, b):
    """Number of positions where ``a`` is 1 and ``b`` is 0.

    Parameters
    ----------
    a, b : array_like of {0, 1}
        Binary label vectors of equal length and equal number of ones.

    Examples
    --------
    >>> swap_distance([1, 1, 0, 0, 0], [0, 0, 0, 1, 1])
    2
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("label vectors must be 1-D and of equal length")
    if not (np.isin(a, (0, 1)).all() and np.isin(b, (0, 1)).all()):
        raise DomainError("label vectors must be binary")
    if a.sum() != b.sum():
        raise DomainError("label vectors must contain the same number of ones")
    return int(np.count_nonzero((a == 1) & (b == 0)))
