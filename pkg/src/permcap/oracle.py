"""Ground-truth permutation p-values and samplers for the reference models.

Random numbers come from numpy's ``Philox`` counter-based generator, keyed
by ``SeedSequence(seed, spawn_key=(stream,))``.  Distinct streams of one seed
are independent and each draw is reproducible from ``(seed, stream)`` alone.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, OrbitTooLargeError
from .estimators import Sided, _sided, standardized_labels

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class OracleConfig:
    """Limits and seeding for the oracles.

    Attributes
    ----------
    max_exact_orbit : int
        Largest orbit :func:`exact_p` will enumerate.
    mc_draws : int
        Total Monte Carlo draws ``M``, including the observed allocation.
    seed : int
        Non-negative seed, up to 64 bits.
    stream : int
        Stream index within the seed.
    """

    max_exact_orbit: int = 2_000_000
    mc_draws: int = 10_000
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.max_exact_orbit < 1:
            raise DomainError("max_exact_orbit must be >= 1")
        if self.mc_draws < 1:
            raise DomainError("mc_draws must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")


def make_rng(seed, stream=0):
    """Philox generator for ``(seed, stream)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@lru_cache(maxsize=4)
def orbit_subsets(n, m1):
    """All ``m1``-subsets of ``range(n)`` in lexicographic order, as an ``(N, m1)`` array."""
    count = math.comb(n, m1)
    dtype = np.int16 if n < 2**15 else np.int32
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), m1)),
        dtype=dtype, count=count * m1,
    )
    out = flat.reshape(count, m1)
    out.setflags(write=False)
    return out


def orbit_vectors(g):
    """Standardized vectors of every label permutation, shape ``(N, n)``."""
    subsets = orbit_subsets(g.n, g.m1)
    labels = np.zeros((subsets.shape[0], g.n), dtype=np.int8)
    np.put_along_axis(labels, subsets.astype(np.intp), 1, axis=1)
    hi = math.sqrt(g.m0 / (g.n * g.m1))
    lo = -math.sqrt(g.m1 / (g.n * g.m0))
    return np.where(labels == 1, hi, lo)


def _subset_sums(y, subsets, chunk=1 << 18):
    out = np.empty(subsets.shape[0])
    for s in range(0, subsets.shape[0], chunk):
        out[s:s + chunk] = y[subsets[s:s + chunk]].sum(axis=1)
    return out


def exact_p(sp, sided=Sided.ONE, cfg=OracleConfig()):
    """Exact permutation p-value by enumerating all ``N`` label allocations.

    For a centered ``y0``, ``<x_k, y0>`` is a positive multiple of the sum of
    ``y0`` over the positions labelled 1, so subset sums are compared with the
    observed one.  Sums equal to it within relative ``1e-12`` of the sum of
    ``|y0|`` count as ties, which keeps structurally tied allocations (and the
    observed one) in the count despite rounding.

    Raises
    ------
    OrbitTooLargeError
        If ``N`` exceeds ``cfg.max_exact_orbit``.
    """
    sided = _sided(sided)
    g = sp.g
    n_orbit = g.n_orbit
    if n_orbit > cfg.max_exact_orbit:
        raise OrbitTooLargeError(f"orbit size {n_orbit} exceeds max_exact_orbit={cfg.max_exact_orbit}")
    y = np.asarray(sp.y0, dtype=float)
    sums = _subset_sums(y, orbit_subsets(g.n, g.m1))
    observed = float(y[sp.labels == 1].sum())
    slack = TIE_RTOL * float(np.abs(y).sum())
    if sided is Sided.ONE:
        hits = np.count_nonzero(sums >= observed - slack)
    else:
        # <x_k, y0> = c * (S_k - m1 * mean(y)) with mean(y) = 0 here
        hits = np.count_nonzero(np.abs(sums) >= abs(observed) - slack)
    return hits / n_orbit


def p_values_for_centers(g, Y, t, sided=Sided.ONE, orbit=None, tie_tol=TIE_RTOL):
    """``p(y, t)`` for each row ``y`` of ``Y`` by full orbit enumeration.

    Parameters
    ----------
    g : GroupSizes
    Y : ndarray, shape (k, n)
        Cap centers.
    t : float
        Cap height.
    orbit : ndarray, optional
        Precomputed :func:`orbit_vectors`.
    tie_tol : float
        Inner products within this of ``t`` count as inside the cap.  Under
        the conditioned model ``<y, x_c> = t`` holds exactly in theory but
        only to rounding in floating point.

    Returns
    -------
    ndarray, shape (k,)
    """
    sided = _sided(sided)
    if orbit is None:
        orbit = orbit_vectors(g)
    ip = np.asarray(Y) @ orbit.T
    if sided is Sided.ONE:
        hit = ip >= t - tie_tol
    else:
        hit = np.abs(ip) >= abs(t) - tie_tol
    return hit.mean(axis=1)


def mc_p(sp, sided=Sided.ONE, cfg=OracleConfig()):
    """Monte Carlo permutation p-value that counts the observed allocation.

    ``M - 1`` random allocations are drawn; the estimate is
    ``(1 + #{k : stat_k >= stat_0}) / M`` so it never falls below ``1/M``.

    Returns
    -------
    estimate : float
    se : float
        Binomial standard error ``sqrt(p (1 - p) / M)``.
    """
    sided = _sided(sided)
    rng = make_rng(cfg.seed, cfg.stream)
    g = sp.g
    y = np.asarray(sp.y0, dtype=float)
    observed = float(y[sp.labels == 1].sum())
    slack = TIE_RTOL * float(np.abs(y).sum())
    draws = cfg.mc_draws - 1
    hits = 0
    chunk = max(1, min(draws, (1 << 22) // max(g.n, 1)))
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        keys = rng.random((k, g.n))
        pick = np.argpartition(keys, g.m1 - 1, axis=1)[:, : g.m1] if g.m1 < g.n else np.tile(np.arange(g.n), (k, 1))
        sums = y[pick].sum(axis=1)
        if sided is Sided.ONE:
            hits += int(np.count_nonzero(sums >= observed - slack))
        else:
            hits += int(np.count_nonzero(np.abs(sums) >= abs(observed) - slack))
        done += k
    m = cfg.mc_draws
    p = (1 + hits) / m
    return p, math.sqrt(p * (1.0 - p) / m)


def sample_uniform_sphere(d, count, seed, stream=0):
    """``count`` points uniform on ``S^d`` (rows of a ``(count, d + 1)`` array)."""
    if d < 1:
        raise DomainError("sphere dimension must be >= 1")
    rng = make_rng(seed, stream)
    z = rng.standard_normal((count, d + 1))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_centered_sphere(n, count, seed, stream=0):
    """Uniform points on the unit sphere of the sum-zero hyperplane in ``R^n``.

    That sphere is a copy of ``S^(n-2)``; the standard reference model for a
    standardized response.
    """
    rng = make_rng(seed, stream)
    z = rng.standard_normal((count, n))
    z -= z.mean(axis=1, keepdims=True)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_subsphere(xc, rho_tilde, count, seed, stream=0, sum_zero=None):
    """Uniform points ``y`` on ``{y : |y| = 1, <y, xc> = rho_tilde}``.

    Parameters
    ----------
    xc : array_like
        Unit vector.
    rho_tilde : float
    count : int
    seed, stream : int
    sum_zero : bool, optional
        Additionally constrain ``sum(y) = 0``.  Defaults to True when ``xc``
        itself sums to zero, as standardized label vectors do.

    Returns
    -------
    ndarray, shape (count, len(xc))
    """
    xc = np.asarray(xc, dtype=float)
    if abs(np.linalg.norm(xc) - 1.0) > 1e-10:
        raise DomainError("xc must be a unit vector")
    if abs(rho_tilde) > 1.0 + 1e-12:
        raise DomainError("rho_tilde outside [-1, 1]")
    rho_tilde = float(np.clip(rho_tilde, -1.0, 1.0))
    n = xc.size
    if sum_zero is None:
        sum_zero = abs(xc.sum()) <= 1e-10
    if abs(rho_tilde) == 1.0:
        return np.tile(rho_tilde * xc, (count, 1))
    basis = [xc]
    if sum_zero:
        one = np.full(n, 1.0 / math.sqrt(n))
        one = one - (one @ xc) * xc
        basis.append(one / np.linalg.norm(one))
    rng = make_rng(seed, stream)
    z = rng.standard_normal((count, n))
    for _ in range(2):
        for b in basis:
            z -= np.outer(z @ b, b)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return rho_tilde * xc + math.sqrt((1.0 - rho_tilde) * (1.0 + rho_tilde)) * z


def labels_at_swap_distances(g, r1, r2=None, r3=None):
    """Construct label vectors at prescribed swap distances from the center.

    The center has its ones on the last ``m1`` positions.  Returns the center
    and one or two permuted label vectors ``a`` (distance ``r1``) and ``b``
    (distance ``r2`` from the center and ``r3`` from ``a``).
    """
    center = np.array([0] * g.m0 + [1] * g.m1)
    zeros = list(range(g.m0))
    ones = list(range(g.m0, g.n))

    def moved(out_ones, in_zeros):
        v = center.copy()
        v[list(out_ones)] = 0
        v[list(in_zeros)] = 1
        return v

    a = moved(ones[:r1], zeros[:r1])
    if r2 is None:
        return center, a
    # shared moves among ones (s1) and zeros (s0): r3 = r1 + r2 - s0 - s1
    for s1 in range(min(r1, r2) + 1):
        s0 = r1 + r2 - r3 - s1
        if not (0 <= s0 <= min(r1, r2)):
            continue
        if r1 + r2 - s1 > g.m1 or r1 + r2 - s0 > g.m0:
            continue
        out_b = ones[:s1] + ones[r1:r1 + r2 - s1]
        in_b = zeros[:s0] + zeros[r1:r1 + r2 - s0]
        return center, a, moved(out_b, in_b)
    raise DomainError(f"no configuration with distances ({r1}, {r2}, {r3})")


def standardized(labels):
    """Alias of :func:`permcap.estimators.standardized_labels`."""
    return standardized_labels(labels)
