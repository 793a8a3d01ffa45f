"""Locally constant real cocycles over a subshift.

Everything here is finite-range: a cocycle is a table over admissible words on
a coordinate window, so reductions, means, autocovariances, and periodic-orbit
sums are exact finite computations over the compiled block chain.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError, WindowCoverageError
from .sft import (Cylinder, MarkovGibbs, SymbolicWindow, TransitionMatrix,
                  admissible_words, cylinder_measure, lifted_chain)

Word = tuple[int, ...]

MAX_ORBIT_PERIOD = 14


@dataclass(frozen=True)
class Cocycle:
    """Real function of coordinates ``lo..hi``, given as a word table."""

    lo: int
    hi: int
    table: dict
    holder_beta: float = 1.0

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("window must satisfy lo <= hi")
        object.__setattr__(self, "table",
                           {tuple(k): float(v) for k, v in self.table.items()})
        if not all(math.isfinite(v) for v in self.table.values()):
            raise ValueError("cocycle values must be finite")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def past_only(self) -> bool:
        return self.hi <= 0

    def value(self, word: Word) -> float:
        return self.table[tuple(word)]

    def value_array(self, m: int) -> np.ndarray:
        """Dense lookup keyed by the radix-m code of the window word."""
        arr = np.zeros(m ** self.width)
        for word, v in self.table.items():
            code = 0
            for s in word:
                code = code * m + s
            arr[code] = v
        return arr


def cocycle_from_values(matrix: TransitionMatrix, lo: int, hi: int,
                        values) -> Cocycle:
    """Build a cocycle over exactly the admissible window words.

    ``values`` is a dict over words or a callable on words.
    """
    words = admissible_words(matrix, hi - lo + 1)
    if callable(values):
        table = {w: values(w) for w in words}
    else:
        table = {tuple(k): v for k, v in values.items()}
        missing = [w for w in words if w not in table]
        extra = [w for w in table if w not in set(words)]
        if missing or extra:
            raise ValueError(f"table must cover exactly the admissible words; "
                             f"missing {missing[:3]}, extra {extra[:3]}")
    return Cocycle(lo, hi, table)


def symbol_cocycle(matrix: TransitionMatrix, values) -> Cocycle:
    """Cocycle reading only coordinate 0; ``values[s]`` per symbol."""
    return Cocycle(0, 0, {(s,): values[s] for s in range(matrix.m)})


def zero_cocycle() -> Cocycle:
    return Cocycle(0, 0, {(s,): 0.0 for s in range(2)})


def shift_cocycle(c: Cocycle, k: int) -> Cocycle:
    """The table of ``c(sigma^k x)``: same values on a shifted window."""
    return Cocycle(c.lo + k, c.hi + k, dict(c.table), c.holder_beta)


def add_cocycles(a: Cocycle, b: Cocycle, matrix: TransitionMatrix,
                 scale_b: float = 1.0) -> Cocycle:
    """Pointwise ``a + scale_b * b`` on the union window."""
    lo, hi = min(a.lo, b.lo), max(a.hi, b.hi)
    table = {}
    for w in admissible_words(matrix, hi - lo + 1):
        va = a.value(w[a.lo - lo: a.hi - lo + 1])
        vb = b.value(w[b.lo - lo: b.hi - lo + 1])
        table[w] = va + scale_b * vb
    return trim_window(Cocycle(lo, hi, table), matrix)


def coboundary(h: Cocycle, matrix: TransitionMatrix) -> Cocycle:
    """The cocycle ``h(sigma x) - h(x)``."""
    return add_cocycles(shift_cocycle(h, 1), h, matrix, scale_b=-1.0)


def trim_window(c: Cocycle, matrix: TransitionMatrix) -> Cocycle:
    """Drop window edges the values do not actually depend on."""
    lo, hi = c.lo, c.hi
    table = dict(c.table)
    changed = True
    while changed and lo < hi:
        changed = False
        groups: dict[Word, set] = {}
        for w, v in table.items():
            groups.setdefault(w[1:], set()).add(round(v, 14))
        if all(len(vs) == 1 for vs in groups.values()):
            table = {k: table[next(w for w in table if w[1:] == k)] for k in groups}
            lo += 1
            changed = True
            continue
        groups = {}
        for w, v in table.items():
            groups.setdefault(w[:-1], set()).add(round(v, 14))
        if all(len(vs) == 1 for vs in groups.values()):
            table = {k: table[next(w for w in table if w[:-1] == k)] for k in groups}
            hi -= 1
            changed = True
    return Cocycle(lo, hi, table, c.holder_beta)


# ---------------------------------------------------------------------------
# evaluation


def birkhoff_sum(c: Cocycle, window: SymbolicWindow, n: int) -> float:
    """S_n = sum_{k<n} c(sigma^k x); the window must cover every evaluation."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > 0 and not window.covers(c.lo, (n - 1) + c.hi):
        raise WindowCoverageError(
            f"window [{window.lo},{window.hi}] cannot evaluate n={n} terms "
            f"of a [{c.lo},{c.hi}] cocycle")
    return math.fsum(c.value(window.word(k + c.lo, k + c.hi)) for k in range(n))


def birkhoff_path(c: Cocycle, path: np.ndarray, m: int) -> np.ndarray:
    """Vectorised evaluations of c at every position a path window fits.

    ``path`` has shape (..., L); returns values of shape (..., L - width + 1),
    where entry k is c read at window start k.
    """
    arr = c.value_array(m)
    path = np.asarray(path)
    w = c.width
    codes = np.zeros(path.shape[:-1] + (path.shape[-1] - w + 1,), dtype=np.int64)
    for j in range(w):
        codes = codes * m + path[..., j:path.shape[-1] - w + 1 + j]
    return arr[codes]


# ---------------------------------------------------------------------------
# reduction to the past


def canonical_future(matrix: TransitionMatrix, symbol: int, length: int) -> Word:
    """Lexicographically least admissible continuation of a symbol."""
    out = []
    cur = symbol
    for _ in range(length):
        cur = int(matrix.successors(cur)[0])
        out.append(cur)
    return tuple(out)


def _padded_eval(c: Cocycle, word: dict, pos: int) -> float:
    """Evaluate c at shift position ``pos`` over a coordinate->symbol map."""
    return c.value(tuple(word[pos + i] for i in range(c.lo, c.hi + 1)))


def reduce_to_past(c: Cocycle, mg: MarkovGibbs) -> tuple[Cocycle, Cocycle]:
    """Rewrite c as (past-only part, transfer) with c = part + h∘sigma - h.

    The construction substitutes, for each point, the canonical continuation
    of its coordinate-0 symbol for the true future; telescoping the induced
    differences leaves a finite-range past-only cocycle and a finite-range
    transfer function.  Identity is exact on every admissible window.
    """
    matrix = mg.matrix
    if c.past_only:
        z = Cocycle(0, 0, {(s,): 0.0 for s in range(matrix.m)})
        return c, z
    hi, lo = c.hi, c.lo
    horizon = hi + c.width + 2

    def coords_from(word: Word, base: int) -> dict:
        # word occupies coordinates base..base+len-1; extend right canonically
        d = {base + i: s for i, s in enumerate(word)}
        return d

    def gamma(d: dict, anchor: int) -> dict:
        # keep coordinates <= anchor, canonical continuation of d[anchor] after
        out = {i: s for i, s in d.items() if i <= anchor}
        for j, s in enumerate(canonical_future(matrix, d[anchor], horizon)):
            out[anchor + 1 + j] = s
        return out

    # past-only part on window [lo - hi, 0]
    p_lo = lo - hi
    part_table = {}
    for w in admissible_words(matrix, -p_lo + 1):
        d = coords_from(w, p_lo)
        g0 = gamma(d, 0)     # substitute future of coordinate 0
        g1 = gamma(d, -1)    # substitute future of coordinate -1, then shift
        total = _padded_eval(c, g0, 0)
        for j in range(1, hi + 1):
            total += _padded_eval(c, g0, -j) - _padded_eval(c, g1, -j)
        part_table[w] = total
    part = trim_window(Cocycle(p_lo, 0, part_table), matrix)

    # transfer h(x) = u(sigma^-1 x), u(z) = sum_{j<hi} c(sigma^-j z) - c(sigma^-j gamma z)
    h_lo, h_hi = lo - hi, hi - 1
    h_table = {}
    for w in admissible_words(matrix, h_hi - h_lo + 1):
        d = coords_from(w, h_lo)
        g1 = gamma(d, -1)
        total = 0.0
        for j in range(hi):
            total += _padded_eval(c, d, -1 - j) - _padded_eval(c, g1, -1 - j)
        h_table[w] = total
    transfer = trim_window(Cocycle(h_lo, h_hi, h_table), matrix)
    return part, transfer


def cohomology_defect(c: Cocycle, part: Cocycle, transfer: Cocycle,
                      matrix: TransitionMatrix, length: int = 10) -> float:
    """Max of |c - part - h∘sigma + h| over all admissible test words."""
    lo = min(c.lo, part.lo, transfer.lo)
    hi = max(c.hi, part.hi + 1, transfer.hi + 1)
    length = max(length, hi - lo + 1)
    worst = 0.0
    for w in admissible_words(matrix, length):
        d = {lo + i: s for i, s in enumerate(w)}
        lhs = _padded_eval(c, d, 0)
        rhs = (_padded_eval(part, d, 0)
               + _padded_eval(transfer, d, 1) - _padded_eval(transfer, d, 0))
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# centering and variance


def mean_value(c: Cocycle, mg: MarkovGibbs) -> float:
    return math.fsum(cylinder_measure(mg, Cylinder(c.lo, w)) * v
                     for w, v in c.table.items())


def center(c: Cocycle, mg: MarkovGibbs) -> Cocycle:
    """Subtract the exact stationary mean."""
    mu = mean_value(c, mg)
    return Cocycle(c.lo, c.hi, {w: v - mu for w, v in c.table.items()},
                   c.holder_beta)


@dataclass(frozen=True)
class VarianceResult:
    variance: float
    terms: tuple
    truncation_error_bound: float

    def __post_init__(self):
        if self.variance < -1e-10:
            raise ValueError("variance must be nonnegative")
        object.__setattr__(self, "variance", max(0.0, self.variance))


def green_kubo_variance(c: Cocycle, mg: MarkovGibbs,
                        truncation: int | None = None,
                        tail_tol: float = 1e-14) -> VarianceResult:
    """Asymptotic variance: the squared term plus twice the autocovariances.

    Each lag term is exact through powers of the lifted block chain; the tail
    is dominated by the chain's second-eigenvalue geometric decay.
    """
    mu = mean_value(c, mg)
    if abs(mu) > 1e-12:
        raise ValueError(f"cocycle must be centered (mean {mu:.3e}); "
                         "apply center() first")
    words, index, pi, p = lifted_chain(mg, c.width)
    f = np.array([c.value(w[:c.width]) for w in words])
    lam2 = float(np.sort(np.abs(np.linalg.eigvals(p)))[-2]) if len(p) > 1 else 0.0
    if lam2 >= 1.0 - 1e-9:
        raise ValueError("block chain is not mixing; variance sum diverges")
    row = pi * f
    terms = [float(row @ f)]
    v = f.copy()
    max_lags = truncation if truncation is not None else 10_000
    bound = math.inf
    for _ in range(max_lags):
        v = p @ v
        t = float(row @ v)
        terms.append(t)
        scale = max(abs(x) for x in terms[-3:])
        bound = 2.0 * scale * lam2 / (1.0 - lam2) if lam2 > 0 else 0.0
        if truncation is None and bound < tail_tol:
            break
    var = terms[0] + 2.0 * math.fsum(terms[1:])
    return VarianceResult(var, tuple(terms), bound)


# ---------------------------------------------------------------------------
# periodic orbits and aperiodicity


def periodic_orbit_sums(c: Cocycle, matrix: TransitionMatrix,
                        max_period: int) -> list[tuple[int, float, Word]]:
    """(period, orbit sum, word) for every primitive orbit of period <= max.

    A periodic point is a cyclically admissible word repeated; the orbit sum
    reads the cocycle around the cycle.
    """
    if max_period > MAX_ORBIT_PERIOD:
        raise ResourceLimitError(
            f"orbit enumeration capped at period {MAX_ORBIT_PERIOD}")
    orbits = []
    seen = set()
    for p in range(1, max_period + 1):
        for w in admissible_words(matrix, p):
            if not matrix.entries[w[-1], w[0]]:
                continue
            rots = {w[i:] + w[:i] for i in range(p)}
            canon = min(rots)
            if canon in seen:
                continue
            if any(p % d == 0 and canon == canon[d:] + canon[:d]
                   for d in range(1, p)):
                continue  # repetition of a shorter cycle
            seen.add(canon)
            total = math.fsum(
                c.value(tuple(canon[(k + i) % p] for i in range(c.lo, c.hi + 1)))
                for k in range(p))
            orbits.append((p, total, canon))
    return orbits


@dataclass(frozen=True)
class AperiodicityVerdict:
    verdict: str                      # "periodic" | "aperiodic" | "inconclusive"
    lattice_gap: float | None
    rho: float | None
    witness_orbits: tuple
    resolution: float
    detail: str = ""


def _real_gcd(values, tol: float) -> float:
    g = 0.0
    for v in sorted(abs(x) for x in values):
        if v < tol:
            continue
        a, b = max(g, v), min(g, v)
        while b > tol:
            a, b = b, a - math.floor(a / b) * b
        g = a
    return g


def aperiodicity_test(c: Cocycle, mg: MarkovGibbs, max_period: int = 12,
                      resolution: float = 1e-3) -> AperiodicityVerdict:
    """Lattice-vs-dense test on normalized periodic-orbit sums.

    The group generated by ``{p_j S_i - p_i S_j}`` is a lattice exactly when
    the cocycle is a constant plus coboundary plus lattice-valued part; for
    locally constant cocycles the periodic data decides this.  The measurable
    case cannot be decided at finite depth, hence the inconclusive verdict.
    """
    orbits = periodic_orbit_sums(c, mg.matrix, max_period)
    if len(orbits) < 2:
        return AperiodicityVerdict("inconclusive", None, None, tuple(orbits),
                                   resolution, "fewer than two orbits")
    scale = max(1.0, max(abs(s) for _, s, _ in orbits))
    tol = 1e-9 * scale
    combos = []
    limit = 200
    base = orbits[:limit]
    for i in range(len(base)):
        for j in range(i + 1, len(base)):
            pi_, si, _ = base[i]
            pj, sj, _ = base[j]
            combos.append(pj * si - pi_ * sj)
    for k in range(limit, len(orbits)):
        p0, s0, _ = orbits[0]
        pk, sk, _ = orbits[k]
        combos.append(pk * s0 - p0 * sk)
    nonzero = [d for d in combos if abs(d) > tol]
    witness = tuple((p, s) for p, s, _ in orbits)
    p0, s0, _ = orbits[0]
    if not nonzero:
        return AperiodicityVerdict("periodic", None, s0 / p0, witness, resolution,
                                   "all normalized orbit sums equal")
    gap = _real_gcd(nonzero, tol)
    if gap <= resolution:
        return AperiodicityVerdict("aperiodic", None, None, witness, resolution,
                                   f"generated group is {gap:.2e}-dense")
    if any(abs(d - round(d / gap) * gap) > tol for d in nonzero):
        return AperiodicityVerdict("inconclusive", None, None, witness, resolution,
                                   "gcd reduction numerically unstable")
    rho = _solve_rho(orbits, gap, tol)
    if rho is None:
        return AperiodicityVerdict("inconclusive", gap, None, witness, resolution,
                                   "no consistent rotation part found")
    return AperiodicityVerdict("periodic", gap, rho, witness, resolution,
                               f"lattice gap {gap:.6g}")


def _solve_rho(orbits, gap: float, tol: float) -> float | None:
    p0, s0, _ = orbits[0]
    for k in range(p0):
        rho = (s0 - k * gap) / p0
        ok = all(abs((s - rho * p) - round((s - rho * p) / gap) * gap) <= tol * p
                 for p, s, _ in orbits)
        if ok:
            return rho
    return None


# ---------------------------------------------------------------------------
# orbit sum density


@dataclass(frozen=True)
class DensityReport:
    largest_gap: float
    points_in_range: int
    n_max: int
    radius: float


def orbit_sum_density(c: Cocycle, mg: MarkovGibbs, n_max: int, radius: float,
                      rng: np.random.Generator) -> DensityReport:
    """Largest gap of the two-sided Birkhoff sums inside [-radius, radius].

    Convention: with at most one point in range the gap is the full interval
    length 2*radius.
    """
    from .sft import extend_backward, sample_stationary_word, stationary_blocks
    pad = c.width + 1
    fwd = sample_stationary_word(mg, n_max + pad, rng)
    b = mg.block_len
    first_block = mg.block_index[tuple(int(s) for s in fwd[:b])]
    bwd = extend_backward(mg, first_block, n_max + pad, rng)
    path = np.concatenate([bwd, fwd]).astype(np.int64)
    origin = len(bwd)  # index of coordinate 0
    vals = birkhoff_path(c, path, mg.matrix.m)
    # value of c(sigma^k x) sits at index origin + k + c.lo
    offs = origin - n_max + c.lo
    series = vals[offs: offs + 2 * n_max + 1]  # k in [-n_max, n_max]
    sums_fwd = np.cumsum(series[n_max: 2 * n_max])                      # S_1..S_n
    back_vals = series[:n_max][::-1]                                    # c at k=-1,-2,..
    sums_bwd = -np.cumsum(back_vals)                                    # S_{-1}, S_{-2}, ..
    all_sums = np.concatenate([[0.0], sums_fwd, sums_bwd])
    pts = np.unique(all_sums[np.abs(all_sums) <= radius])
    if len(pts) <= 1:
        return DensityReport(2 * radius, len(pts), n_max, radius)
    gap = float(np.max(np.diff(pts)))
    return DensityReport(gap, len(pts), n_max, radius)
