"""Zero-entropy fiber flows: special flows over rotations and IETs.

The flow space is {(x, s): 0 <= s < roof(x)} with the normalized product
measure; the metric is the product max-metric (circle metric on a rotation
base, interval metric on an IET base).  Rigidity towers over the rotation's
continued-fraction times supply equidistribution witnesses whose defining
conditions are then checked by direct sampling.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import RationalAngleError, ResourceLimitError
from .mc import wilson_ci

Point = tuple[float, float]


# ---------------------------------------------------------------------------
# base maps


@dataclass(frozen=True)
class Rotation:
    """x -> x + alpha mod 1 on the circle."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")

    kind = "rotation"
    circle = True

    def apply(self, x: float) -> float:
        return (x + self.alpha) % 1.0

    def apply_inv(self, x: float) -> float:
        return (x - self.alpha) % 1.0

    def apply_batch(self, x: np.ndarray, steps: np.ndarray | int) -> np.ndarray:
        return (x + np.asarray(steps) * self.alpha) % 1.0

    def base_distance(self, x, y):
        d = np.abs(np.asarray(x) - np.asarray(y))
        return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class IET:
    """Interval exchange: reorder the subintervals of given lengths."""

    lengths: tuple
    permutation: tuple

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        perm = tuple(int(p) for p in self.permutation)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "permutation", perm)
        if sorted(perm) != list(range(len(lengths))):
            raise ValueError("permutation must be a bijection on the intervals")
        if abs(sum(lengths) - 1.0) > 1e-14 or min(lengths) <= 0:
            raise ValueError("lengths must be positive and sum to 1")
        lefts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
        order = list(perm)
        new_lengths = [lengths[order.index(j)] for j in range(len(lengths))]
        # image left endpoint of interval i = total length of intervals placed before it
        img_lefts = np.zeros(len(lengths))
        pos = 0.0
        for slot in range(len(lengths)):
            i = order.index(slot)
            img_lefts[i] = pos
            pos += lengths[i]
        object.__setattr__(self, "_lefts", lefts)
        object.__setattr__(self, "_img_lefts", img_lefts)

    kind = "iet"
    circle = False

    def _interval_of(self, x):
        idx = np.searchsorted(self._lefts, x, side="right") - 1
        return np.clip(idx, 0, len(self.lengths) - 1)

    def apply(self, x: float) -> float:
        i = int(self._interval_of(x))
        return float(self._img_lefts[i] + (x - self._lefts[i]))

    def apply_inv(self, x: float) -> float:
        rights = self._img_lefts + np.array(self.lengths)
        for i in range(len(self.lengths)):
            if self._img_lefts[i] <= x < rights[i]:
                return float(self._lefts[i] + (x - self._img_lefts[i]))
        i = int(np.argmin(np.abs(self._img_lefts - x)))
        return float(self._lefts[i] + (x - self._img_lefts[i]))

    def apply_batch(self, x: np.ndarray, steps) -> np.ndarray:
        steps = int(steps) if np.isscalar(steps) else steps
        raise NotImplementedError("IET batch stepping is per-point")

    def base_distance(self, x, y):
        return np.abs(np.asarray(x) - np.asarray(y))

    def discontinuities(self) -> list[float]:
        return [float(v) for v in self._lefts[1:]]


# ---------------------------------------------------------------------------
# roofs


@dataclass(frozen=True)
class RoofPiece:
    lo: float
    hi: float
    a: float   # value a + b*x on [lo, hi)
    b: float


@dataclass(frozen=True)
class Roof:
    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if abs(pieces[0].lo) > 1e-14 or abs(pieces[-1].hi - 1.0) > 1e-14:
            raise ValueError("pieces must cover [0,1)")
        for p, q in zip(pieces, pieces[1:]):
            if abs(p.hi - q.lo) > 1e-14:
                raise ValueError("pieces must be contiguous")
        if self.min_value <= 0:
            raise ValueError("roof must be positive")

    @property
    def min_value(self) -> float:
        return min(min(p.a + p.b * p.lo, p.a + p.b * p.hi) for p in self.pieces)

    @property
    def max_value(self) -> float:
        return max(max(p.a + p.b * p.lo, p.a + p.b * p.hi) for p in self.pieces)

    @property
    def lipschitz(self) -> float:
        return max(abs(p.b) for p in self.pieces)

    @property
    def mean(self) -> float:
        return math.fsum(p.a * (p.hi - p.lo) + 0.5 * p.b * (p.hi ** 2 - p.lo ** 2)
                         for p in self.pieces)

    @property
    def is_constant(self) -> bool:
        return all(p.b == 0.0 and p.a == self.pieces[0].a for p in self.pieces)

    def value(self, x: float) -> float:
        for p in self.pieces:
            if p.lo <= x < p.hi:
                return p.a + p.b * x
        return self.pieces[-1].a + self.pieces[-1].b * x

    def value_batch(self, x: np.ndarray) -> np.ndarray:
        los = np.array([p.lo for p in self.pieces])
        idx = np.clip(np.searchsorted(los, x, side="right") - 1, 0, len(self.pieces) - 1)
        a = np.array([p.a for p in self.pieces])[idx]
        b = np.array([p.b for p in self.pieces])[idx]
        return a + b * x

    def breakpoints(self) -> list[float]:
        return [p.lo for p in self.pieces[1:]]


def constant_roof(height: float = 1.0) -> Roof:
    return Roof((RoofPiece(0.0, 1.0, float(height), 0.0),))


def piecewise_roof(specs) -> Roof:
    return Roof(tuple(RoofPiece(float(l), float(h), float(a), float(b))
                      for (l, h, a, b) in specs))


# ---------------------------------------------------------------------------
# the special flow


@dataclass(frozen=True)
class SpecialFlow:
    base: object
    roof: Roof

    @property
    def mean_roof(self) -> float:
        return self.roof.mean

    @property
    def fast(self) -> bool:
        return self.roof.is_constant and isinstance(self.base, Rotation)

    def valid_point(self, p: Point) -> bool:
        x, s = p
        return 0.0 <= x < 1.0 and 0.0 <= s < self.roof.value(x)

    def sample_point(self, rng: np.random.Generator) -> Point:
        top = self.roof.max_value
        while True:
            x = rng.random()
            s = rng.random() * top
            if s < self.roof.value(x):
                return (x, s)

    def distance(self, p: Point, q: Point) -> float:
        bd = float(self.base.base_distance(p[0], q[0]))
        return max(bd, abs(p[1] - q[1]))


def flow(f: SpecialFlow, p: Point, t: float, max_steps: int = 10 ** 9) -> Point:
    """Move time t through the suspension; jumps by the base map at the roof."""
    x, s = p
    if not f.valid_point(p):
        raise ValueError(f"point {p} not in the flow space")
    if f.fast:
        h = f.roof.pieces[0].a
        n = math.floor((s + t) / h)
        if abs(n) > max_steps:
            raise ResourceLimitError(f"flow needs {abs(n)} base steps")
        return ((x + n * f.base.alpha) % 1.0, (s + t) - n * h)
    u = s + t
    steps = 0
    while u >= f.roof.value(x):
        u -= f.roof.value(x)
        x = f.base.apply(x)
        steps += 1
        if steps > max_steps:
            raise ResourceLimitError(f"flow exceeded {max_steps} base steps")
    while u < 0.0:
        x = f.base.apply_inv(x)
        u += f.roof.value(x)
        steps += 1
        if steps > max_steps:
            raise ResourceLimitError(f"flow exceeded {max_steps} base steps")
    return (x, u)


def flow_batch(f: SpecialFlow, xs: np.ndarray, ss: np.ndarray, ts) -> tuple:
    """Vectorised flow for constant-roof rotation fibers."""
    if not f.fast:
        raise NotImplementedError("batch flow requires a constant-roof rotation")
    h = f.roof.pieces[0].a
    total = ss + np.asarray(ts)
    n = np.floor(total / h)
    return (xs + n * f.base.alpha) % 1.0, total - n * h


def roof_sums(f: SpecialFlow, x: float, n: int) -> float:
    """Birkhoff sum of the roof along the base orbit of x."""
    total = 0.0
    for _ in range(n):
        total += f.roof.value(x)
        x = f.base.apply(x)
    return total


# ---------------------------------------------------------------------------
# continued fractions and rigidity towers


def continued_fraction_convergents(alpha: float, count: int):
    """(a_k, p_k, q_k) for k = 1..count, leading zero quotient dropped.

    Raises if alpha is rational at float resolution.
    """
    res = []
    x = alpha
    ph, pk = 1, 0   # p_{k}, p_{k-1}
    qh, qk = 0, 1
    while len(res) < count:
        a = int(math.floor(x))
        frac = x - a
        if frac < 1e-13:
            raise RationalAngleError(
                f"alpha terminates after {len(res)} partial quotients at float resolution")
        x = 1.0 / frac
        ph, pk = a * ph + pk, ph
        qh, qk = a * qh + qk, qh
        if qh == 1 and ph == 0:
            continue
        res.append((a, ph, qh))
    return res


def circle_norm(q: int, alpha: float) -> float:
    v = q * alpha
    return abs(v - round(v))


@dataclass(frozen=True)
class TowerSpec:
    """One rigidity tower: an interval base flowed for its return height."""

    level: int
    q: int                 # base-map steps per climb
    base_lo: float
    base_hi: float
    height: float          # roof sum at the base left endpoint
    return_overlap: float
    max_diam: float

    @property
    def base_length(self) -> float:
        return self.base_hi - self.base_lo


def rigidity_towers(f: SpecialFlow, count: int, grid: int = 256,
                    t_grid: int = 128) -> list[TowerSpec]:
    """Towers over the continued-fraction times of a rotation base.

    Level n uses the interval [0, ||q_{n-1} alpha||) (the classical choice,
    which keeps the climb's levels disjoint and its displacement a fraction
    ||q_n alpha|| / ||q_{n-1} alpha|| of the base), flowed for the roof sum
    over q_n base steps.
    """
    if not isinstance(f.base, Rotation):
        raise ValueError("rigidity towers require a rotation base")
    alpha = f.base.alpha
    conv = continued_fraction_convergents(alpha, count)
    out = []
    prev_norm = min(alpha, 1.0 - alpha)  # ||q_0 alpha|| with q_0 = 1
    for level, (_, p, q) in enumerate(conv, start=1):
        length = prev_norm
        height = roof_sums(f, 0.0, q)
        xs = (np.arange(grid) + 0.5) / grid * length
        # measured return overlap of the base interval under the height-time map
        landed = np.array([flow(f, (float(x), 0.0), height)[0] for x in xs])
        overlap = float(np.mean(landed < length))
        # measured sup of level diameters
        ts = np.linspace(0.0, height, t_grid, endpoint=False)
        diam = 0.0
        sub = xs[:: max(1, grid // 64)]
        for t in ts:
            pts = [flow(f, (float(x), 0.0), float(t)) for x in sub]
            bx = np.array([p[0] for p in pts])
            sv = np.array([p[1] for p in pts])
            bspan = _circular_span(bx) if f.base.circle else bx.max() - bx.min()
            diam = max(diam, max(bspan, float(sv.max() - sv.min())))
        out.append(TowerSpec(level, q, 0.0, length, height, overlap, diam))
        prev_norm = circle_norm(q, alpha)
    return out


def _circular_span(xs: np.ndarray) -> float:
    s = np.sort(xs)
    gaps = np.diff(np.concatenate([s, [s[0] + 1.0]]))
    return float(1.0 - gaps.max())


# ---------------------------------------------------------------------------
# quasi-ellipticity witnesses


@dataclass(frozen=True)
class WitnessLevel:
    index: int
    a: float               # matching-time horizon
    b: float               # slow-divergence horizon
    delta: float           # matching tolerance = measured max level diameter
    h: float
    q: int
    repetitions: int
    margin: float          # vertical trim defining the level's good set
    nu_margin: float       # measure of the trimmed set


@dataclass(frozen=True)
class QuasiEllipticWitness:
    levels: tuple
    z_margins: tuple       # candidate margins for the almost-continuity sets

    def level(self, index: int) -> WitnessLevel:
        for lv in self.levels:
            if lv.index == index:
                return lv
        raise KeyError(f"no witness level {index}")


def margin_measure(f: SpecialFlow, margin: float, grid: int = 4096) -> float:
    """nu{(x,s): margin <= s <= roof(x) - margin}, exact for affine pieces."""
    total = 0.0
    for p in f.roof.pieces:
        xs = np.linspace(p.lo, p.hi, grid, endpoint=False) + (p.hi - p.lo) / (2 * grid)
        vals = np.maximum(p.a + p.b * xs - 2 * margin, 0.0)
        total += float(vals.mean() * (p.hi - p.lo))
    return total / f.mean_roof


def witness_from_towers(f: SpecialFlow, towers: list[TowerSpec],
                        repetitions: list[int],
                        overlap_tol: float = 0.7) -> QuasiEllipticWitness:
    """Record (a, b, delta) = (2h, M h / 2, max diameter) per usable tower."""
    levels = []
    for tower, reps in zip(towers, repetitions):
        if tower.return_overlap < 1.0 - overlap_tol:
            warnings.warn(f"tower level {tower.level} skipped: return overlap "
                          f"{tower.return_overlap:.3f} below {1 - overlap_tol:.3f}")
            continue
        delta = tower.max_diam
        levels.append(WitnessLevel(
            index=tower.level,
            a=2.0 * tower.height,
            b=reps * tower.height / 2.0,
            delta=delta,
            h=tower.height,
            q=tower.q,
            repetitions=reps,
            margin=delta,
            nu_margin=margin_measure(f, delta),
        ))
    margins = tuple(sorted({lv.delta for lv in levels}, reverse=True))
    return QuasiEllipticWitness(tuple(levels), margins)


def corrupt_witness(w: QuasiEllipticWitness, factor: float = 0.5) -> QuasiEllipticWitness:
    """Control: shrink every delta, keeping the good sets; (A) should fail."""
    levels = tuple(WitnessLevel(lv.index, lv.a, lv.b, lv.delta * factor, lv.h,
                                lv.q, lv.repetitions, lv.margin, lv.nu_margin)
                   for lv in w.levels)
    return QuasiEllipticWitness(levels, w.z_margins)


def continuity_modulus(f: SpecialFlow, z_margin: float, eta: float) -> float:
    """Largest |t| keeping margin points within eta of themselves.

    Between roof crossings only the height coordinate moves, by exactly |t|.
    """
    return min(z_margin, eta)


def in_margin(f: SpecialFlow, p: Point, margin: float) -> bool:
    return margin <= p[1] <= f.roof.value(p[0]) - margin


def sample_margin_point(f: SpecialFlow, margin: float,
                        rng: np.random.Generator, cap: int = 100_000) -> Point:
    for _ in range(cap):
        p = f.sample_point(rng)
        if in_margin(f, p, margin):
            return p
    raise ResourceLimitError("margin set appears to have negligible mass")


def find_alignment_time(f: SpecialFlow, y1: Point, y2: Point, t_max: float,
                        tol: float) -> float | None:
    """Minimal t in [0, t_max] with distance(y1, flow(y2, -t)) < tol.

    Candidates align the height coordinates exactly: flowing y2 backward, its
    height equals y1's height once per base step.
    """
    x1, s1 = y1
    x2, s2 = y2
    t = s2 - s1
    x = x2
    first = True
    while t <= t_max:
        if t >= 0.0 and s1 < f.roof.value(x):
            d = float(f.base.base_distance(x1, x))
            if d < tol:
                return t
        x = f.base.apply_inv(x)
        t += f.roof.value(x)
        first = False
    return None


@dataclass(frozen=True)
class QeReport:
    rate_a: float
    rate_b: float
    rate_c: float
    pairs: int
    checks_c: int
    worst_a_distance: float
    detail: str = ""


def verify_quasi_elliptic(f: SpecialFlow, witness: QuasiEllipticWitness,
                          level_index: int, pairs: int, eps: float,
                          rng: np.random.Generator, t_checks: int = 32,
                          eta: float = None) -> QeReport:
    """Sample the three defining conditions of the witness at one level.

    (A) finds a matching time within the level horizon for sampled good-set
    pairs; (B) exercises the continuity modulus on margin points; (C) follows
    matched pairs along the slow horizon, comparing at margin visits.
    """
    lv = witness.level(level_index)
    eta = eps if eta is None else eta
    found = 0
    worst = 0.0
    c_ok = 0
    c_total = 0
    margin_c = max(eps, lv.delta)
    for _ in range(pairs):
        y1 = sample_margin_point(f, lv.margin, rng)
        y2 = sample_margin_point(f, lv.margin, rng)
        t12 = find_alignment_time(f, y1, y2, lv.a, lv.delta)
        if t12 is None:
            continue
        found += 1
        moved = flow(f, y2, -t12)
        worst = max(worst, f.distance(y1, moved))
        ts = rng.random(t_checks) * lv.b
        for t in ts:
            p1 = flow(f, y1, float(t))
            if not in_margin(f, p1, margin_c):
                continue
            p2 = flow(f, y2, float(t) - t12)
            c_total += 1
            if f.distance(p1, p2) < eps:
                c_ok += 1
    # (B): margin points barely move for |t| below the modulus
    b_ok = 0
    b_total = 0
    for _ in range(pairs):
        margin_b = witness.z_margins[0] if witness.z_margins else lv.margin
        y = sample_margin_point(f, margin_b, rng)
        xi = continuity_modulus(f, margin_b, eta)
        t = float((rng.random() * 2 - 1) * xi)
        b_total += 1
        if f.distance(y, flow(f, y, t)) < eta + 1e-12:
            b_ok += 1
    return QeReport(
        rate_a=found / pairs,
        rate_b=b_ok / max(b_total, 1),
        rate_c=c_ok / max(c_total, 1),
        pairs=pairs,
        checks_c=c_total,
        worst_a_distance=worst,
    )


# ---------------------------------------------------------------------------
# generating partitions of the flow space


@dataclass
class FiberPartition:
    """Columns over a base partition, cut into height bands plus a roof atom."""

    flow: SpecialFlow
    eps: float
    breaks: np.ndarray          # column boundaries, breaks[0] = 0, breaks[-1] = 1
    col_bands: np.ndarray       # full-height bands per column (roof atom above)
    col_offset: np.ndarray      # first atom id of each column
    measures: np.ndarray

    @property
    def size(self) -> int:
        return len(self.measures)

    def label(self, p: Point) -> tuple[int, bool]:
        lbl = self.label_batch(np.array([p[0]]), np.array([p[1]]))[0]
        flag = self.near_boundary(p)
        return int(lbl), flag

    def label_batch(self, xs: np.ndarray, ss: np.ndarray) -> np.ndarray:
        col = np.clip(np.searchsorted(self.breaks, xs, side="right") - 1,
                      0, len(self.col_bands) - 1)
        band = np.minimum((ss / self.eps).astype(np.int64), self.col_bands[col])
        return self.col_offset[col] + band

    def near_boundary(self, p: Point, tol: float = 1e-12) -> bool:
        x, s = p
        if np.min(np.abs(self.breaks - x)) < tol:
            return True
        if abs(s - round(s / self.eps) * self.eps) < tol:
            return True
        return abs(self.flow.roof.value(x) - s) < tol

    def column_of(self, x: float) -> int:
        return int(np.clip(np.searchsorted(self.breaks, x, side="right") - 1,
                           0, len(self.col_bands) - 1))


def trivial_partition(f: SpecialFlow) -> FiberPartition:
    """Single atom: labels carry no fiber information."""
    return FiberPartition(f, f.roof.max_value * 2.0, np.array([0.0, 1.0]),
                          np.array([0]), np.array([0]), np.array([1.0]))


def build_generating_partition(f: SpecialFlow, eps: float,
                               base_eps: float | None = None) -> FiberPartition:
    """Cut each column into height-eps bands; the top remainder hugs the roof.

    The base partition refines the roof's continuity intervals (and the IET's
    discontinuities) to width <= base_eps (default eps).
    """
    if eps >= f.roof.min_value:
        raise ValueError("band height must be below the roof minimum")
    base_eps = eps if base_eps is None else base_eps
    cuts = {0.0, 1.0}
    cuts.update(f.roof.breakpoints())
    if isinstance(f.base, IET):
        cuts.update(f.base.discontinuities())
    sorted_cuts = sorted(cuts)
    breaks = [0.0]
    for lo, hi in zip(sorted_cuts, sorted_cuts[1:]):
        pieces = max(1, int(math.ceil((hi - lo) / base_eps - 1e-12)))
        breaks.extend(lo + (hi - lo) * (k + 1) / pieces for k in range(pieces))
    breaks = np.array(breaks)
    n_cols = len(breaks) - 1
    col_bands = np.zeros(n_cols, dtype=np.int64)
    col_offset = np.zeros(n_cols, dtype=np.int64)
    measures = []
    norm = f.mean_roof
    offset = 0
    for ci in range(n_cols):
        lo, hi = breaks[ci], breaks[ci + 1]
        col_min = min(f.roof.value(lo), f.roof.value((lo + hi) / 2),
                      f.roof.value(hi - 1e-15))
        bands = max(1, int(math.ceil(col_min / eps)) - 1)
        col_bands[ci] = bands
        col_offset[ci] = offset
        width = hi - lo
        for k in range(bands):
            measures.append(width * eps / norm)
        grid = np.linspace(lo, hi, 512, endpoint=False) + (hi - lo) / 1024
        roof_vals = f.roof.value_batch(grid)
        measures.append(float(np.mean(roof_vals - bands * eps)) * width / norm)
        offset += bands + 1
    return FiberPartition(f, eps, breaks, col_bands, col_offset,
                          np.array(measures))


def boundary_distance_batch(q: FiberPartition, xs: np.ndarray,
                            ss: np.ndarray) -> np.ndarray:
    """Max-metric distance to the union of atom boundaries."""
    f = q.flow
    base_circle = f.base.circle
    d = np.full(len(xs), np.inf)
    # vertical column boundaries (full height)
    for b in q.breaks[:-1] if base_circle else q.breaks:
        dx = np.abs(xs - b)
        if base_circle:
            dx = np.minimum(dx, 1.0 - dx)
        d = np.minimum(d, dx)
    # horizontal band lines within each column, plus the floor
    col = np.clip(np.searchsorted(q.breaks, xs, side="right") - 1,
                  0, len(q.col_bands) - 1)
    bands = q.col_bands[col]
    k = np.clip(np.round(ss / q.eps), 0, bands).astype(np.int64)
    d = np.minimum(d, np.abs(ss - k * q.eps))
    # the roof graph: for affine pieces minimise the max-metric locally
    roof_here = f.roof.value_batch(xs)
    d = np.minimum(d, np.abs(roof_here - ss))
    return d


def boundary_mass(q: FiberPartition, eta: float, samples: int,
                  rng: np.random.Generator):
    """Monte Carlo mass of the eta-neighborhood of the partition boundary."""
    f = q.flow
    top = f.roof.max_value
    got = 0
    hits = 0
    batch = 65536
    while got < samples:
        n = min(batch, samples - got)
        xs = rng.random(n)
        ss = rng.random(n) * top
        keep = ss < f.roof.value_batch(xs)
        xs, ss = xs[keep], ss[keep]
        got += n
        hits += int(np.sum(boundary_distance_batch(q, xs, ss) < eta))
        # rescale: accepted fraction estimates the roof normalisation
    # hits were counted against accepted points only; estimate on the flow space
    ci = wilson_ci(hits, got)
    scale = top / f.mean_roof
    est = hits / got * scale
    return est, BoundaryCI(ci.lo * scale, ci.hi * scale, got)


@dataclass(frozen=True)
class BoundaryCI:
    lo: float
    hi: float
    n: int


# ---------------------------------------------------------------------------
# ergodic time and coding separation


@dataclass(frozen=True)
class ErgodicTimeReport:
    t0: float
    discrepancy: float
    three_sigma: float
    flagged: bool
    alternative: float | None
    atoms_checked: int
    iterations: int


def pick_ergodic_time(f: SpecialFlow, partition: FiberPartition | None = None,
                      t0: float | None = None, iterations: int = 1_000_000,
                      rng: np.random.Generator | None = None,
                      max_atoms: int = 20) -> ErgodicTimeReport:
    """Default time plus an empirical equidistribution certificate.

    Birkhoff frequencies of rectangle indicators along the time-t0 orbit are
    compared with their measures; failure beyond 3 sigma flags the time and
    proposes an alternative.  The certificate is empirical only.
    """
    rng = rng or np.random.default_rng(0)
    if t0 is None:
        t0 = f.mean_roof * (math.sqrt(5.0) - 1.0) / 2.0
    if t0 == 0.0:
        raise ValueError("t0 = 0 generates nothing")
    if partition is None:
        partition = build_generating_partition(f, f.roof.min_value / 4.0)
    y = f.sample_point(rng)
    if f.fast:
        js = np.arange(iterations, dtype=np.float64)
        xs, ss = flow_batch(f, np.full(iterations, y[0]),
                            np.full(iterations, y[1]), js * t0)
        labels = partition.label_batch(xs, ss)
    else:
        labels = np.empty(iterations, dtype=np.int64)
        p = y
        for j in range(iterations):
            labels[j] = partition.label_batch(np.array([p[0]]), np.array([p[1]]))[0]
            p = flow(f, p, t0)
    atoms = min(max_atoms, partition.size)
    counts = np.bincount(labels, minlength=partition.size)[:atoms]
    freqs = counts / iterations
    masses = partition.measures[:atoms]
    disc = float(np.max(np.abs(freqs - masses)))
    sigma = float(np.max(3.0 * np.sqrt(np.maximum(masses * (1 - masses), 1e-12)
                                       / iterations)))
    # serial correlation along the orbit inflates the binomial scale; allow a
    # mixing-time factor estimated from the mean roof
    tolerance = sigma * max(10.0, 3.0 * f.mean_roof / t0)
    flagged = disc > tolerance
    alternative = t0 * (math.sqrt(5.0) - 1.0) / 2.0 if flagged else None
    return ErgodicTimeReport(t0, disc, tolerance, flagged, alternative,
                             atoms, iterations)


def coding_separation(f: SpecialFlow, partition: FiberPartition, t0: float,
                      pairs: int, horizon: int, rng: np.random.Generator) -> float:
    """Fraction of sampled distinct pairs separated by coded iterates |i| <= horizon."""
    separated = 0
    for _ in range(pairs):
        y1 = f.sample_point(rng)
        y2 = f.sample_point(rng)
        if y1 == y2:
            continue
        if _separates(f, partition, t0, y1, y2, horizon):
            separated += 1
    return separated / pairs


def _separates(f, partition, t0, y1, y2, horizon) -> bool:
    if f.fast:
        block = 4096
        for direction in (1.0, -1.0):
            for start in range(0, horizon, block):
                js = direction * t0 * np.arange(start, min(start + block, horizon))
                x1, s1 = flow_batch(f, np.full(len(js), y1[0]),
                                    np.full(len(js), y1[1]), js)
                x2, s2 = flow_batch(f, np.full(len(js), y2[0]),
                                    np.full(len(js), y2[1]), js)
                if np.any(partition.label_batch(x1, s1)
                          != partition.label_batch(x2, s2)):
                    return True
        return False
    p, qq = y1, y2
    for _ in range(horizon):
        if partition.label_batch(np.array([p[0]]), np.array([p[1]]))[0] != \
           partition.label_batch(np.array([qq[0]]), np.array([qq[1]]))[0]:
            return True
        p = flow(f, p, t0)
        qq = flow(f, qq, t0)
    return False
