"""Subshifts of finite type with exact stationary Markov measures.

Finite-range potentials are recoded to a one-step chain on admissible blocks,
whose Perron data (leading eigenvalue, left/right eigenvectors) is computed by
power iteration.  Cylinder masses, conditional futures, and holonomy ratios
are then exact products of stationary and transition entries.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EigenConvergenceError, HolonomyUndefinedError, WindowCoverageError

MAX_ALPHABET = 1 << 16

Word = tuple[int, ...]


# ---------------------------------------------------------------------------
# transition matrices and words


@dataclass(frozen=True)
class TransitionMatrix:
    """0/1 adjacency matrix over the symbol alphabet; irreducible by contract."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.uint8)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("transition matrix must be square")
        if a.shape[0] == 0:
            raise ValueError("empty alphabet rejected")
        if a.shape[0] > MAX_ALPHABET:
            raise ValueError(f"alphabet capped at {MAX_ALPHABET} symbols")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        if (a.sum(axis=1) == 0).any():
            raise ValueError("every symbol needs at least one admissible successor")
        object.__setattr__(self, "entries", a)
        if not check_irreducible(self):
            raise ValueError("transition matrix must be irreducible")

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def admissible(self, word: Sequence[int]) -> bool:
        w = tuple(word)
        if any(s < 0 or s >= self.m for s in w):
            return False
        return all(self.entries[w[i], w[i + 1]] for i in range(len(w) - 1))

    def successors(self, symbol: int) -> np.ndarray:
        return np.flatnonzero(self.entries[symbol])


def check_irreducible(a: TransitionMatrix | np.ndarray) -> bool:
    """True iff every symbol reaches every other through admissible words."""
    m = a.entries if isinstance(a, TransitionMatrix) else np.asarray(a, dtype=np.uint8)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError("empty alphabet rejected" if m.size == 0 else "matrix must be square")
    n = m.shape[0]
    reach = m.astype(bool) | np.eye(n, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(n, 2))))):
        reach = reach | (reach @ reach)
    return bool(reach.all() and reach.T.all())


def full_shift(m: int) -> TransitionMatrix:
    return TransitionMatrix(np.ones((m, m), dtype=np.uint8))


def golden_mean_shift() -> TransitionMatrix:
    return TransitionMatrix(np.array([[1, 1], [1, 0]], dtype=np.uint8))


@dataclass(frozen=True)
class Cylinder:
    """Admissible word pinned at consecutive coordinates ``start..start+len-1``."""

    start: int
    symbols: Word

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if len(self.symbols) == 0:
            raise ValueError("empty cylinder word")


@dataclass(frozen=True)
class SymbolicWindow:
    """Finite two-sided word: past ends at coordinate 0, future starts at 1."""

    past: Word
    future: Word = ()

    def __post_init__(self):
        object.__setattr__(self, "past", tuple(int(s) for s in self.past))
        object.__setattr__(self, "future", tuple(int(s) for s in self.future))
        if len(self.past) == 0:
            raise ValueError("past must cover coordinate 0")

    @property
    def lo(self) -> int:
        return -(len(self.past) - 1)

    @property
    def hi(self) -> int:
        return len(self.future)

    def symbol(self, i: int) -> int:
        if i <= 0:
            if i < self.lo:
                raise WindowCoverageError(f"coordinate {i} not covered (lo={self.lo})")
            return self.past[len(self.past) - 1 + i]
        if i > self.hi:
            raise WindowCoverageError(f"coordinate {i} not covered (hi={self.hi})")
        return self.future[i - 1]

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def word(self, lo: int, hi: int) -> Word:
        return tuple(self.symbol(i) for i in range(lo, hi + 1))


def window_admissible(a: TransitionMatrix, w: SymbolicWindow) -> bool:
    return a.admissible(w.past + w.future)


# ---------------------------------------------------------------------------
# potentials and the compiled block chain


@dataclass(frozen=True)
class PotentialTable:
    """Finite-range potential reading coordinates ``x_0..x_window``."""

    window: int
    values: dict

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("window must be >= 0")
        object.__setattr__(self, "values",
                           {tuple(k): float(v) for k, v in self.values.items()})

    @property
    def width(self) -> int:
        return self.window + 1

    def value(self, word: Word) -> float:
        return self.values[tuple(word)]


def zero_potential(a: TransitionMatrix) -> PotentialTable:
    """The zero table on admissible pairs; its Gibbs chain is the Parry measure."""
    vals = {(i, j): 0.0 for i in range(a.m) for j in range(a.m) if a.entries[i, j]}
    return PotentialTable(1, vals)


def admissible_words(a: TransitionMatrix, length: int) -> list[Word]:
    if length == 1:
        return [(s,) for s in range(a.m)]
    words: list[Word] = [(s,) for s in range(a.m)]
    for _ in range(length - 1):
        words = [w + (t,) for w in words for t in a.successors(w[-1])]
    return words


class MarkovGibbs:
    """Exact stationary data of the block chain compiled from a potential.

    Block states are admissible words of length ``block_len``; a step from
    block ``u`` to ``v`` emits the symbol ``v[-1]`` and is weighted by the
    potential of the combined word, so all cylinder masses are finite products
    of ``stationary`` and ``transitions`` entries.
    """

    def __init__(self, matrix: TransitionMatrix, potential: PotentialTable,
                 lam: float, stationary: np.ndarray, transitions: np.ndarray,
                 blocks: list[Word]):
        self.matrix = matrix
        self.potential = potential
        self.lam = lam
        self.stationary = stationary
        self.transitions = transitions
        self.blocks = blocks
        self.block_len = len(blocks[0])
        self.block_index = {b: i for i, b in enumerate(blocks)}
        self.last_symbol = np.array([b[-1] for b in blocks], dtype=np.int64)
        self.first_symbol = np.array([b[0] for b in blocks], dtype=np.int64)
        self._cum = np.cumsum(transitions, axis=1)
        self._rev = None
        self._cum_rev = None
        self.validate()

    # -- invariants ---------------------------------------------------------

    def validate(self, tol: float = 1e-12) -> None:
        if abs(self.stationary.sum() - 1.0) > tol:
            raise ValueError("stationary vector must sum to 1")
        if np.max(np.abs(self.stationary @ self.transitions - self.stationary)) > tol:
            raise ValueError("stationary vector must be invariant")
        if np.max(np.abs(self.transitions.sum(axis=1) - 1.0)) > tol:
            raise ValueError("transition rows must sum to 1")
        if (self.transitions < 0).any() or (self.stationary < 0).any():
            raise ValueError("negative probabilities")

    # -- derived data -------------------------------------------------------

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def reversed_transitions(self) -> np.ndarray:
        """Time-reversed chain: rows indexed by the later block."""
        if self._rev is None:
            pi = self.stationary
            rev = (self.transitions * pi[:, None]).T / np.where(pi > 0, pi, 1.0)[:, None]
            rev = rev / rev.sum(axis=1, keepdims=True)
            self._rev = rev
        return self._rev

    def second_eigenvalue_modulus(self) -> float:
        ev = np.linalg.eigvals(self.transitions)
        ev = np.sort(np.abs(ev))[::-1]
        return float(ev[1]) if len(ev) > 1 else 0.0

    def terminal_block_distribution(self, past: Sequence[int]) -> np.ndarray:
        """Law of the block covering the last ``block_len`` coordinates of ``past``."""
        w = tuple(int(s) for s in past)
        if len(w) == 0:
            raise ValueError("past must be nonempty")
        if not self.matrix.admissible(w):
            raise ValueError(f"inadmissible past {w}")
        b = self.block_len
        if len(w) >= b:
            dist = np.zeros(self.n_blocks)
            dist[self.block_index[w[-b:]]] = 1.0
            return dist
        k = len(w)
        weights = np.array([self.stationary[i] if self.blocks[i][-k:] == w else 0.0
                            for i in range(self.n_blocks)])
        total = weights.sum()
        if total <= 0:
            raise ValueError(f"past {w} carries no stationary mass")
        return weights / total


def _power_iteration(mat: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Leading eigenvector of an irreducible nonnegative matrix (shift by I)."""
    shifted = mat + np.eye(mat.shape[0])
    v = np.full(mat.shape[0], 1.0 / mat.shape[0])
    for _ in range(max_iter):
        nxt = shifted @ v
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - v)) < tol:
            return nxt
        v = nxt
    raise EigenConvergenceError(
        f"power iteration did not converge within {max_iter} iterations")


def gibbs_from_potential(matrix: TransitionMatrix,
                         potential: PotentialTable | None = None,
                         tol: float = 1e-14, max_iter: int = 100_000) -> MarkovGibbs:
    """Compile a finite-range potential to exact one-step block-chain data."""
    if potential is None:
        potential = zero_potential(matrix)
    b = max(potential.window, 1)
    blocks = admissible_words(matrix, b)
    n = len(blocks)
    index = {w: i for i, w in enumerate(blocks)}
    weights = np.zeros((n, n))
    width = potential.width
    for i, u in enumerate(blocks):
        for t in matrix.successors(u[-1]):
            v = u[1:] + (int(t),)
            j = index.get(v)
            if j is None:
                continue
            combined = u + (int(t),)
            weights[i, j] = np.exp(potential.value(combined[:width]))
    right = _power_iteration(weights, tol, max_iter)
    left = _power_iteration(weights.T, tol, max_iter)
    lam = float(left @ (weights @ right) / (left @ right))
    with np.errstate(divide="ignore", invalid="ignore"):
        trans = weights * right[None, :] / (lam * right[:, None])
    trans[weights == 0] = 0.0
    stat = left * right
    stat /= stat.sum()
    return MarkovGibbs(matrix, potential, lam, stat, trans, blocks)


# ---------------------------------------------------------------------------
# cylinder masses and sampling


def cylinder_measure(mg: MarkovGibbs, cyl: Cylinder, explain: bool = False):
    """Exact mass of a cylinder; start coordinate never enters the value."""
    word = cyl.symbols
    reason = None
    if any(s < 0 or s >= mg.matrix.m for s in word):
        reason = "symbol outside alphabet"
    elif not mg.matrix.admissible(word):
        reason = "word inadmissible under the transition matrix"
    if reason is not None:
        return (0.0, reason) if explain else 0.0
    b = mg.block_len
    if len(word) < b:
        k = len(word)
        total = sum(mg.stationary[i] for i, blk in enumerate(mg.blocks) if blk[:k] == word)
        return (float(total), None) if explain else float(total)
    prob = mg.stationary[mg.block_index[word[:b]]]
    for pos in range(len(word) - b):
        u = mg.block_index[word[pos:pos + b]]
        v = mg.block_index[word[pos + 1:pos + 1 + b]]
        prob *= mg.transitions[u, v]
    return (float(prob), None) if explain else float(prob)


def sample_future(mg: MarkovGibbs, past: Sequence[int], n: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` future symbols from the conditional chain given ``past``."""
    dist = mg.terminal_block_distribution(past)
    state = int(rng.choice(mg.n_blocks, p=dist))
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        state = int(np.searchsorted(mg._cum[state], rng.random(), side="right"))
        out[k] = mg.last_symbol[state]
    return out


def sample_paths(mg: MarkovGibbs, start_blocks: np.ndarray, n: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Vectorised symbol paths: one row per start block, ``n`` emitted symbols."""
    state = np.asarray(start_blocks, dtype=np.int64).copy()
    out = np.empty((len(state), n), dtype=np.int8 if mg.matrix.m < 128 else np.int64)
    cum = mg._cum
    for t in range(n):
        u = rng.random(len(state))
        state = (cum[state] < u[:, None]).sum(axis=1)
        out[:, t] = mg.last_symbol[state]
    return out


def stationary_blocks(mg: MarkovGibbs, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(mg.n_blocks, size=size, p=mg.stationary)


def sample_stationary_word(mg: MarkovGibbs, length: int,
                           rng: np.random.Generator) -> np.ndarray:
    """A stationary-path word of the given length (block marginal at the start)."""
    b = mg.block_len
    start = int(stationary_blocks(mg, 1, rng)[0])
    head = np.array(mg.blocks[start], dtype=np.int64)
    if length <= b:
        return head[:length]
    tail = sample_paths(mg, np.array([start]), length - b, rng)[0].astype(np.int64)
    return np.concatenate([head, tail])


def extend_backward(mg: MarkovGibbs, first_block: int, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` symbols before a block, using the time-reversed chain."""
    rev = mg.reversed_transitions()
    cum = np.cumsum(rev, axis=1)
    state = first_block
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        state = int(np.searchsorted(cum[state], rng.random(), side="right"))
        out[n - 1 - k] = mg.first_symbol[state]
    return out


# ---------------------------------------------------------------------------
# metric and holonomy


def shift_metric(w1: SymbolicWindow, w2: SymbolicWindow,
                 require_radius: int | None = None) -> float:
    """2^-k with k the verified agreement radius of the two windows.

    When the windows agree on their whole common coverage of radius R the
    value 2^-(R+1) is returned: the distance of the worst-case extensions,
    never a guess about unseen symbols.  ``require_radius`` makes missing
    coverage an error instead.
    """
    radius = min(-w1.lo, w1.hi, -w2.lo, w2.hi)
    if require_radius is not None and radius < require_radius:
        raise WindowCoverageError(
            f"windows resolve radius {radius}, need {require_radius}")
    if w1.symbol(0) != w2.symbol(0):
        return 1.0
    for k in range(1, radius + 1):
        if w1.symbol(k) != w2.symbol(k) or w1.symbol(-k) != w2.symbol(-k):
            return 2.0 ** (-k)
    return 2.0 ** (-(radius + 1))


def _conditional_future_prob(mg: MarkovGibbs, terminal_block: int, cyl: Cylinder) -> float:
    """Mass of a future cylinder (start >= 1) given the terminal past block."""
    if cyl.start < 1:
        raise ValueError("future cylinders start at coordinate >= 1")
    dist = np.zeros(mg.n_blocks)
    dist[terminal_block] = 1.0
    for _ in range(cyl.start - 1):
        dist = dist @ mg.transitions
    for symbol in cyl.symbols:
        step = dist @ mg.transitions
        step[mg.last_symbol != symbol] = 0.0
        dist = step
    return float(dist.sum())


def holonomy_ratio(mg: MarkovGibbs, w1: SymbolicWindow, w2: SymbolicWindow,
                   cyl: Cylinder) -> float:
    """Ratio of conditional future masses under the two pasts.

    The comparison map keeps every future coordinate, so both sides see the
    same cylinder word.  Pasts sharing their terminal block give exactly 1.
    """
    b = mg.block_len
    if len(w1.past) < 1 or len(w2.past) < 1:
        raise WindowCoverageError("pasts must cover coordinate 0")
    if b == 1 and w1.symbol(0) != w2.symbol(0):
        raise HolonomyUndefinedError(
            "pasts with different coordinate-0 symbol have incomparable futures")
    d1 = mg.terminal_block_distribution(w1.past)
    d2 = mg.terminal_block_distribution(w2.past)
    num = sum(d1[i] * _conditional_future_prob(mg, i, cyl)
              for i in np.flatnonzero(d1))
    den = sum(d2[i] * _conditional_future_prob(mg, i, cyl)
              for i in np.flatnonzero(d2))
    if num == 0.0 and den == 0.0:
        return 1.0
    if den == 0.0 or num == 0.0:
        raise HolonomyUndefinedError(
            "cylinder reachable from only one of the two pasts")
    return num / den


def holonomy_delta_threshold(mg: MarkovGibbs) -> float:
    """Metric radius below which the holonomy ratio is exactly 1."""
    return 2.0 ** (-(mg.block_len - 1)) if mg.block_len > 1 else 1.0


def holonomy_epsilon_table(mg: MarkovGibbs, max_len: int = 8) -> dict[int, float]:
    """Sup of |ratio - 1| per agreement depth, by exhaustive enumeration.

    Key ``d`` is the number of trailing past coordinates two pasts share
    (metric distance 2^-d); depths >= block length give exactly 0.
    """
    b = mg.block_len
    table: dict[int, float] = {d: 0.0 for d in range(b, b + 1)}
    pasts = admissible_words(mg.matrix, b)
    cylinders = [Cylinder(1, w) for length in range(1, max_len + 1)
                 for w in admissible_words(mg.matrix, length)]
    for d in range(1, b):
        worst = 0.0
        for p1, p2 in itertools.product(pasts, pasts):
            if p1[-d:] != p2[-d:] or p1 == p2:
                continue
            for cyl in cylinders:
                try:
                    r = holonomy_ratio(mg, SymbolicWindow(p1), SymbolicWindow(p2), cyl)
                except HolonomyUndefinedError:
                    continue
                worst = max(worst, abs(r - 1.0))
        table[d] = worst
    return table


# ---------------------------------------------------------------------------
# lifted chains (shared by the cocycle statistics)


def lifted_chain(mg: MarkovGibbs, length: int):
    """Markov chain on admissible words of the given length >= block_len.

    Returns ``(words, index, pi, P)`` with exact marginals and one-step rows.
    """
    if length < mg.block_len:
        length = mg.block_len
    words = admissible_words(mg.matrix, length)
    index = {w: i for i, w in enumerate(words)}
    pi = np.array([cylinder_measure(mg, Cylinder(0, w)) for w in words])
    n = len(words)
    p = np.zeros((n, n))
    b = mg.block_len
    for i, u in enumerate(words):
        ub = mg.block_index[u[-b:]]
        for t in mg.matrix.successors(u[-1]):
            v = u[1:] + (int(t),)
            j = index.get(v)
            if j is None:
                continue
            vb = mg.block_index[v[-b:]]
            p[i, j] = mg.transitions[ub, vb]
    return words, index, pi, p
