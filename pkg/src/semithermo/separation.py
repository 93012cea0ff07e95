"""Maximal separated sets and minimal covers in the word metric.

Separated sets use the strict inequality d_w(x, y) > eps; covers bound the
d_w-diameter by eps (non-strict).  The exists-a-word separation used by the
max-word entropy keeps the non-strict d(g x, g y) >= eps of its original
definition; the two conventions are deliberately not reconciled.

For affine words everything reduces to integer arithmetic on grid offsets:
d_w between two grid points at index offset j is max_D circ(D*j mod M)/M over
the distinct prefix expansions D.  The sweep grid for an affine word is
snapped up to a multiple of floor(Dmax/eps), the natural packing count, so
that the greedy result is free of the ceil-quantization bias a raw grid
introduces (a raw 2^16 grid misestimates growth rates by up to 20% once
Dmax/eps approaches the resolution; the aligned grid reproduces continuum
counts exactly and is verified offset-by-offset, not assumed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import (
    AffineWordForm,
    SemigroupSpec,
    distinct_word_expansions,
    reduce_affine,
)
from .errors import BudgetError, GridTooCoarseError, NotAffineError
from .words import Word, enumerate_words

#: Largest effective grid the integer sweep will allocate.
MAX_GRID = 1 << 26
#: Work cap for the dense (non-affine) pairwise greedy.
MAX_DENSE_WORK = 1 << 24


@dataclass(frozen=True)
class Arc:
    """Closed arc {x : d(x, center) <= radius} on the circle."""

    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("arc radius must be positive")

    @property
    def full(self) -> bool:
        return self.radius >= 0.5

    def contains(self, x: float) -> bool:
        d = abs((x - self.center) % 1.0)
        return min(d, 1.0 - d) <= self.radius + 1e-15


@dataclass(frozen=True)
class GridSpec:
    """Sweep resolution and optional restriction arc."""

    resolution: int = 1 << 16
    subset: Arc | None = None

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be >= 2")


@dataclass
class SeparatedSet:
    word: Word
    epsilon: Fraction
    points: np.ndarray
    method: str  # "exact" (aligned affine sweep) or "grid" (dense float sweep)
    grid_m: int
    saturated: bool = False

    def __len__(self) -> int:
        return len(self.points)


def _as_fraction(eps) -> Fraction:
    eps = Fraction(eps)
    if not 0 < eps:
        raise ValueError(f"epsilon must be positive, got {eps}")
    if eps.denominator > 1 << 40:
        raise ValueError(
            "epsilon has a pathological denominator; pass an exact rational "
            f"(e.g. Fraction(1, 64) or '1/64'), got {eps}"
        )
    return eps


def _check_grid(grid: GridSpec, eps: Fraction) -> None:
    if grid.resolution * eps < 2:
        raise GridTooCoarseError(
            f"grid M={grid.resolution} cannot resolve eps={eps} (need M >= 2/eps)"
        )


def _window_indices(E: Arc | None, M: int) -> tuple[int, int, bool]:
    """(start, length, circular) of the candidate index range on a grid of M."""
    if E is None or E.full:
        return 0, M, True
    start = math.ceil((E.center - E.radius) * M)
    last = math.floor((E.center + E.radius) * M)
    length = last - start + 1
    if length >= M:
        return 0, M, True
    if length < 1:
        raise GridTooCoarseError(f"restriction arc holds no grid point at M={M}")
    return start, length, False


def _offset_gap(offsets: np.ndarray, expansions_mod: np.ndarray, M: int) -> np.ndarray:
    """max_D circ(D * offset mod M), vectorized; exact in int64."""
    best = np.zeros(offsets.shape, dtype=np.int64)
    for D in expansions_mod:
        r = (D * offsets) % M
        np.maximum(best, np.minimum(r, M - r), out=best)
    return best


def affine_separated_indices(
    expansions: tuple[int, ...],
    eps: Fraction,
    resolution: int,
    E: Arc | None = None,
    strict: bool = True,
) -> tuple[np.ndarray, int]:
    """Greedy maximal separated set for an affine offset structure.

    ``expansions`` are the distinct prefix expansion factors whose maximum
    circ-image defines the pairwise gap.  Returns (grid indices, effective M).
    The sweep admits candidates in coordinate order; the arithmetic
    progression it produces is verified against every realized pair offset,
    with a sequential fallback when a resonant offset interferes.
    """
    eps = _as_fraction(eps)
    p, q = eps.numerator, eps.denominator
    Dhat = max(expansions)
    base = max(1, (Dhat * q) // p)
    M = base * max(1, math.ceil(max(resolution, base) / base))
    if M > MAX_GRID:
        raise BudgetError(f"aligned grid {M} exceeds cap {MAX_GRID} (Dmax={Dhat}, eps={eps})")
    start, length, circular = _window_indices(E, M)

    # Offset j fails strict separation iff Dhat*j <= eps*M (small offsets are
    # in the linear regime, so the max over expansions is Dhat*j exactly).
    if strict:
        head = (p * M) // (q * Dhat)
    else:
        head = -(-(p * M) // (q * Dhat)) - 1  # ceil - 1
    head = min(head, length - 1)
    step = head + 1
    count = (length - 1) // step + 1

    # Threshold: gap separates iff circ >= thr (exact integer form of the
    # strict/non-strict rational comparison).
    thr = (p * M) // q + 1 if strict else -(-(p * M) // q)
    exps_mod = np.unique(np.asarray([d % M for d in expansions], dtype=np.int64))

    if circular:
        while count > 1:
            wrap = M - (count - 1) * step
            if int(_offset_gap(np.asarray([wrap % M], dtype=np.int64), exps_mod, M)[0]) >= thr:
                break
            count -= 1

    offs = (np.arange(1, count, dtype=np.int64) * step) % M
    if count <= 1 or bool(np.all(_offset_gap(offs, exps_mod, M) >= thr)):
        idx = (start + step * np.arange(count, dtype=np.int64)) % M
        return idx, M

    # Resonant interference: run the literal greedy.
    return _sequential_greedy(exps_mod, thr, M, start, length, head), M


def _sequential_greedy(
    exps_mod: np.ndarray, thr: int, M: int, start: int, length: int, head: int
) -> np.ndarray:
    if M > 1 << 22:
        raise BudgetError(f"resonant sweep fallback at M={M} exceeds the work cap")
    gap = _offset_gap(np.arange(M, dtype=np.int64), exps_mod, M)
    bad = set(int(b) for b in np.flatnonzero(gap < thr) if b != 0)
    extra = sorted(b for b in bad if b > head)
    admitted = np.zeros(M, dtype=bool)
    out = []
    i = 0
    while i < length:
        pos = (start + i) % M
        if any(admitted[(pos - b) % M] for b in extra) or any(
            admitted[(pos - b) % M] for b in range(1, head + 1)
        ):
            i += 1
            continue
        admitted[pos] = True
        out.append(pos)
        i += head + 1
    return np.asarray(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# public operations


def maximal_separated(
    word: Word,
    S: SemigroupSpec,
    eps,
    grid: GridSpec | None = None,
    E: Arc | None = None,
) -> SeparatedSet:
    """Greedy maximal (word, eps)-separated subset of E (default: whole circle).

    Points are admitted in coordinate order iff their word metric to every
    admitted point strictly exceeds eps; the result is maximal with respect
    to the sweep grid.
    """
    grid = grid or GridSpec()
    eps = _as_fraction(eps)
    _check_grid(grid, eps)
    E = E or grid.subset
    try:
        form = reduce_affine(word, S)
    except NotAffineError:
        return _dense_separated(word, S, eps, grid, E)
    exps = tuple(sorted(set(form.prefix_D)))
    idx, M = affine_separated_indices(exps, eps, grid.resolution, E=E, strict=True)
    return SeparatedSet(
        word=word,
        epsilon=eps,
        points=idx.astype(float) / M,
        method="exact",
        grid_m=M,
        saturated=False,
    )


def _orbit_table(word: Word, S: SemigroupSpec, xs: np.ndarray) -> np.ndarray:
    """Prefix orbits of the candidate points, shape (n+1, len(xs))."""
    rows = [xs]
    y = xs
    for letter in word:
        g = S.generator(letter)
        if g.kind == "lin":
            y = (g.degree * y) % 1.0
        elif g.kind == "rot":
            y = (y + float(g.angle)) % 1.0
        else:
            y = np.where(y <= 0.5, y * (1.0 + (2.0 * y) ** g.beta), 2.0 * y - 1.0) % 1.0
        rows.append(y)
    return np.stack(rows)


def _circ_max(block_a: np.ndarray, block_b: np.ndarray) -> np.ndarray:
    """max over rows of circle distance between orbit columns (broadcasts)."""
    d = np.abs(block_a - block_b)
    np.minimum(d, 1.0 - d, out=d)
    return d.max(axis=0)


def _dense_separated(
    word: Word, S: SemigroupSpec, eps: Fraction, grid: GridSpec, E: Arc | None
) -> SeparatedSet:
    M = grid.resolution
    start, length, _ = _window_indices(E, M)
    if length * (len(word) + 1) > MAX_DENSE_WORK:
        raise BudgetError(
            f"dense sweep needs {length}x{len(word) + 1} orbit table; shrink the grid or word"
        )
    idx = (start + np.arange(length)) % M
    xs = idx.astype(float) / M
    orb = _orbit_table(word, S, xs)
    eps_f = float(eps)
    admitted: list[int] = []
    for c in range(length):
        if admitted:
            gaps = _circ_max(orb[:, c : c + 1], orb[:, admitted])
            if not bool(np.all(gaps > eps_f)):
                continue
        admitted.append(c)
    pts = xs[admitted]
    return SeparatedSet(
        word=word,
        epsilon=eps,
        points=pts,
        method="grid",
        grid_m=M,
        saturated=len(word) > 0 and len(admitted) == length,
    )


def exact_cover_count(a: AffineWordForm, eps) -> int:
    """Minimal number of arcs of word-metric diameter <= eps, in closed form.

    An arc of Euclidean length eps/Dmax has word diameter exactly eps (its
    worst prefix stretches it by Dmax = max prefix expansion), and no set of
    word diameter <= eps can be longer, so the minimum count is
    ceil(Dmax/eps).  Valid for every affine word; appending rotation letters
    leaves Dmax, hence the count, unchanged.
    """
    eps = _as_fraction(eps)
    if eps > Fraction(1, 2):
        raise ValueError(f"cover scale must satisfy eps <= 1/2, got {eps}")
    dmax = a.max_prefix_D
    return -((-dmax * eps.denominator) // eps.numerator)


def min_cover_count(
    word: Word,
    S: SemigroupSpec,
    eps,
    grid: GridSpec | None = None,
    E: Arc | None = None,
) -> int:
    """Greedy arc cover on the grid: repeatedly take the longest arc of
    word-metric diameter <= eps starting at the first uncovered grid point.
    Upper bound on the true minimum; exact in the grid limit for affine
    words."""
    grid = grid or GridSpec()
    eps = _as_fraction(eps)
    _check_grid(grid, eps)
    E = E or grid.subset
    try:
        form = reduce_affine(word, S)
    except NotAffineError:
        return _dense_cover_count(word, S, eps, grid, E)
    dmax = form.max_prefix_D
    p, q = eps.numerator, eps.denominator
    base = max(1, (dmax * q) // p)
    M = base * max(1, math.ceil(max(grid.resolution, base) / base))
    if M > MAX_GRID:
        raise BudgetError(f"aligned grid {M} exceeds cap {MAX_GRID}")
    _, length, _ = _window_indices(E, M)
    span = (p * M) // (q * dmax)  # longest index span with Dmax*span/M <= eps
    return -(-length // (span + 1))


def _dense_cover_count(
    word: Word, S: SemigroupSpec, eps: Fraction, grid: GridSpec, E: Arc | None
) -> int:
    M = grid.resolution
    start, length, _ = _window_indices(E, M)
    if length * (len(word) + 1) > MAX_DENSE_WORK:
        raise BudgetError("dense cover sweep exceeds the work cap")
    idx = (start + np.arange(length)) % M
    orb = _orbit_table(word, S, idx.astype(float) / M)
    eps_f = float(eps)
    count = 0
    pos = 0
    while pos < length:
        count += 1
        hi = pos
        # extend while the arc [pos, hi] keeps word diameter <= eps
        while hi + 1 < length:
            gaps = _circ_max(orb[:, hi + 1 : hi + 2], orb[:, pos : hi + 2])
            if float(gaps.max()) > eps_f:
                break
            hi += 1
        pos = hi + 1
    return count


def glw_separated_count(
    S: SemigroupSpec,
    n: int,
    eps,
    grid: GridSpec | None = None,
    E: Arc | None = None,
) -> tuple[int, int]:
    """Maximal cardinality of a set pairwise separated by SOME word of
    length <= n at scale >= eps (note the non-strict inequality).

    Returns (count, effective grid).  For affine families the pairwise test
    depends only on the index offset through the distinct expansion factors
    of all words of length <= n, so the aligned integer sweep applies; other
    families go through memoized prefix-orbit tables on the raw grid.
    """
    grid = grid or GridSpec()
    eps = _as_fraction(eps)
    _check_grid(grid, eps)
    E = E or grid.subset
    if S.all_affine:
        exps = distinct_word_expansions(S, n)
        idx, M = affine_separated_indices(exps, eps, grid.resolution, E=E, strict=False)
        return len(idx), M
    return _dense_glw_count(S, n, eps, grid, E)


def _dense_glw_count(
    S: SemigroupSpec, n: int, eps: Fraction, grid: GridSpec, E: Arc | None
) -> tuple[int, int]:
    M = grid.resolution
    start, length, _ = _window_indices(E, M)
    total_words = sum(S.m**k for k in range(n + 1))
    if length * total_words > MAX_DENSE_WORK:
        raise BudgetError(
            f"max-word sweep needs {total_words} orbit rows on {length} points; "
            "shrink the grid or n"
        )
    xs = ((start + np.arange(length)) % M).astype(float) / M
    # images of every word of length <= n, built level by level
    rows = [xs]
    level = [xs]
    for _ in range(n):
        nxt = []
        for img in level:
            for g in S.generators:
                if g.kind == "lin":
                    y = (g.degree * img) % 1.0
                elif g.kind == "rot":
                    y = (img + float(g.angle)) % 1.0
                else:
                    y = np.where(img <= 0.5, img * (1.0 + (2.0 * img) ** g.beta), 2.0 * img - 1.0) % 1.0
                nxt.append(y)
        level = nxt
        rows.extend(level)
    table = np.stack(rows)
    eps_f = float(eps)
    admitted: list[int] = []
    for c in range(length):
        if admitted:
            gaps = _circ_max(table[:, c : c + 1], table[:, admitted])
            if not bool(np.all(gaps >= eps_f)):
                continue
        admitted.append(c)
    return len(admitted), M
