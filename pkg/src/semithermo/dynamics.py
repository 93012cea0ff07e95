"""Circle generators, word evaluation, the word metric, and affine reduction.

Points live on the circle R/Z, represented in [0, 1) with the metric
d(x, y) = min(|x-y|, 1-|x-y|).  Three generator families are supported:

* ``lin:k``  -- the linear expanding map x -> kx (mod 1), integer k >= 2;
* ``rot:a``  -- the rigid rotation x -> x + a (mod 1);
* ``mp:b``   -- the Manneville-Pomeau map x(1 + (2x)^b) on [0, 1/2],
  2x - 1 on (1/2, 1], glued to a continuous circle map (neutral fixed
  point at 0, expanding elsewhere).

Words of linear/rotation letters reduce exactly to x -> Dx + t (mod 1)
with integer D and rational t; that reduced form drives every exact fast
path in the package.  All mod-1 reductions go through :func:`wrap01` so
the 0.0/1.0 seam is handled in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import ApproximationDomainError, NotAffineError
from .words import Word

Coordinate = Union[float, Fraction]

LIN = "lin"
ROT = "rot"
MP = "mp"

#: Named rotation angles accepted by the generator grammar.
NAMED_ANGLES = {
    "golden": Fraction(0.6180339887498948482),  # (sqrt(5)-1)/2 rounded to a float
}


def wrap01(x: Coordinate) -> Coordinate:
    """Canonical representative of x in [0, 1); exact for Fractions."""
    return x % 1


def circle_dist(x: Coordinate, y: Coordinate) -> Coordinate:
    """Arc-length metric on R/Z; never exceeds 1/2."""
    d = abs(x - y) % 1
    return min(d, 1 - d)


def signed_gap(x: Coordinate, y: Coordinate) -> Coordinate:
    """Signed representative of x - y in [-1/2, 1/2)."""
    d = (x - y) % 1
    half = Fraction(1, 2) if isinstance(d, Fraction) else 0.5
    return d - 1 if d >= half else d


@dataclass(frozen=True)
class GeneratorSpec:
    """One circle map.  Exactly one of degree/angle/beta is meaningful."""

    kind: str
    degree: int = 0
    angle: Fraction = Fraction(0)
    beta: float = 0.0

    def __post_init__(self):
        if self.kind == LIN:
            if self.degree < 2:
                raise ValueError(f"linear expanding degree must be >= 2, got {self.degree}")
        elif self.kind == ROT:
            object.__setattr__(self, "angle", wrap01(Fraction(self.angle)))
        elif self.kind == MP:
            if not self.beta > 0:
                raise ValueError(f"Manneville-Pomeau beta must be > 0, got {self.beta}")
        else:
            raise ValueError(f"unknown generator kind {self.kind!r}")

    @classmethod
    def linear(cls, degree: int) -> "GeneratorSpec":
        return cls(kind=LIN, degree=degree)

    @classmethod
    def rotation(cls, angle) -> "GeneratorSpec":
        return cls(kind=ROT, angle=Fraction(angle))

    @classmethod
    def manneville(cls, beta: float) -> "GeneratorSpec":
        return cls(kind=MP, beta=beta)

    @property
    def is_affine(self) -> bool:
        return self.kind in (LIN, ROT)

    @property
    def expansion(self) -> int:
        """Integer degree contributed to an affine word (rotations count 1)."""
        return self.degree if self.kind == LIN else 1

    def apply(self, x: float) -> float:
        if self.kind == LIN:
            return wrap01(self.degree * x)
        if self.kind == ROT:
            return wrap01(x + float(self.angle))
        # Manneville-Pomeau, piecewise closed form (no expansion tricks near 0)
        if x <= 0.5:
            return wrap01(x * (1.0 + (2.0 * x) ** self.beta))
        return wrap01(2.0 * x - 1.0)

    def apply_exact(self, x: Fraction) -> Fraction:
        if self.kind == LIN:
            return wrap01(self.degree * x)
        if self.kind == ROT:
            return wrap01(x + self.angle)
        raise NotAffineError("no exact evaluation for the Manneville-Pomeau map")

    def label(self) -> str:
        if self.kind == LIN:
            return f"lin:{self.degree}"
        if self.kind == ROT:
            return f"rot:{float(self.angle):.17g}"
        return f"mp:{self.beta:.17g}"


def parse_generator(text: str) -> GeneratorSpec:
    """Parse the generator grammar ``lin:<k>`` | ``rot:<alpha>`` | ``mp:<beta>``."""
    kind, _, arg = text.strip().partition(":")
    if not arg:
        raise ValueError(f"generator {text!r} needs an argument, e.g. lin:2")
    if kind == LIN:
        return GeneratorSpec.linear(int(arg))
    if kind == ROT:
        if arg in NAMED_ANGLES:
            return GeneratorSpec.rotation(NAMED_ANGLES[arg])
        return GeneratorSpec.rotation(Fraction(arg))
    if kind == MP:
        return GeneratorSpec.manneville(float(arg))
    raise ValueError(f"unknown generator kind in {text!r} (expected lin/rot/mp)")


@dataclass(frozen=True)
class SemigroupSpec:
    """A finite generator family (the identity is never listed).

    The uniform inverse-branch data (contraction ``lam`` and branch-domain
    radius ``delta0``) exists only when every generator is linear expanding;
    in that case lam = 1/(min degree), the worst contraction over all
    inverse branches, and delta0 = 1/2 (any shorter arc lifts branchwise
    under a linear map).  delta_star = delta0/2 is the expansiveness scale.
    """

    generators: tuple[GeneratorSpec, ...]

    def __post_init__(self):
        if len(self.generators) < 1:
            raise ValueError("need at least one generator")

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def all_affine(self) -> bool:
        return all(g.is_affine for g in self.generators)

    @property
    def all_expanding(self) -> bool:
        return all(g.kind == LIN for g in self.generators)

    @property
    def expanding_degrees(self) -> tuple[int, ...]:
        return tuple(g.degree for g in self.generators if g.kind == LIN)

    @property
    def min_degree(self) -> int:
        degs = self.expanding_degrees
        if not degs:
            raise ValueError("semigroup has no expanding generator")
        return min(degs)

    @property
    def lam(self) -> Fraction:
        """Uniform inverse-branch contraction; defined for all-expanding families."""
        if not self.all_expanding:
            raise ValueError("uniform contraction needs all generators expanding")
        return Fraction(1, self.min_degree)

    @property
    def delta0(self) -> Fraction:
        if not self.all_expanding:
            raise ValueError("branch radius needs all generators expanding")
        return Fraction(1, 2)

    @property
    def delta_star(self) -> Fraction:
        return self.delta0 / 2

    def generator(self, letter: int) -> GeneratorSpec:
        if not 1 <= letter <= self.m:
            raise IndexError(f"letter {letter} out of range 1..{self.m}")
        return self.generators[letter - 1]

    def commutes(self) -> bool:
        """True when every pair of generators commutes (affine families only)."""
        if not self.all_affine:
            return False
        forms = [(g.expansion, g.angle if g.kind == ROT else Fraction(0)) for g in self.generators]
        for i, (di, ti) in enumerate(forms):
            for dj, tj in forms[i + 1:]:
                if wrap01(di * tj + ti) != wrap01(dj * ti + tj):
                    return False
        return True

    def label(self) -> str:
        return ",".join(g.label() for g in self.generators)


def parse_semigroup(text: str) -> SemigroupSpec:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty generator list")
    return SemigroupSpec(tuple(parse_generator(p) for p in parts))


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Potential:
    """Observable on the circle with optional Hoelder data (K, alpha).

    ``const:<c>`` is constant; ``cos:<a>,<k>`` is a*cos(2*pi*k*x) with
    Lipschitz constant 2*pi*a*k; ``table:<path>`` is linear interpolation
    through equally spaced samples (wrapping at 1).
    """

    kind: str
    c: float = 0.0
    amplitude: float = 0.0
    frequency: int = 1
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("const", "cos", "table"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "table" and len(self.values) < 2:
            raise ValueError("tabulated potential needs at least two samples")

    @classmethod
    def zero(cls) -> "Potential":
        return cls(kind="const", c=0.0)

    @classmethod
    def constant(cls, c: float) -> "Potential":
        return cls(kind="const", c=float(c))

    @classmethod
    def cosine(cls, amplitude: float, frequency: int = 1) -> "Potential":
        return cls(kind="cos", amplitude=float(amplitude), frequency=int(frequency))

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> "Potential":
        return cls(kind="table", values=tuple(float(v) for v in values))

    @property
    def is_constant(self) -> bool:
        return self.kind == "const"

    def __call__(self, x):
        if self.kind == "const":
            return self.c + np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else self.c
        if self.kind == "cos":
            return self.amplitude * np.cos(2.0 * np.pi * self.frequency * np.asarray(x, dtype=float))
        grid = np.asarray(self.values + (self.values[0],))
        pos = np.asarray(x, dtype=float) % 1.0 * len(self.values)
        return np.interp(pos, np.arange(len(grid)), grid)

    @property
    def sup_norm(self) -> float:
        if self.kind == "const":
            return abs(self.c)
        if self.kind == "cos":
            return abs(self.amplitude)
        return max(abs(v) for v in self.values)

    @property
    def holder(self) -> tuple[float, float]:
        """(K, alpha) with |phi(x)-phi(y)| <= K d(x,y)^alpha."""
        if self.kind == "const":
            return (0.0, 1.0)
        if self.kind == "cos":
            return (2.0 * np.pi * abs(self.amplitude) * self.frequency, 1.0)
        n = len(self.values)
        jumps = [abs(self.values[(i + 1) % n] - self.values[i]) * n for i in range(n)]
        return (max(jumps), 1.0)

    def label(self) -> str:
        if self.kind == "const":
            return f"const:{self.c:.17g}"
        if self.kind == "cos":
            return f"cos:{self.amplitude:.17g},{self.frequency}"
        return f"table[{len(self.values)}]"


def parse_potential(text: str) -> Potential:
    kind, _, arg = text.strip().partition(":")
    if kind == "const":
        return Potential.constant(float(arg))
    if kind == "cos":
        amp, _, freq = arg.partition(",")
        return Potential.cosine(float(amp), int(freq) if freq else 1)
    if kind == "table":
        values = np.loadtxt(arg, ndmin=1)
        return Potential.tabulated(values.tolist())
    raise ValueError(f"unknown potential {text!r} (expected const/cos/table)")


# ---------------------------------------------------------------------------
# word evaluation


def apply_generator(g: GeneratorSpec, x: float) -> float:
    """One step of the action; total on [0, 1)."""
    return g.apply(x)


def evaluate_prefixes(word: Word, S: SemigroupSpec, x: float) -> list[float]:
    """Orbit of x under the word's prefixes: [x, g_1(x), ..., g_n...g_1(x)]."""
    orbit = [x]
    y = x
    for letter in word:
        y = S.generator(letter).apply(y)
        orbit.append(y)
    return orbit


def dyn_distance(word: Word, S: SemigroupSpec, x: float, y: float) -> float:
    """Word metric: max circle distance along all prefixes, j = 0..n inclusive."""
    ox = evaluate_prefixes(word, S, x)
    oy = evaluate_prefixes(word, S, y)
    return max(circle_dist(a, b) for a, b in zip(ox, oy))


def birkhoff_sum(word: Word, S: SemigroupSpec, phi: Potential, x: float) -> float:
    """Sum of phi along the prefixes g_0=id, ..., g_{n-1}; the full word's
    endpoint is excluded.  Empty words are rejected (the convention for the
    empty sum is not fixed here)."""
    if len(word) == 0:
        raise ValueError("Birkhoff sum needs word length >= 1")
    orbit = evaluate_prefixes(word, S, x)
    return float(sum(float(phi(p)) for p in orbit[:-1]))


# ---------------------------------------------------------------------------
# exact affine reduction


@dataclass(frozen=True)
class AffineWordForm:
    """Reduced form of an affine word: x -> D x + t (mod 1), exactly.

    prefix_D[j], prefix_t[j] give the reduced form of the length-j prefix,
    with prefix_D[0] = 1 (identity).  D = prefix_D[n], t = prefix_t[n].
    """

    D: int
    t: Fraction
    prefix_D: tuple[int, ...]
    prefix_t: tuple[Fraction, ...] = field(repr=False, default=())

    @property
    def n(self) -> int:
        return len(self.prefix_D) - 1

    @property
    def max_prefix_D(self) -> int:
        return max(self.prefix_D)

    def apply(self, x: Coordinate) -> Coordinate:
        t = self.t if isinstance(x, Fraction) else float(self.t)
        return wrap01(self.D * x + t)

    def prefix_apply(self, j: int, x: Coordinate) -> Coordinate:
        t = self.prefix_t[j] if isinstance(x, Fraction) else float(self.prefix_t[j])
        return wrap01(self.prefix_D[j] * x + t)

    def compose_after(self, inner: "AffineWordForm") -> "AffineWordForm":
        """Form of (self o inner): inner acts first."""
        pd = inner.prefix_D + tuple(d * inner.D for d in self.prefix_D[1:])
        pt = inner.prefix_t + tuple(wrap01(d * inner.t + t) for d, t in zip(self.prefix_D[1:], self.prefix_t[1:]))
        return AffineWordForm(D=self.D * inner.D, t=wrap01(self.D * inner.t + self.t), prefix_D=pd, prefix_t=pt)


IDENTITY_FORM = AffineWordForm(D=1, t=Fraction(0), prefix_D=(1,), prefix_t=(Fraction(0),))


def reduce_affine(word: Word, S: SemigroupSpec) -> AffineWordForm:
    """Exact reduced form of a linear/rotation word; rejects MP letters."""
    D = 1
    t = Fraction(0)
    prefix_D = [1]
    prefix_t = [Fraction(0)]
    for letter in word:
        g = S.generator(letter)
        if not g.is_affine:
            raise NotAffineError(f"letter {g.label()} is not affine; use the grid path")
        if g.kind == LIN:
            D, t = g.degree * D, wrap01(g.degree * t)
        else:
            t = wrap01(t + g.angle)
        prefix_D.append(D)
        prefix_t.append(t)
    return AffineWordForm(D=D, t=t, prefix_D=tuple(prefix_D), prefix_t=tuple(prefix_t))


def dyn_ball_interval(a: AffineWordForm, x: Coordinate, eps: Fraction) -> tuple[Coordinate, Coordinate]:
    """The word ball {y : every prefix image stays eps-close} as an arc.

    Exact for affine words when eps < 1/(2 max prefix D): below that scale
    no prefix constraint wraps, the constraint set is the single arc
    [x - eps/Dmax, x + eps/Dmax], and the full word maps it onto the arc of
    radius eps*D/Dmax about the image of x.
    """
    eps = Fraction(eps)
    dmax = a.max_prefix_D
    if not eps < Fraction(1, 2 * dmax):
        raise ApproximationDomainError(
            f"eps={eps} too large for the no-wrap guarantee (needs eps < 1/{2 * dmax})"
        )
    r = eps / dmax
    if not isinstance(x, Fraction):
        r = float(r)
    return (x - r, x + r)


def dyn_ball_image(a: AffineWordForm, x: Coordinate, eps: Fraction) -> tuple[Coordinate, Fraction]:
    """(center, radius) of the full word's image of the word ball."""
    eps = Fraction(eps)
    radius = eps * a.D / a.max_prefix_D
    return (a.apply(x), radius)


@lru_cache(maxsize=64)
def _distinct_expansions_cached(degrees: tuple[int, ...], nmax: int) -> tuple[int, ...]:
    vals = {1}
    frontier = {1}
    for _ in range(nmax):
        frontier = {v * d for v in frontier for d in degrees}
        vals |= frontier
    return tuple(sorted(vals))


def distinct_word_expansions(S: SemigroupSpec, nmax: int) -> tuple[int, ...]:
    """Sorted distinct expansion factors D over all affine words of length <= nmax."""
    if not S.all_affine:
        raise NotAffineError("expansion factors exist only for affine semigroups")
    degrees = tuple(sorted({g.expansion for g in S.generators}))
    return _distinct_expansions_cached(degrees, nmax)
