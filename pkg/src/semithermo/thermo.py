"""Partition functions and entropy/pressure estimation for word averages.

The central object is the word-averaged partition function at scale eps,

    Z_n(phi, eps) = (1/m^n) * sum over all length-n words w of
                    sup_E sum_{x in E} exp(S_w phi(x)),

where E ranges over (w, n, eps)-separated sets and S_w phi sums phi along
the word's prefixes g_0 = id, ..., g_{n-1}.  Entropy is the phi = 0 case.
Two routes compute it:

* ``exact`` (affine families): the minimal-cover route.  For phi constant
  the per-word cover count is ceil(Dmax/eps) in exact integer arithmetic;
  otherwise the sup over each cover arc is taken at arc endpoints and
  midpoint (monotone-piece bound, error folded into the reported spread).
* ``grid``: greedy maximal separated sets per word on the sweep grid.

Growth rates are read off as the slope of log Z_n over the last three
values of n (consecutive log-differences), which is exact on the
closed-form path and immune to the (1/n) log(1/eps) offset that
contaminates the naive log Z_n / n quotient.  The reported estimate is the
slope at the smallest scheduled eps; for strongly expansive all-expanding
families a single scale below delta* already computes the limit, and the
spread over eps is reported as a diagnostic, never hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import (
    AffineWordForm,
    Potential,
    SemigroupSpec,
    reduce_affine,
)
from .errors import BudgetError, NotAffineError, PreconditionError
from .separation import (
    Arc,
    GridSpec,
    SeparatedSet,
    affine_separated_indices,
    glw_separated_count,
    maximal_separated,
    _orbit_table,
)
from .words import Word, count_distinct_commuting, enumerate_words


@dataclass(frozen=True)
class Schedule:
    """Scales and word lengths an estimator walks through.

    threads > 1 fans the per-word grid work over a worker pool; results are
    gathered in word order so the reduction stays bit-reproducible.
    """

    eps_list: tuple[Fraction, ...]
    n_values: tuple[int, ...]
    method: str = "auto"  # auto | exact | grid
    grid: GridSpec = field(default_factory=GridSpec)
    word_budget: int = 10**8
    threads: int = 1

    def __post_init__(self):
        if not self.eps_list:
            raise ValueError("schedule needs at least one epsilon")
        if len(self.n_values) < 3:
            raise ValueError("schedule needs at least three word lengths")
        if sorted(self.n_values) != list(self.n_values):
            raise ValueError("n values must be increasing")
        if self.method not in ("auto", "exact", "grid"):
            raise ValueError(f"unknown method {self.method!r}")

    @classmethod
    def make(
        cls,
        eps="1/64",
        n_max: int = 6,
        n_min: int = 1,
        method: str = "auto",
        grid_m: int = 1 << 16,
    ) -> "Schedule":
        eps_list = tuple(Fraction(e) for e in (eps if isinstance(eps, (list, tuple)) else [eps]))
        return cls(
            eps_list=eps_list,
            n_values=tuple(range(n_min, n_max + 1)),
            method=method,
            grid=GridSpec(resolution=grid_m),
        )


@dataclass
class PartitionFunctionSample:
    n: int
    epsilon: Fraction
    logZ: float
    method: str
    potential: str
    count: int | None = None  # exact integer count when the route provides one
    saturated: bool = False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": str(self.epsilon),
            "logZ": self.logZ,
            "method": self.method,
            "potential": self.potential,
            "count": None if self.count is None else str(self.count),
            "saturated": self.saturated,
        }


@dataclass
class EstimateReport:
    kind: str
    samples: list[PartitionFunctionSample]
    rates: dict[Fraction, float]
    estimate: float
    diagnostics: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "estimate": self.estimate,
            "rates": {str(e): r for e, r in self.rates.items()},
            "samples": [s.to_dict() for s in self.samples],
            "diagnostics": self.diagnostics,
        }


def _logsumexp(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    peak = float(values.max())
    return peak + math.log(float(np.exp(values - peak).sum()))


def _ceil_div_frac(numer: int, eps: Fraction) -> int:
    """ceil(numer / eps) in exact integers."""
    return -((-numer * eps.denominator) // eps.numerator)


def _affine_birkhoff(form: AffineWordForm, xs: np.ndarray, phi: Potential) -> np.ndarray:
    """S_w phi at each point, summed over prefixes 0..n-1, vectorized."""
    out = np.zeros(len(xs), dtype=float)
    for j in range(form.n):
        out += np.asarray(phi((form.prefix_D[j] * xs + float(form.prefix_t[j])) % 1.0), dtype=float)
    return out


def _orbit_birkhoff(word: Word, S: SemigroupSpec, xs: np.ndarray, phi: Potential) -> np.ndarray:
    orb = _orbit_table(word, S, xs)
    return np.sum([np.asarray(phi(row), dtype=float) for row in orb[:-1]], axis=0)


def _arc_sup_values(form: AffineWordForm, eps: Fraction, phi: Potential) -> np.ndarray:
    """Per-arc sup of the prefix phi-sum over the minimal equal-arc cover.

    The circle splits into N = ceil(Dmax/eps) arcs of length 1/N, each of
    word diameter <= eps; the sup on each arc is evaluated at its endpoints
    and midpoint.
    """
    N = _ceil_div_frac(form.max_prefix_D, eps)
    starts = np.arange(N, dtype=float) / N
    pts = np.concatenate([starts, starts + 0.5 / N, starts + 1.0 / N]) % 1.0
    vals = _affine_birkhoff(form, pts, phi)
    return vals.reshape(3, N).max(axis=0)


def partition_function(
    S: SemigroupSpec,
    n: int,
    eps,
    phi: Potential | None = None,
    method: str = "auto",
    grid: GridSpec | None = None,
    E: Arc | None = None,
    word_budget: int = 10**8,
    threads: int = 1,
) -> PartitionFunctionSample:
    """One sample of log Z_n, computed in the log domain with a fixed
    lexicographic reduction order over words."""
    phi = phi or Potential.zero()
    eps = Fraction(eps)
    grid = grid or GridSpec()
    if n < 1:
        raise ValueError("partition function needs n >= 1")
    if method == "auto":
        method = "exact" if (S.all_affine and E is None) else "grid"
    if method == "exact":
        if not S.all_affine:
            raise NotAffineError("exact method needs affine generators; use the grid method")
        if E is not None:
            raise PreconditionError("exact method covers the whole circle; use grid for arcs")
        return _exact_sample(S, n, eps, phi, word_budget)
    return _grid_sample(S, n, eps, phi, grid, E, word_budget, threads)


def _exact_sample(
    S: SemigroupSpec, n: int, eps: Fraction, phi: Potential, budget: int
) -> PartitionFunctionSample:
    logm = math.log(S.m)
    if phi.is_constant:
        total = 0
        for w in enumerate_words(S.m, n, budget):
            total += _ceil_div_frac(reduce_affine(w, S).max_prefix_D, eps)
        logZ = math.log(total) - n * logm + n * phi.c
        return PartitionFunctionSample(n, eps, logZ, "exact", phi.label(), count=total)
    logs = []
    for w in enumerate_words(S.m, n, budget):
        form = reduce_affine(w, S)
        logs.append(_logsumexp(_arc_sup_values(form, eps, phi)))
    logZ = _logsumexp(np.asarray(logs)) - n * logm
    return PartitionFunctionSample(n, eps, logZ, "exact", phi.label())


def _grid_sample(
    S: SemigroupSpec,
    n: int,
    eps: Fraction,
    phi: Potential,
    grid: GridSpec,
    E: Arc | None,
    budget: int,
    threads: int = 1,
) -> PartitionFunctionSample:
    logm = math.log(S.m)
    flat = phi.is_constant

    def one_word(w: Word) -> tuple[float, int, bool]:
        sep = maximal_separated(w, S, eps, grid=grid, E=E)
        if flat:
            return math.log(len(sep)) + n * phi.c, len(sep), sep.saturated
        vals = (
            _affine_birkhoff(reduce_affine(w, S), sep.points, phi)
            if S.all_affine
            else _orbit_birkhoff(w, S, sep.points, phi)
        )
        return _logsumexp(vals), len(sep), sep.saturated

    words = list(enumerate_words(S.m, n, budget))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_word, words))  # order-preserving
    else:
        results = [one_word(w) for w in words]
    logs = np.asarray([r[0] for r in results])
    count_total = sum(r[1] for r in results)
    saturated = any(r[2] for r in results)
    logZ = _logsumexp(logs) - n * logm
    return PartitionFunctionSample(
        n, eps, logZ, "grid", phi.label(),
        count=count_total if flat else None, saturated=saturated,
    )


# ---------------------------------------------------------------------------
# rate estimation


def _slope(samples: list[PartitionFunctionSample], k_points: int = 3) -> tuple[float, float, dict]:
    usable = [s for s in samples if not s.saturated]
    excluded = len(samples) - len(usable)
    if len(usable) < 2:
        raise PreconditionError("need at least two unsaturated samples for a rate")
    usable.sort(key=lambda s: s.n)
    diffs = [
        (b.logZ - a.logZ) / (b.n - a.n) for a, b in zip(usable, usable[1:])
    ]
    window = diffs[-(k_points - 1):]
    rate = float(sum(window) / len(window))
    residual = max(abs(d - rate) for d in window)
    degenerate = all(abs(d) < 1e-14 for d in diffs)
    return rate, residual, {"excluded_saturated": excluded, "degenerate": degenerate}


def estimate_pressure(
    S: SemigroupSpec, phi: Potential, schedule: Schedule, E: Arc | None = None
) -> EstimateReport:
    """Pressure estimate: per-eps slopes of log Z_n, final value at the
    smallest eps.  For an all-expanding family with eps below the
    expansiveness scale delta* the fixed-scale value is already the limit;
    the report flags whether that regime applies."""
    samples: list[PartitionFunctionSample] = []
    rates: dict[Fraction, float] = {}
    residual = 0.0
    flags: dict = {}
    method = schedule.method
    if E is not None and method != "grid":
        method = "grid"
    for eps in sorted(schedule.eps_list, reverse=True):
        per_eps = [
            partition_function(
                S, n, eps, phi, method=method, grid=schedule.grid, E=E,
                word_budget=schedule.word_budget, threads=schedule.threads,
            )
            for n in schedule.n_values
        ]
        samples.extend(per_eps)
        rate, res, info = _slope(per_eps)
        rates[eps] = rate
        residual, flags = res, info
    eps_min = min(schedule.eps_list)
    spread = max(rates.values()) - min(rates.values())
    fixed_scale = S.all_expanding and eps_min < S.delta_star
    diagnostics = {
        "fit_residual": residual,
        "eps_spread": spread,
        "fixed_scale_valid": fixed_scale,
        "method": samples[0].method if samples else method,
        **flags,
    }
    return EstimateReport(
        kind="pressure", samples=samples, rates=rates,
        estimate=rates[eps_min], diagnostics=diagnostics,
    )


def estimate_entropy(S: SemigroupSpec, schedule: Schedule, E: Arc | None = None) -> EstimateReport:
    """Word-averaged entropy: pressure of the zero potential."""
    report = estimate_pressure(S, Potential.zero(), schedule, E=E)
    report.kind = "entropy"
    return report


def glw_entropy(S: SemigroupSpec, schedule: Schedule, E: Arc | None = None) -> EstimateReport:
    """Max-word (Ghys-Langevin-Walczak) entropy: growth of the count of
    points separable at scale >= eps by some word of length <= n.  The
    samples store raw log-counts; there is no word average here."""
    samples: list[PartitionFunctionSample] = []
    rates: dict[Fraction, float] = {}
    residual, flags = 0.0, {}
    for eps in sorted(schedule.eps_list, reverse=True):
        per_eps = []
        for n in schedule.n_values:
            count, m_eff = glw_separated_count(S, n, eps, grid=schedule.grid, E=E)
            saturated = (not S.all_affine) and count >= m_eff
            per_eps.append(
                PartitionFunctionSample(
                    n, eps, math.log(count), "glw", "const:0", count=count, saturated=saturated
                )
            )
        samples.extend(per_eps)
        rate, residual, flags = _slope(per_eps)
        rates[eps] = rate
    eps_min = min(schedule.eps_list)
    diagnostics = {
        "fit_residual": residual,
        "eps_spread": max(rates.values()) - min(rates.values()),
        "method": "glw",
        **flags,
    }
    return EstimateReport(
        kind="glw", samples=samples, rates=rates, estimate=rates[eps_min], diagnostics=diagnostics
    )


# ---------------------------------------------------------------------------
# pressure curves on shared supports


@dataclass
class SharedSupport:
    """Separated points (or cover-arc sup stencils) fixed once per (eps, n)
    and reused across potential multiples, so the algebraic identities of
    the pressure function hold sample-by-sample, not just in the limit.

    Grid rows are 1-d value vectors over separated points.  Exact rows are
    (3, N) stencils over cover arcs; the per-arc sup is taken after scaling
    by t, since max and multiplication by a negative t do not commute.
    """

    eps: Fraction
    method: str
    per_n: dict[int, list[np.ndarray]]  # n -> per-word base values of S_w(phi)
    m: int

    def log_partition(self, n: int, t: float) -> float:
        logs = []
        for vals in self.per_n[n]:
            scaled = t * vals
            if scaled.ndim == 2:
                scaled = scaled.max(axis=0)
            logs.append(_logsumexp(scaled))
        return _logsumexp(np.asarray(logs)) - n * math.log(self.m)


def build_shared_support(
    S: SemigroupSpec, phi: Potential, schedule: Schedule, eps: Fraction
) -> SharedSupport:
    method = schedule.method
    if method == "auto":
        method = "grid"
    per_n: dict[int, list[np.ndarray]] = {}
    for n in schedule.n_values:
        rows: list[np.ndarray] = []
        for w in enumerate_words(S.m, n, schedule.word_budget):
            if method == "exact":
                form = reduce_affine(w, S)
                N = _ceil_div_frac(form.max_prefix_D, eps)
                starts = np.arange(N, dtype=float) / N
                pts = np.concatenate([starts, starts + 0.5 / N, starts + 1.0 / N]) % 1.0
                rows.append(_affine_birkhoff(form, pts, phi).reshape(3, N))
            else:
                sep = maximal_separated(w, S, eps, grid=schedule.grid)
                vals = (
                    _affine_birkhoff(reduce_affine(w, S), sep.points, phi)
                    if S.all_affine
                    else _orbit_birkhoff(w, S, sep.points, phi)
                )
                rows.append(vals)
        per_n[n] = rows
    return SharedSupport(eps=eps, method=method, per_n=per_n, m=S.m)


def pressure_curve(
    S: SemigroupSpec, phi: Potential, t_values, schedule: Schedule
) -> dict:
    """P(t*phi) along t on shared supports.

    Returns the per-t growth-rate estimates plus the full per-sample table
    P_n(t) = (1/n) log Z_n(t*phi), on which the Lipschitz bound
    |P_n(t1) - P_n(t2)| <= |t1 - t2| * sup|phi| and the constant-shift
    identity are exact (up to roundoff), not asymptotic.
    """
    t_values = [float(t) for t in t_values]
    eps = min(schedule.eps_list)
    support = build_shared_support(S, phi, schedule, eps)
    table: dict[int, dict[float, float]] = {}
    curve = []
    for t in t_values:
        per_n = {}
        sample_objs = []
        for n in schedule.n_values:
            logZ = support.log_partition(n, t)
            per_n[n] = logZ / n
            sample_objs.append(
                PartitionFunctionSample(n, eps, logZ, support.method, f"{t:g}*{phi.label()}")
            )
        rate, _, _ = _slope(sample_objs)
        curve.append((t, rate))
        for n, v in per_n.items():
            table.setdefault(n, {})[t] = v
    return {
        "eps": eps,
        "t_values": t_values,
        "curve": curve,
        "P_samples": table,
        "sup_norm": phi.sup_norm,
        "method": support.method,
    }


# ---------------------------------------------------------------------------
# verification-style checks


def variation_bound_check(
    S: SemigroupSpec,
    phi: Potential,
    eps,
    n_max: int = 8,
    samples: int = 10**4,
    seed: int = 0,
) -> dict:
    """Sampled check of the bounded-distortion inequality for Hoelder phi
    over an all-expanding family: the Birkhoff-sum variation across a word
    ball of radius eps never exceeds K * eps^alpha / (1 - lam^alpha)."""
    eps = Fraction(eps)
    K, alpha = phi.holder
    if not S.all_expanding:
        raise PreconditionError("distortion bound needs all generators expanding")
    lam = float(S.lam)
    bound = K * float(eps) ** alpha / (1.0 - lam**alpha)
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    for _ in range(samples):
        length = int(rng.integers(1, n_max + 1))
        word = tuple(int(v) for v in rng.integers(1, S.m + 1, size=length))
        form = reduce_affine(word, S)
        x = float(rng.random())
        r = float(eps) / form.max_prefix_D
        y = (x + float(rng.uniform(-r, r))) % 1.0
        pts = np.asarray([x, y])
        sx, sy = _affine_birkhoff(form, pts, phi)
        var = abs(float(sx) - float(sy))
        worst = max(worst, var)
        if var > bound:
            violations += 1
    return {
        "bound": bound,
        "max_variation": worst,
        "violations": violations,
        "samples": samples,
        "holder": {"K": K, "alpha": alpha},
        "lam": lam,
        "pass": violations == 0,
    }


def subadditivity_check(
    S: SemigroupSpec,
    phi: Potential,
    eps,
    n_range: tuple[int, ...] = (1, 2, 3, 4),
    tol: float = 1e-9,
    word_budget: int = 10**8,
) -> dict:
    """Checks a_{n+l} <= a_n + a_l for the un-normalized cover sums
    a_n = log sum_w inf-cover sum_U exp(S_w phi(U)).

    Exact (big-integer) on affine families with flat phi; the arc-stencil
    route otherwise.  Non-affine families fall back to the grid route with
    a widened tolerance, and the report says so.
    """
    eps = Fraction(eps)
    ns = sorted(set(n_range))
    sums_needed = sorted({a + b for a in ns for b in ns} | set(ns))
    grid_fallback = not S.all_affine
    if grid_fallback:
        tol = max(tol, 0.5)
    a: dict[int, float] = {}
    for n in sums_needed:
        if S.all_affine and phi.is_constant:
            total = 0
            for w in enumerate_words(S.m, n, word_budget):
                total += _ceil_div_frac(reduce_affine(w, S).max_prefix_D, eps)
            a[n] = math.log(total) + n * phi.c
        elif S.all_affine:
            logs = [
                _logsumexp(_arc_sup_values(reduce_affine(w, S), eps, phi))
                for w in enumerate_words(S.m, n, word_budget)
            ]
            a[n] = _logsumexp(np.asarray(logs))
        else:
            sample = _grid_sample(S, n, eps, phi, GridSpec(), None, word_budget)
            a[n] = sample.logZ + n * math.log(S.m)
    rows = []
    ok_all = True
    for n in ns:
        for l in ns:
            lhs, rhs = a[n + l], a[n] + a[l]
            ok = lhs <= rhs + tol
            ok_all = ok_all and ok
            rows.append({"n": n, "l": l, "a_sum": lhs, "a_n_plus_a_l": rhs, "ok": ok})
    return {
        "rows": rows,
        "pass": ok_all,
        "tolerance": tol,
        "grid_fallback": grid_fallback,
        "a_values": {str(k): v for k, v in a.items()},
    }


def entropy_point_probe(
    S: SemigroupSpec, x0: float, radius: float, schedule: Schedule
) -> dict:
    """Local-vs-global entropy comparison.

    Separated sets are seeded only inside the arc around x0 for the local
    estimate; both estimates use the grid route so their discretization
    biases cancel in the gap.
    """
    if not 0 < radius < 0.25:
        raise PreconditionError("probe radius must lie in (0, 1/4)")
    grid_schedule = Schedule(
        eps_list=schedule.eps_list,
        n_values=schedule.n_values,
        method="grid",
        grid=schedule.grid,
        word_budget=schedule.word_budget,
    )
    local = estimate_entropy(S, grid_schedule, E=Arc(center=x0, radius=radius))
    global_ = estimate_entropy(S, grid_schedule)
    gap = abs(local.estimate - global_.estimate)
    return {
        "center": x0,
        "radius": radius,
        "local": local.to_dict(),
        "global": global_.to_dict(),
        "gap": gap,
    }


# ---------------------------------------------------------------------------
# growth-normalized diagnostic


def bis_normalized_quotient(
    S: SemigroupSpec, eps, n_values: tuple[int, ...], grid: GridSpec | None = None
) -> dict:
    """Estimated limit of log s(n, eps) / |G_{n-1}|, the entropy normalized
    by semigroup growth instead of word length.

    s(n, eps) is the max-word separated count and |G_k| the number of
    distinct semigroup elements of length k (so the family must commute for
    the closed-form count to apply).  The finite-n quotient b_n decays like
    c/n + d/n^2 whenever log s grows linearly and |G_n| quadratically, so
    the limit is read off by quadratic-in-1/n Richardson extrapolation over
    the last three samples; the raw b_n values are reported alongside.
    """
    eps = Fraction(eps)
    if len(n_values) < 3:
        raise PreconditionError("growth-normalized quotient needs >= 3 word lengths")
    if not S.commutes():
        raise PreconditionError("element counting needs a commuting generator family")
    grid = grid or GridSpec()
    rows = []
    for n in sorted(n_values):
        count, _ = glw_separated_count(S, n, eps, grid=grid)
        g_prev = count_distinct_commuting(S.m, n - 1)
        rows.append({"n": n, "count": count, "elements_prev": g_prev,
                     "b": math.log(count) / g_prev})
    xs = [1.0 / r["n"] for r in rows[-3:]]
    ys = [r["b"] for r in rows[-3:]]
    limit = 0.0
    for i in range(3):
        term = ys[i]
        for j in range(3):
            if j != i:
                term *= (0.0 - xs[j]) / (xs[i] - xs[j])
        limit += term
    return {"rows": rows, "quotient": limit, "eps": str(eps)}


def compare_entropies(S: SemigroupSpec, schedule: Schedule) -> dict:
    """The three-way comparison: word-averaged entropy, max-word entropy,
    and the growth-normalized quotient, on one schedule."""
    averaged = estimate_entropy(S, schedule)
    glw = glw_entropy(S, schedule)
    eps_min = min(schedule.eps_list)
    bis = bis_normalized_quotient(S, eps_min, schedule.n_values, grid=schedule.grid)
    return {
        "averaged": averaged.to_dict(),
        "glw": glw.to_dict(),
        "bis_quotient": bis["quotient"],
        "bis_rows": bis["rows"],
    }
