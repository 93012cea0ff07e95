"""Constructive and refutational probes for orbital specification.

A witness probe actually builds the shadowing point: prescribed orbit
segments are chained through long bridge words by pulling an admissible arc
backward through the affine chain (each bridge maps small arcs onto the
whole circle once its expansion exceeds 1/(2 eps), so a preimage component
always lands inside the previous segment's word ball).  Every constraint is
then re-verified forward in exact rational arithmetic, and the certificate
carries the verified distances.

A falsification probe replays the rotation obstruction: with a rotation
among the generators, pure-rotation bridges translate a tiny word ball
rigidly, so for every candidate lag one exhibits a longer bridge whose
translate misses the target ball, with the gap computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import (
    AffineWordForm,
    SemigroupSpec,
    circle_dist,
    dyn_distance,
    reduce_affine,
    signed_gap,
    wrap01,
)
from .errors import PreconditionError
from .words import Word, enumerate_words


@dataclass(frozen=True)
class Segment:
    """A prescribed piece of orbit: shadow the orbit of ``point`` under ``word``."""

    point: Fraction
    word: Word

    @classmethod
    def of(cls, point, word: Word) -> "Segment":
        return cls(point=wrap01(Fraction(point)), word=tuple(word))


@dataclass
class SpecProbeResult:
    kind: str  # witness | counterexample | census
    epsilon: Fraction
    p: int | None
    payload: dict
    verdict: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "epsilon": str(self.epsilon),
            "p": self.p,
            "payload": self.payload,
            "verdict": self.verdict,
        }


def uniform_exactness_n(S: SemigroupSpec, eps) -> int:
    """Smallest N with (min degree)^N * 2*eps >= 1: after N steps every word
    maps every eps-ball onto the circle (the worst word is the min-degree
    one).  N = 0 when the ball is already the whole circle."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not S.all_expanding:
        raise PreconditionError("uniform exactness needs all generators expanding")
    k = S.min_degree
    N = 0
    reach = 2 * eps
    while reach < 1:
        reach *= k
        N += 1
    return N


def _chain_forms(S: SemigroupSpec, segments, bridges) -> tuple[list[Segment], list[AffineWordForm], list[AffineWordForm]]:
    segs = [s if isinstance(s, Segment) else Segment.of(*s) for s in segments]
    seg_forms = [reduce_affine(s.word, S) for s in segs]
    bridge_forms = [reduce_affine(tuple(b), S) for b in bridges]
    return segs, seg_forms, bridge_forms


def _pull_back_stage(
    A_center: Fraction,
    A_radius: Fraction,
    bridge: AffineWordForm,
    seg_point: Fraction,
    seg_form: AffineWordForm,
    eps: Fraction,
    stage: int,
) -> tuple[Fraction, Fraction]:
    """One backward step: choose the bridge preimage component of the target
    arc nearest to the segment's orbit endpoint, then invert the segment
    word along the branch through its base point."""
    Db = bridge.D
    endpoint = seg_form.apply(seg_point)
    image_radius = eps * seg_form.D / seg_form.max_prefix_D
    base = (A_center - bridge.t) / Db
    lattice = (endpoint - base) * Db
    i = math.floor(lattice + Fraction(1, 2))
    component = wrap01(base + Fraction(i, Db))
    offset = signed_gap(component, endpoint)
    if abs(offset) + A_radius / Db > image_radius:
        raise PreconditionError(
            f"bridge {stage} expands by {Db}, too little to place a preimage "
            f"inside the segment ball image (need offset {abs(offset)} + "
            f"{A_radius / Db} <= {image_radius})"
        )
    return wrap01(seg_point + offset / seg_form.D), A_radius / (Db * seg_form.D)


def _verify_forward(
    x: Fraction, segs: list[Segment], seg_forms, bridge_forms, eps: Fraction
) -> list[dict]:
    """Exact forward re-verification of every prefix constraint; returns the
    constraint table and raises if any distance reaches eps."""
    rows = []
    y = x
    for j, (seg, form) in enumerate(zip(segs, seg_forms), start=1):
        for ell in range(form.n + 1):
            d = circle_dist(form.prefix_apply(ell, y), form.prefix_apply(ell, seg.point))
            rows.append({"segment": j, "prefix": ell, "distance": float(d)})
            if not d < eps:
                raise RuntimeError(
                    f"internal error: constraint (segment {j}, prefix {ell}) "
                    f"re-verified at {d} >= eps={eps}"
                )
        y = form.apply(y)
        if j - 1 < len(bridge_forms):
            y = bridge_forms[j - 1].apply(y)
    return rows


def strong_spec_witness(S: SemigroupSpec, segments, bridges, eps) -> SpecProbeResult:
    """Builds and verifies a shadowing point for prescribed orbit segments
    joined by bridge words of length >= N(eps)."""
    eps = Fraction(eps)
    if not S.all_expanding:
        raise PreconditionError("the witness construction needs all generators expanding")
    segs, seg_forms, bridge_forms = _chain_forms(S, segments, bridges)
    if len(bridge_forms) != len(segs) - 1:
        raise PreconditionError(
            f"{len(segs)} segments need {len(segs) - 1} bridges, got {len(bridge_forms)}"
        )
    N = uniform_exactness_n(S, eps)
    for b_idx, b in enumerate(bridges, start=1):
        if len(b) < N:
            raise PreconditionError(
                f"bridge {b_idx} has length {len(b)} < N(eps)={N}; too short to reconnect"
            )
    # backward pass from the last segment's ball
    A_center = segs[-1].point
    A_radius = eps / seg_forms[-1].max_prefix_D
    for j in range(len(segs) - 2, -1, -1):
        A_center, A_radius = _pull_back_stage(
            A_center, A_radius, bridge_forms[j], segs[j].point, seg_forms[j], eps, stage=j + 1
        )
    witness = A_center
    rows = _verify_forward(witness, segs, seg_forms, bridge_forms, eps)
    return SpecProbeResult(
        kind="witness",
        epsilon=eps,
        p=N,
        payload={
            "point": float(witness),
            "point_exact": str(witness),
            "constraints": rows,
            "max_distance": max(r["distance"] for r in rows),
        },
        verdict="verified",
    )


def build_periodic_loop(S: SemigroupSpec, segments, bridges, eps) -> dict:
    """Backward construction for a closed loop (the last bridge reconnects to
    the first segment), returning the loop's affine form, the admissible arc
    in the first segment's ball, and the verified periodic point.

    Used by the periodic module; failure to fit a fixed point into the
    admissible arc is reported as a precondition violation, never silently.
    """
    eps = Fraction(eps)
    segs, seg_forms, bridge_forms = _chain_forms(S, segments, bridges)
    if len(bridge_forms) != len(segs):
        raise PreconditionError(
            f"a closed loop over {len(segs)} segments needs {len(segs)} bridges, "
            f"got {len(bridge_forms)}"
        )
    for b_idx, b in enumerate(bridge_forms, start=1):
        if 2 * eps * b.D < 1:
            raise PreconditionError(
                f"bridge {b_idx} total expansion {b.D} < 1/(2 eps) = {1 / (2 * eps)}; "
                "it cannot map segment ball images onto the circle"
            )
    loop = None
    for seg_form, bridge in zip(seg_forms, bridge_forms):
        stage = bridge.compose_after(seg_form)
        loop = stage if loop is None else stage.compose_after(loop)
    if loop.D < 2:
        raise PreconditionError("loop word must expand (total degree >= 2)")
    # backward pass: target is the first segment's ball again
    A_center = segs[0].point
    A_radius = eps / seg_forms[0].max_prefix_D
    for j in range(len(segs) - 1, -1, -1):
        A_center, A_radius = _pull_back_stage(
            A_center, A_radius, bridge_forms[j], segs[j].point, seg_forms[j], eps, stage=j + 1
        )
    # fixed points of the loop sit at (i - t)/(D - 1); pick one strictly
    # inside the admissible arc
    D1 = loop.D - 1
    i0 = math.floor(A_center * D1 + loop.t)
    chosen = None
    for i in (i0 - 1, i0, i0 + 1, i0 + 2):
        cand = wrap01((i - loop.t) / D1)
        if abs(signed_gap(cand, A_center)) < A_radius:
            chosen = cand
            break
    if chosen is None:
        raise PreconditionError(
            "no loop fixed point inside the admissible arc (radius "
            f"{float(A_radius):.3e}); lengthen the bridges"
        )
    rows = _verify_forward(chosen, segs, seg_forms, bridge_forms[:-1], eps)
    residual = circle_dist(loop.apply(chosen), chosen)
    if residual != 0:
        raise RuntimeError(f"internal error: loop fixed point residual {residual} != 0")
    return {
        "point": float(chosen),
        "point_exact": str(chosen),
        "loop_D": loop.D,
        "loop_t": str(loop.t),
        "constraints": rows,
        "max_distance": max(r["distance"] for r in rows),
        "arc_radius": float(A_radius),
        "residual": float(residual),
    }


def strong_spec_falsify(
    S: SemigroupSpec,
    eps,
    n: int,
    x1=Fraction(0),
    x2=Fraction(1, 2),
    p_cap: int = 20,
    search_horizon: int = 500,
) -> SpecProbeResult:
    """Defeats every candidate lag p(eps) <= p_cap for a family containing a
    rotation: the pure-rotation bridge of some length p >= candidate
    translates the word ball of the expanding word away from the target
    ball, with the gap certified in exact rational arithmetic.

    This is a finite refutation of a universal claim: candidates above
    p_cap are not examined, and the report says so.
    """
    eps = Fraction(eps)
    expanding = [g for g in S.generators if g.kind == "lin"]
    rotations = [g for g in S.generators if g.kind == "rot"]
    if len(expanding) != 1 or len(rotations) != 1:
        raise PreconditionError("the falsifier needs exactly one expanding and one rotation generator")
    if eps >= Fraction(1, 4):
        raise PreconditionError(f"eps must be < 1/4, got {eps}")
    k = expanding[0].degree
    alpha = rotations[0].angle
    x1, x2 = wrap01(Fraction(x1)), wrap01(Fraction(x2))
    radius = eps / k**n  # word ball of the pure expanding word of length n
    if not radius < eps / 4:
        raise PreconditionError(f"n={n} too small: ball radius {radius} >= eps/4")
    if not circle_dist(x1, x2) > 2 * radius:
        raise PreconditionError("base points too close: word balls overlap")
    certificates = []
    for candidate in range(1, p_cap + 1):
        found = None
        for p in range(candidate, candidate + search_horizon):
            gap = circle_dist(wrap01(x1 + p * alpha), x2) - 2 * radius
            if gap > 0:
                found = {"candidate_p": candidate, "bridge_p": p,
                         "gap": float(gap), "gap_exact": str(gap)}
                break
        if found is None:
            return SpecProbeResult(
                kind="counterexample", epsilon=eps, p=candidate,
                payload={"certificates": certificates,
                         "failed_candidate": candidate,
                         "search_horizon": search_horizon},
                verdict="inconclusive",
            )
        certificates.append(found)
    return SpecProbeResult(
        kind="counterexample",
        epsilon=eps,
        p=p_cap,
        payload={
            "certificates": certificates,
            "ball_radius": float(radius),
            "x1": float(x1),
            "x2": float(x2),
            "note": f"finite refutation of every candidate lag <= {p_cap}",
        },
        verdict="refuted",
    )


# ---------------------------------------------------------------------------
# admissible-word census and the growth hypothesis


@dataclass(frozen=True)
class CensusTable:
    """Counts of bridge words with fewer than K expanding letters, per length."""

    K: int
    m: int
    rows: tuple[tuple[int, int], ...]  # (p, bad_count)

    def ratios(self, gamma: float) -> list[tuple[int, float]]:
        out = []
        for p, bad in self.rows:
            if bad == 0:
                out.append((p, 0.0))
            else:
                out.append((p, math.exp(math.log(bad) - gamma * p * math.log(self.m))))
        return out


def weak_spec_census(m: int, p: int, K: int) -> int:
    """Number of length-p words over {expanding, rotation} with fewer than K
    expanding letters: sum_{k<K} C(p, k).  Exact big-integer; only the
    two-letter model is supported."""
    if m != 2:
        raise PreconditionError("census supports the two-letter {expanding, rotation} model only")
    if p < 0 or K < 0:
        raise ValueError("p and K must be nonnegative")
    return sum(math.comb(p, k) for k in range(min(K, p + 1)))


def build_census(m: int, K: int, p_values) -> CensusTable:
    rows = tuple((p, weak_spec_census(m, p, K)) for p in sorted(p_values))
    return CensusTable(K=K, m=m, rows=rows)


def hypothesis_h_check(census: CensusTable, gamma: float) -> dict:
    """Verdict on the sub-exponential growth hypothesis: the ratio
    bad_count / m^(gamma p) must be eventually decreasing with final value
    below 1.  Reports the first crossing below 1."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    series = census.ratios(gamma)
    if len(series) < 3:
        return {"verdict": "inconclusive", "series": series, "gamma": gamma,
                "reason": "need at least three lengths to observe decrease"}
    ratios = [r for _, r in series]
    tail_start = None
    for i in range(len(ratios) - 1):
        if all(ratios[j + 1] < ratios[j] for j in range(i, len(ratios) - 1)):
            tail_start = i
            break
    crossing = next((p for p, r in series if r < 1.0), None)
    if tail_start is None:
        verdict = "inconclusive"
    elif ratios[-1] < 1.0:
        verdict = "PASS"
    else:
        verdict = "FAIL"
    return {
        "verdict": verdict,
        "series": series,
        "gamma": gamma,
        "final_ratio": ratios[-1],
        "decreasing_from_p": None if tail_start is None else series[tail_start][0],
        "crossing_p": crossing,
    }


# ---------------------------------------------------------------------------
# strong expansiveness


def expansiveness_probe(
    S: SemigroupSpec,
    gamma: float,
    delta_star=None,
    n_pairs: int = 1000,
    seed: int = 0,
) -> dict:
    """Checks strong expansiveness at scale delta*: every pair at distance
    >= gamma must be delta*-separated in the word metric of EVERY word of
    the critical length k, the smallest with lam^k * delta* < gamma.

    Families with rotation letters are expected to fail (an all-rotation
    word is an isometry); the report then carries an explicit violation.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    degs = S.expanding_degrees
    if not degs:
        raise PreconditionError("probe needs at least one expanding generator")
    if S.all_expanding:
        ds = Fraction(delta_star) if delta_star is not None else S.delta_star
        if ds > S.delta0 / 2:
            raise PreconditionError(f"delta* must be <= delta0/2 = {S.delta0 / 2}")
    else:
        if delta_star is None:
            raise PreconditionError("delta* must be given for mixed families")
        ds = Fraction(delta_star)
    lam = 1.0 / min(degs)
    k = 1
    while lam**k * float(ds) >= gamma:
        k += 1
        if k > 64:
            raise PreconditionError("no critical length below 64; gamma too small")
    rng = np.random.default_rng(seed)
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs and attempts < 100 * n_pairs:
        x, y = rng.random(), rng.random()
        attempts += 1
        if float(circle_dist(x, y)) >= gamma:
            pairs.append((x, y))
    violations = []
    words_checked = 0
    ds_f = float(ds)
    for w in enumerate_words(S.m, k):
        words_checked += 1
        if S.all_affine:
            form = reduce_affine(w, S)
            Ds = np.asarray(sorted(set(form.prefix_D)), dtype=float)
            for x, y in pairs:
                delta = (x - y) % 1.0
                img = (Ds * delta) % 1.0
                dmax = float(np.max(np.minimum(img, 1.0 - img)))
                if not dmax > ds_f:
                    violations.append({"x": x, "y": y, "word": list(w), "d_w": dmax})
        else:
            for x, y in pairs:
                d = dyn_distance(w, S, x, y)
                if not d > ds_f:
                    violations.append({"x": x, "y": y, "word": list(w), "d_w": d})
    return {
        "k": k,
        "delta_star": float(ds),
        "gamma": gamma,
        "pairs": len(pairs),
        "words_checked": words_checked,
        "violations": violations[:16],
        "violation_count": len(violations),
        "pass": not violations,
    }
