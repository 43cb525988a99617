"""Exact and Monte-Carlo measurement of binding and hiding properties.

Definitional measurements (max p0+p1, simultaneous opening, extractor
quality, hiding distance) run in exact rational arithmetic over exhaustive
deterministic strategy spaces: commit tables a -> x and constant opening
strings, which suffice because randomized provers are convex mixtures of
deterministic ones.  Monte-Carlo paths are separate functions that always
report trial counts alongside the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import isqrt, sqrt
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

from . import engine
from .engine import STREAM_TARGET, STREAM_TRIAL, SchemeParams, stream_value
from .field import FieldSpec
from .scheme import extr_bit_i, extr_i

ZERO = Fraction(0)
ONE = Fraction(1)


def _key(x):
    return (type(x).__name__, repr(x))


class Dist:
    """Finite probability mass function with exact rational weights."""

    __slots__ = ("_mass",)

    def __init__(self, mass: Mapping):
        d = {}
        total = ZERO
        for k, v in mass.items():
            f = Fraction(v)
            if f < 0:
                raise ValueError(f"negative mass at {k!r}")
            if f:
                d[k] = f
                total += f
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        self._mass = d

    @classmethod
    def point(cls, x) -> "Dist":
        return cls({x: ONE})

    @classmethod
    def uniform(cls, xs: Iterable) -> "Dist":
        xs = list(xs)
        w = Fraction(1, len(xs))
        return cls({x: w for x in xs})

    @classmethod
    def from_counts(cls, counts: Mapping, total: int = None) -> "Dist":
        if total is None:
            total = sum(counts.values())
        return cls({k: Fraction(v, total) for k, v in counts.items()})

    def mass(self, x) -> Fraction:
        return self._mass.get(x, ZERO)

    @property
    def support(self) -> frozenset:
        return frozenset(self._mass)

    def items(self):
        return sorted(self._mass.items(), key=lambda kv: _key(kv[0]))

    def __eq__(self, other):
        return isinstance(other, Dist) and self._mass == other._mass

    def __repr__(self):
        inner = ", ".join(f"{k!r}: {v}" for k, v in self.items())
        return f"Dist({{{inner}}})"


class JointDist:
    """Exact pmf over pairs, with marginal extraction."""

    __slots__ = ("_mass",)

    def __init__(self, mass: Mapping):
        d = {}
        total = ZERO
        for k, v in mass.items():
            if len(k) != 2:
                raise ValueError("joint outcomes must be pairs")
            f = Fraction(v)
            if f < 0:
                raise ValueError(f"negative mass at {k!r}")
            if f:
                d[k] = f
                total += f
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        self._mass = d

    def mass(self, x, y) -> Fraction:
        return self._mass.get((x, y), ZERO)

    def items(self):
        return sorted(self._mass.items(), key=lambda kv: _key(kv[0]))

    def marginal(self, axis: int) -> Dist:
        out: Dict = {}
        for (x, y), w in self._mass.items():
            k = (x, y)[axis]
            out[k] = out.get(k, ZERO) + w
        return Dist(out)

    def prob_equal(self) -> Fraction:
        return sum((w for (x, y), w in self._mass.items() if x == y), ZERO)


def stat_distance(p: Dist, q: Dist) -> Fraction:
    """Half the L1 distance, exact."""
    keys = p.support | q.support
    return sum((abs(p.mass(k) - q.mass(k)) for k in keys), ZERO) / 2


def couple_max_diagonal(p: Dist, q: Dist) -> JointDist:
    """The maximal coupling of p and q.

    Diagonal mass is the pointwise minimum of the two pmfs; the leftover
    mass is spread as the product of the two residual conditionals, which
    makes the pair independent conditioned on disagreeing.
    """
    keys = sorted(p.support | q.support, key=_key)
    diag = {k: min(p.mass(k), q.mass(k)) for k in keys}
    residue = 1 - sum(diag.values(), ZERO)
    joint: Dict = {}
    for k, w in diag.items():
        if w:
            joint[(k, k)] = w
    if residue:
        for u in keys:
            pu = p.mass(u) - diag[u]
            if not pu:
                continue
            for v in keys:
                qv = q.mass(v) - diag[v]
                if qv:
                    joint[(u, v)] = joint.get((u, v), ZERO) + pu * qv / residue
    return JointDist(joint)


def cond_indep_given_neq(j: JointDist) -> bool:
    """Whether the law conditioned on disagreement factorizes, exactly.

    A zero-probability disagreement event counts as independent.
    """
    off = [((x, y), w) for (x, y), w in j.items() if x != y]
    d = sum((w for _, w in off), ZERO)
    if not d:
        return True
    row: Dict = {}
    col: Dict = {}
    for (x, y), w in off:
        row[x] = row.get(x, ZERO) + w
        col[y] = col.get(y, ZERO) + w
    return all(w * d == row[x] * col[y] for (x, y), w in off)


# -- exhaustive binding measurements for the commit phase --------------------


def _all_commit_tables(spec: FieldSpec):
    return product(range(spec.order), repeat=spec.order)


def max_p0_plus_p1(spec: FieldSpec) -> Fraction:
    """Exact max of p(b_0=0) + p(b_1=1) for the bit scheme.

    Maximizes over all deterministic commit tables f: a -> x and all pairs
    of constant opening strings (y_0, y_1), under a uniform challenge.
    Literal table enumeration for n <= 2; for n = 3 the per-challenge
    contributions are independent, so f is optimized pointwise (same
    maximum, feasible size).
    """
    order = spec.order
    if spec.n <= 2:
        best = ZERO
        for f in _all_commit_tables(spec):
            for y0 in range(order):
                p0 = sum(1 for a in range(order)
                         if extr_bit_i(spec, y0, a, f[a]) == 0)
                for y1 in range(order):
                    p1 = sum(1 for a in range(order)
                             if extr_bit_i(spec, y1, a, f[a]) == 1)
                    best = max(best, Fraction(p0 + p1, order))
        return best
    if spec.n == 3:
        best = ZERO
        for y0 in range(order):
            for y1 in range(order):
                total = sum(
                    max(
                        (extr_bit_i(spec, y0, a, x) == 0)
                        + (extr_bit_i(spec, y1, a, x) == 1)
                        for x in range(order)
                    )
                    for a in range(order)
                )
                best = max(best, Fraction(total, order))
        return best
    raise ValueError(
        f"max_p0_plus_p1 enumerates 2^(n*2^n) commit tables; n={spec.n} "
        f"exceeds the n<=3 cap")


def sim_open_epsilon(spec: FieldSpec) -> Fraction:
    """Exact max of p(s = t and s' = t') over simultaneous openings.

    Maximizes over deterministic commit tables, two constant opening
    strings and distinct targets t != t'.  Literal enumeration for n <= 2;
    for n = 3 the commit table is optimized per challenge (independent
    contributions).
    """
    order = spec.order
    targets = [(t, t2) for t in range(order) for t2 in range(order) if t != t2]
    if spec.n <= 2:
        best = ZERO
        for f in _all_commit_tables(spec):
            for y0 in range(order):
                for y1 in range(order):
                    for t, t2 in targets:
                        hits = sum(
                            1 for a in range(order)
                            if extr_i(spec, y0, a, f[a]) == t
                            and extr_i(spec, y1, a, f[a]) == t2)
                        best = max(best, Fraction(hits, order))
        return best
    if spec.n == 3:
        best = ZERO
        for y0 in range(order):
            for y1 in range(order):
                for t, t2 in targets:
                    hits = sum(
                        1 for a in range(order)
                        if any(extr_i(spec, y0, a, x) == t
                               and extr_i(spec, y1, a, x) == t2
                               for x in range(order)))
                    best = max(best, Fraction(hits, order))
        return best
    raise ValueError(
        f"sim_open_epsilon enumerates 2^(n*2^n) commit tables; n={spec.n} "
        f"exceeds the n<=3 cap")


# -- the greedy partition extractor ------------------------------------------


def fairly_binding_extractor(spec: FieldSpec, commit_table: Sequence[int],
                             opening_family: Sequence[int],
                             alpha: Fraction) -> Dict[Tuple[int, int], int]:
    """Greedy partition of the commitment space into per-value classes.

    Commitments are c = (a, f(a)) with a uniform.  Repeatedly carve out of
    the residual set the commitments that opening i maps to value s, as
    long as that slice has probability at least alpha (scanning i
    ascending, then s ascending); everything left maps to 0.  At most
    1/alpha classes are carved, and on the carved classes the returned map
    predicts the opened value.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    order = spec.order
    residual = {(a, commit_table[a]) for a in range(order)}
    shat: Dict[Tuple[int, int], int] = {}
    while True:
        carved = None
        for i, y in enumerate(opening_family):
            for s in range(order):
                block = [c for c in residual if extr_i(spec, y, c[0], c[1]) == s]
                if Fraction(len(block), order) >= alpha:
                    carved = (s, block)
                    break
            if carved:
                break
        if not carved:
            break
        s, block = carved
        for c in block:
            shat[c] = s
        residual -= set(block)
    for c in residual:
        shat[c] = 0
    return shat


def extractor_violation(spec: FieldSpec, commit_table: Sequence[int],
                        opening_family: Sequence[int],
                        shat: Mapping[Tuple[int, int], int]) -> Fraction:
    """max over openings and targets of p(opened = target != predicted)."""
    order = spec.order
    worst = ZERO
    for y in opening_family:
        for target in range(order):
            hits = sum(
                1 for a in range(order)
                if extr_i(spec, y, a, commit_table[a]) == target
                and shat[(a, commit_table[a])] != target)
            worst = max(worst, Fraction(hits, order))
    return worst


# -- the descending-probability hat distribution ------------------------------


def _ceil_sqrt(x: Fraction) -> int:
    k = isqrt(x.numerator // x.denominator)
    while k * k < x:
        k += 1
    return k


def fairly_weak_hat_distribution(p_list: Sequence[Fraction],
                                 epsilon: Fraction) -> List[Fraction]:
    """Build a pmf close to a descending list of per-value maxima.

    With N = max(2, ceil(sqrt(2/epsilon))), keep the longest prefix whose
    entries all reach (N-1)*epsilon/2, shave its excess over total mass 1
    evenly, and drop the rest.  Returns the masses for the kept prefix
    (padded with zeros to the input length); they are nonnegative and sum
    to exactly 1.  An empty prefix degenerates to a point mass on the
    first entry.

    Lists of per-value opening maxima of a scheme whose simultaneous
    openings are epsilon-bounded always satisfy
    sum(prefix) <= 1 + N'(N-1)*epsilon/2; inputs that do not are rejected,
    as the shaved masses would go negative.
    """
    ps = [Fraction(x) for x in p_list]
    if any(not 0 <= x <= 1 for x in ps):
        raise ValueError("entries must lie in [0, 1]")
    if any(ps[i] < ps[i + 1] for i in range(len(ps) - 1)):
        raise ValueError("entries must be sorted in descending order")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not ps:
        raise ValueError("empty probability list")
    n_big = max(2, _ceil_sqrt(Fraction(2) / epsilon))
    floor = Fraction(n_big - 1) * epsilon / 2
    n_keep = 0
    while n_keep < min(n_big, len(ps)) and ps[n_keep] >= floor:
        n_keep += 1
    if n_keep == 0:
        out = [ZERO] * len(ps)
        out[0] = ONE
        return out
    excess = sum(ps[:n_keep], ZERO) - 1
    shave = excess / n_keep
    if shave > floor:
        raise ValueError(
            "prefix mass exceeds 1 + N'(N-1)*epsilon/2; the list cannot "
            "come from an epsilon-bounded scheme")
    out = [ps[i] - shave for i in range(n_keep)]
    out.extend([ZERO] * (len(ps) - n_keep))
    return out


# -- hiding --------------------------------------------------------------------


def fixed_challenge_strategy(challenges: Sequence[int]) -> Callable[[int, tuple], int]:
    def strategy(round_index: int, responses: tuple) -> int:
        return challenges[round_index]
    return strategy


def view_distribution(params: SchemeParams, verifier_strategy, value: int,
                      horizon: int) -> Dist:
    """Exact verifier-view distribution up to the given round.

    The verifier strategy is a deterministic map (round, responses so far)
    -> challenge.  Views are tuples (a_0, x_0, ..., a_h, x_h), with the
    opening string appended when horizon = m + 1.  Exhausts the provers'
    shared pads, so the enumeration has 2^(n*(m+1)) branches.
    """
    spec = params.field
    m = params.m
    if horizon > m + 1:
        raise ValueError("horizon beyond the last round")
    if spec.n * (m + 1) > 18:
        raise ValueError("view space too large to enumerate exactly; "
                         "use view_distribution_mc")
    counts: Dict[tuple, int] = {}
    for pads in product(range(spec.order), repeat=m + 1):
        view: List[int] = []
        responses: List[int] = []
        for i in range(min(horizon, m) + 1):
            a = spec.check(verifier_strategy(i, tuple(responses)))
            prev = value if i == 0 else pads[i - 1]
            x = pads[i] ^ spec.mul_i(a, prev)
            view += [a, x]
            responses.append(x)
        if horizon == m + 1:
            view.append(pads[m])
        key = tuple(view)
        counts[key] = counts.get(key, 0) + 1
    return Dist.from_counts(counts, spec.order ** (m + 1))


def hiding_distance(params: SchemeParams, verifier_strategy, s0: int, s1: int,
                    horizon: int) -> Fraction:
    """Exact statistical distance between views under commitments s0 vs s1."""
    return stat_distance(
        view_distribution(params, verifier_strategy, s0, horizon),
        view_distribution(params, verifier_strategy, s1, horizon))


def hiding_distance_mc(params: SchemeParams, verifier_strategy, s0: int, s1: int,
                       horizon: int, trials: int, seed: int) -> Tuple[Fraction, int]:
    """Empirical view distance from sampled sessions; returns (estimate, trials)."""
    spec = params.field
    m = params.m
    counts0: Dict[tuple, int] = {}
    counts1: Dict[tuple, int] = {}
    for t in range(trials):
        tseed = engine.stream_u64(seed, STREAM_TRIAL, t)
        for value, counts in ((s0, counts0), (s1, counts1)):
            view: List[int] = []
            responses: List[int] = []
            prev = value
            for i in range(min(horizon, m) + 1):
                a = spec.check(verifier_strategy(i, tuple(responses)))
                pad = stream_value(tseed, engine.STREAM_SHARED, i, spec.n)
                x = pad ^ spec.mul_i(a, prev)
                view += [a, x]
                responses.append(x)
                prev = pad
            if horizon == m + 1:
                view.append(stream_value(tseed, engine.STREAM_SHARED, m, spec.n))
            key = tuple(view)
            counts[key] = counts.get(key, 0) + 1
    return stat_distance(Dist.from_counts(counts0, trials),
                         Dist.from_counts(counts1, trials)), trials


# -- the open-to-uniform-target game ------------------------------------------


@dataclass(frozen=True)
class GameResult:
    hits: int
    trials: int
    conditioned: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.hits, self.conditioned) if self.conditioned else ZERO

    def sigma(self, p: float) -> float:
        if not self.conditioned:
            return 0.0
        return sqrt(p * (1 - p) / self.conditioned)


def open_game_success(params: SchemeParams, strategy_family, trials: int,
                      seed: int, condition_nonzero: bool = False) -> GameResult:
    """Monte-Carlo success at opening to a fresh uniform target per trial.

    strategy_family(target) returns the (commit, open) strategy pair aimed
    at that target.  With condition_nonzero, trials containing a zero
    challenge are excluded from the denominator.
    """
    hits = 0
    kept = 0
    for t in range(trials):
        tseed = engine.stream_u64(seed, STREAM_TRIAL, t)
        target = stream_value(tseed, STREAM_TARGET, 0, params.field.n)
        commit, open_ = strategy_family(target)
        transcript = engine.run_attack_session(params, commit, open_, tseed)
        if condition_nonzero and 0 in transcript.challenges():
            continue
        kept += 1
        if transcript.outcome == target:
            hits += 1
    return GameResult(hits, trials, kept)


# -- the accept-everything-or-nothing toy scheme -------------------------------


def coinflip_max_p0_plus_p1() -> Fraction:
    """max p(b_0=0) + p(b_1=1) for the coin-flip toy scheme.

    The verifier commits by flipping a public coin g and later accepts any
    announced bit when g = 1 and rejects everything when g = 0.  Opening
    strategies are maps g -> announced bit.
    """
    strategies = list(product((0, 1), repeat=2))
    best = ZERO
    for o0 in strategies:
        p0 = Fraction(sum(1 for g in (0, 1) if g == 1 and o0[g] == 0), 2)
        for o1 in strategies:
            p1 = Fraction(sum(1 for g in (0, 1) if g == 1 and o1[g] == 1), 2)
            best = max(best, p0 + p1)
    return best


def coinflip_best_binding_epsilon() -> Fraction:
    """min over predicted-bit maps of the worst opening deviation.

    For every map shat: g -> bit there is an opening strategy announcing
    the other bit whenever the coin accepts, so every candidate loses with
    probability 1/2.
    """
    strategies = list(product((0, 1), repeat=2))
    worst_of_best = ONE
    for shat in strategies:
        worst = max(
            Fraction(sum(1 for g in (0, 1) if g == 1 and o[g] != shat[g]), 2)
            for o in strategies)
        worst_of_best = min(worst_of_best, worst)
    return worst_of_best


def report_line(metric: str, n: int, value: Fraction, bound: Fraction,
                passed: bool) -> str:
    def frac(f: Fraction) -> str:
        return f"{f.numerator}/{f.denominator}"
    return (f"metric={metric} n={n} value={frac(value)} "
            f"bound={frac(bound)} pass={'true' if passed else 'false'}")
