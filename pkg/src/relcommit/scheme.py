"""The CHSH^n string/bit commitment scheme and its composition algebra.

A commitment is the commit-phase communication (a, x).  The verifier's
opening map is ``extr``: with challenge a != 0 the opened string is
s = (x + y) * a^-1 for the announced y; the bit scheme uses the smaller
satisfying bit.  Multi-round schemes chain commitments: round i commits to
the previous round's opening string, and the verifier back-substitutes
y_{i-1} = (x_i + y_i) * a_i^-1 down to the committed value.

Scheme descriptors are plain data (roles, opening shape, domains) so that
eligibility checking and the composition operator work on any scheme of the
right shape, not just CHSH^n.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

from .field import FieldElement, FieldSpec


class _Bot:
    """Rejection outcome; distinct from every field element."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOT"

    def __bool__(self):
        return False


BOT = _Bot()

# A verifier outcome: an opened value (int, possibly domain-restricted) or BOT.
OpenOutcome = Union[int, _Bot]


@dataclass(frozen=True)
class Commitment:
    """Commit-phase communication (a, x) in one field."""

    a: FieldElement
    x: FieldElement

    def __post_init__(self):
        if self.a.spec != self.x.spec:
            raise ValueError("commitment halves from different field specs")


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of a (possibly multi-round) CHSH^n scheme instance.

    m counts sustain rounds: the protocol has challenge/response rounds
    0..m followed by one opening message.  domain_bits restricts the
    committed value to k bits (padded with zeros up to n).
    """

    field: FieldSpec
    m: int = 0
    domain_bits: Optional[int] = None
    first_committer: str = "P"

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("sustain-round count must be >= 0")
        k = self.domain_bits
        if k is not None and not 1 <= k <= self.field.n:
            raise ValueError("domain_bits must be in 1..n")
        if self.first_committer not in ("P", "Q"):
            raise ValueError("first_committer must be 'P' or 'Q'")


def other_prover(p: str) -> str:
    return "Q" if p == "P" else "P"


def chsh_response(s: FieldElement, r: FieldElement, a: FieldElement) -> FieldElement:
    """Honest committer's reply: r + a*s, with r the shared pad."""
    return r + a * s


def extr_i(spec: FieldSpec, y: int, a: int, x: int) -> OpenOutcome:
    """Raw-int opening map for one commitment level.

    a != 0: the unique s with x + y = a*s.  a == 0: the canonical value 0
    when x == y (mirroring the bit scheme's smaller-bit rule), else BOT.
    """
    if a:
        return spec.mul_i(x ^ y, spec.inv_i(a))
    return 0 if x == y else BOT


def extr(y: FieldElement, c: Commitment) -> OpenOutcome:
    """Opened string for announced y against commitment c."""
    if y.spec != c.a.spec:
        raise ValueError("opening string from a different field spec")
    return extr_i(y.spec, y.bits, c.a.bits, c.x.bits)


def extr_bit_i(spec: FieldSpec, y: int, a: int, x: int) -> OpenOutcome:
    """Raw-int bit-scheme opening: the smaller bit b with x + y = a*b."""
    if y == x:
        return 0
    if a and (x ^ y) == a:
        return 1
    return BOT


def extr_bit(y: FieldElement, c: Commitment) -> OpenOutcome:
    """Bit-scheme opening: the smaller bit b with x + y = a*b, else BOT."""
    if y.spec != c.a.spec:
        raise ValueError("opening string from a different field spec")
    return extr_bit_i(y.spec, y.bits, c.a.bits, c.x.bits)


def restrict_domain(outcome: OpenOutcome, k: int, n: int) -> OpenOutcome:
    """Project an opened n-bit value onto a k-bit domain.

    The committed k-bit value is padded with n-k zero bits, so any opened
    value with nonzero padding rejects.
    """
    if not 1 <= k <= n:
        raise ValueError("domain_bits must be in 1..n")
    if outcome is BOT:
        return BOT
    if outcome >> k:
        return BOT
    return outcome


def multiround_verify(
    params: SchemeParams,
    challenges: Sequence[int],
    responses: Sequence[int],
    y_final: int,
) -> OpenOutcome:
    """Back-substitute through the sustain rounds and open the commitment.

    challenges/responses are a_0..a_m and x_0..x_m; y_final is the opening
    message.  Levels with a_i = 0 follow the extr degenerate rule (continue
    with the canonical 0 when x_i equals the reconstructed y_i, reject
    otherwise).  The result is domain-restricted per params.
    """
    if len(challenges) != len(responses) or len(challenges) != params.m + 1:
        raise ValueError("need exactly m+1 challenges and responses")
    spec = params.field
    y = spec.check(y_final)
    for i in range(params.m, 0, -1):
        y = extr_i(spec, y, challenges[i], responses[i])
        if y is BOT:
            return BOT
    s = extr_i(spec, y, challenges[0], responses[0])
    if params.domain_bits is not None:
        s = restrict_domain(s, params.domain_bits, spec.n)
    return s


def k_of_extr(spec: FieldSpec, extr_fn: Callable[[FieldSpec, int, int, int], OpenOutcome] = extr_i,
              max_n: int = 8) -> int:
    """max over commitments c and values s of |{y : extr(y, c) = s}|.

    Fully exhaustive over (a, x, s, y), so refuses n above max_n.
    """
    if spec.n > max_n:
        raise ValueError(
            f"k_of_extr enumerates 2^(4n) tuples; n={spec.n} exceeds the "
            f"n<={max_n} cap")
    order = spec.order
    best = 0
    for a in range(order):
        for x in range(order):
            counts = {}
            for y in range(order):
                s = extr_fn(spec, y, a, x)
                if s is not BOT:
                    counts[s] = counts.get(s, 0) + 1
            if counts:
                best = max(best, max(counts.values()))
    return best


# -- scheme descriptors and composition -------------------------------------


@dataclass(frozen=True)
class SchemeDescriptor:
    """Shape of a two-prover commitment scheme, as data.

    committer is the prover active in the commit phase; opener the prover
    that announces the opening information.  single_string_open means the
    opening phase is one string y from the opener, mapped deterministically
    by the verifier (the shape required of the left operand of compose).
    """

    name: str
    field: FieldSpec
    committer: str
    opener: str
    single_string_open: bool
    domain_bits: int
    open_string_bits: int
    sustain_rounds: int = 0

    def to_params(self) -> SchemeParams:
        k = None if self.domain_bits == self.field.n else self.domain_bits
        return SchemeParams(self.field, self.sustain_rounds, k, self.committer)


def chsh_descriptor(spec: FieldSpec, committer: str = "P",
                    domain_bits: Optional[int] = None) -> SchemeDescriptor:
    k = spec.n if domain_bits is None else domain_bits
    name = "chsh" if committer == "P" else "xchsh"
    return SchemeDescriptor(
        name=name, field=spec, committer=committer,
        opener=other_prover(committer), single_string_open=True,
        domain_bits=k, open_string_bits=spec.n)


def check_eligible(s: SchemeDescriptor, s2: SchemeDescriptor) -> tuple[bool, str]:
    """Whether s2 can commit to s's opening information.

    (i) s commits via one prover and opens via the other, and s2 commits
    via that other prover; (ii) s opens with a single string and a
    deterministic extraction; (iii) s2's domain contains the opening
    strings of s.
    """
    if s.committer == s.opener:
        return False, f"{s.name}: commit and opening use the same prover"
    if s2.committer != s.opener:
        return False, (f"{s2.name} commits via {s2.committer}, but {s.name} "
                       f"opens via {s.opener}")
    if not s.single_string_open:
        return False, f"{s.name}: opening is not a single extractable string"
    if s2.domain_bits < s.open_string_bits:
        return False, (f"domain of {s2.name} ({s2.domain_bits} bits) cannot "
                       f"hold opening strings of {s.name} "
                       f"({s.open_string_bits} bits)")
    return True, "eligible"


def compose(s: SchemeDescriptor, s2: SchemeDescriptor) -> SchemeDescriptor:
    """Open s by first committing to its opening string via s2.

    The composed scheme keeps s's commit phase and domain; its opening
    phase runs s2's commit phase followed by s2's opening, so it is no
    longer a single-string opening.
    """
    ok, reason = check_eligible(s, s2)
    if not ok:
        raise ValueError(f"ineligible pair: {reason}")
    return SchemeDescriptor(
        name=f"{s.name}*{s2.name}",
        field=s.field,
        committer=s.committer,
        opener=s2.opener,
        single_string_open=False,
        domain_bits=s.domain_bits,
        open_string_bits=s2.open_string_bits,
        sustain_rounds=s2.sustain_rounds + 1,
    )


def params_to_config(params: SchemeParams) -> str:
    """Flat key=value form of a CHSH-family scheme instance."""
    parts = [f"scheme=chsh", f"n={params.field.n}",
             f"poly=0x{params.field.poly:x}", f"m={params.m}"]
    if params.domain_bits is not None:
        parts.append(f"domain_bits={params.domain_bits}")
    parts.append(f"first_committer={params.first_committer}")
    return " ".join(parts)


def params_from_config(text: str) -> SchemeParams:
    kv = dict(item.split("=", 1) for item in text.split())
    if kv.get("scheme", "chsh") != "chsh":
        raise ValueError(f"unknown scheme {kv.get('scheme')!r}")
    n = int(kv["n"])
    poly = int(kv["poly"], 16) if "poly" in kv else None
    from .field import DEFAULT_POLYS
    spec = FieldSpec(n, poly if poly is not None else DEFAULT_POLYS[n])
    k = int(kv["domain_bits"]) if "domain_bits" in kv else None
    return SchemeParams(spec, int(kv.get("m", 0)), k,
                        kv.get("first_committer", "P"))


def multiround_descriptor(spec: FieldSpec, m: int, first_committer: str = "P",
                          domain_bits: Optional[int] = None) -> SchemeDescriptor:
    """m-fold self-composition with role alternation, built via compose.

    The innermost term commits at round m; composing outward reproduces the
    multi-round protocol whose round-0 committer is first_committer.
    """
    role = first_committer if m % 2 == 0 else other_prover(first_committer)
    d = chsh_descriptor(spec, role)
    for i in range(m - 1, -1, -1):
        role = first_committer if i % 2 == 0 else other_prover(first_committer)
        d = compose(chsh_descriptor(spec, role), d)
    if domain_bits is not None and domain_bits != spec.n:
        d = replace(d, domain_bits=domain_bits)
    return d
