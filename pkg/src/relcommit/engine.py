"""In-process session engine: commit/sustain/open as round-indexed messages.

One session is driven by a 64-bit master seed.  Labeled values are derived
with the SplitMix64 sequence (Steele/Lea/Flood's mix, as in SplittableRandom):
value(seed, stream, index) = mix64(seed + ((stream << 32) | index) * GAMMA).
The verifier's challenge stream is labeled 'V'; prover-side randomness hangs
off a separate root split so strategies can never reconstruct upcoming
challenges.  2^64 is a multiple of 2^n, so reducing a stream value mod 2^n
is exactly uniform.

The no-communication constraint is structural: the engine calls a strategy
with the active party's visible message set only, and the view accessors
raise ProtocolViolation for anything outside it.  A prover sees its own
rounds plus, with a lag of two rounds, everything the other prover and the
verifier exchanged (the one-way prover-to-prover forwarding).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

from .field import FieldSpec
from .scheme import BOT, OpenOutcome, SchemeParams, multiround_verify, other_prover

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# Stream labels (single ASCII bytes).
STREAM_CHALLENGE = 0x56   # 'V': verifier challenge per round
STREAM_PROVER_ROOT = 0x58  # 'X': root of all prover-side randomness
STREAM_SHARED = 0x53      # 'S': honest shared pad y_i per round
STREAM_GAME_A = 0x41      # 'A': game-wrapper draw r_a per attempt round
STREAM_GAME_B = 0x42      # 'B': game-wrapper draw r_s per attempt round
STREAM_RANDOM_OPEN = 0x52  # 'R': random-opening announcement
STREAM_TARGET = 0x54      # 'T': per-trial target draws
STREAM_TRIAL = 0x4C       # 'L': per-trial seed derivation


def mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def stream_u64(seed: int, stream: int, index: int) -> int:
    """index-th value of the labeled stream derived from seed."""
    return mix64(seed + (((stream << 32) | index) * _GAMMA))


def stream_value(seed: int, stream: int, index: int, n: int) -> int:
    """Uniform n-bit value from a labeled stream."""
    return stream_u64(seed, stream, index) & ((1 << n) - 1)


def prover_root_seed(master_seed: int) -> int:
    """Seed handed to prover strategies; a one-way split of the master."""
    return stream_u64(master_seed, STREAM_PROVER_ROOT, 0)


class ProtocolViolation(Exception):
    """A strategy asked for a message outside its visible set."""


# Control payloads (the honest flows only carry field elements).
OPEN, ACCEPT, REJECT = "OPEN", "ACCEPT", "REJECT"
_CONTROL = (OPEN, ACCEPT, REJECT)

Payload = Union[int, str]


@dataclass(frozen=True)
class RoundMessage:
    round: int
    sender: str
    receiver: str
    payload: Payload

    def __post_init__(self):
        if self.sender == self.receiver:
            raise ValueError("message sender equals receiver")


@dataclass
class Transcript:
    params: SchemeParams
    seed: int
    messages: List[RoundMessage] = field(default_factory=list)
    outcome: OpenOutcome = BOT

    def challenges(self) -> List[int]:
        return [m.payload for m in self.messages if m.sender == "V"]

    def responses(self) -> List[int]:
        return [m.payload for m in self.messages
                if m.receiver == "V" and m.round <= self.params.m]

    def final_opening(self) -> int:
        last = self.messages[-1]
        if last.round != self.params.m + 1:
            raise ValueError("transcript has no final opening message")
        return last.payload

    def to_text(self) -> str:
        p = self.params
        lines = [f"#relcommit v1 n={p.field.n} poly=0x{p.field.poly:x} "
                 f"m={p.m} seed={self.seed}"]
        for msg in self.messages:
            pay = (msg.payload if isinstance(msg.payload, str)
                   else p.field.to_hex(msg.payload))
            lines.append(f"round={msg.round} from={msg.sender} "
                         f"to={msg.receiver} payload={pay}")
        out = "BOT" if self.outcome is BOT else p.field.to_hex(self.outcome)
        lines.append(f"outcome={out}")
        return "\n".join(lines) + "\n"


class TranscriptParseError(Exception):
    def __init__(self, lineno: int, why: str):
        super().__init__(f"line {lineno}: {why}")
        self.lineno = lineno


def parse_transcript(text: str) -> Transcript:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#relcommit v1 "):
        raise TranscriptParseError(1, "missing '#relcommit v1' header")
    try:
        hdr = dict(kv.split("=", 1) for kv in lines[0].split()[2:])
        spec = FieldSpec(int(hdr["n"]), int(hdr["poly"], 16))
        params = SchemeParams(spec, int(hdr["m"]))
        seed = int(hdr["seed"])
    except (KeyError, ValueError) as e:
        raise TranscriptParseError(1, f"bad header: {e}") from None
    t = Transcript(params, seed)
    outcome_seen = False
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("outcome="):
            val = line.split("=", 1)[1]
            t.outcome = BOT if val == "BOT" else spec.from_hex(val)
            outcome_seen = True
            continue
        try:
            kv = dict(p.split("=", 1) for p in line.split())
            pay = kv["payload"]
            payload: Payload = pay if pay in _CONTROL else spec.from_hex(pay)
            t.messages.append(RoundMessage(
                int(kv["round"]), kv["from"], kv["to"], payload))
        except (KeyError, ValueError) as e:
            raise TranscriptParseError(lineno, f"bad message line: {e}") from None
    if not outcome_seen:
        raise TranscriptParseError(len(lines) + 1, "missing outcome line")
    return t


class PartyView:
    """The messages one party may consult at a given round.

    A prover sees what it sent or received up to the current round, plus
    every message of rounds at least two behind (the forwarded rounds).
    The verifier sees everything it took part in, i.e. everything.
    """

    __slots__ = ("party", "round", "_messages")

    def __init__(self, party: str, round_index: int, messages: Sequence[RoundMessage]):
        self.party = party
        self.round = round_index
        self._messages = tuple(messages)

    @property
    def messages(self) -> tuple:
        return self._messages

    def _find(self, want_challenge: bool, i: int) -> Payload:
        for m in self._messages:
            if m.round == i and (m.sender == "V") == want_challenge:
                return m.payload
        kind = "challenge" if want_challenge else "response"
        raise ProtocolViolation(
            f"{self.party} at round {self.round} may not read the round-{i} {kind}")

    def challenge(self, i: int) -> int:
        return self._find(True, i)

    def response(self, i: int) -> int:
        return self._find(False, i)


def _visible(messages: Sequence[RoundMessage], party: str, round_index: int,
             lag: int = 2) -> List[RoundMessage]:
    if party == "V":
        return [m for m in messages if m.round <= round_index]
    return [m for m in messages
            if (m.round <= round_index and party in (m.sender, m.receiver))
            or m.round <= round_index - lag]


def visible_history(transcript: Transcript, party: str, round_index: int,
                    forwarding_lag: int = 2) -> PartyView:
    """The party's view at a round; the lag is overridable only for testing
    stricter or looser communication models."""
    if party not in ("P", "Q", "V"):
        raise ValueError(f"unknown party {party!r}")
    if round_index > transcript.params.m + 1:
        raise ValueError("round beyond transcript")
    return PartyView(party, round_index,
                     _visible(transcript.messages, party, round_index, forwarding_lag))


# -- strategies --------------------------------------------------------------


class HonestCommit:
    """Round-0 behaviour of an honest committer: x_0 = y_0 + a_0 * s."""

    def __init__(self, value: int):
        self.value = value

    def begin_session(self, params: SchemeParams, prover_seed: int):
        self.params = params
        self.seed = prover_seed
        k = params.domain_bits
        if k is not None and self.value >> k:
            raise ValueError("committed value outside the scheme domain")
        params.field.check(self.value)

    def __call__(self, party: str, round_index: int, view: PartyView) -> int:
        spec = self.params.field
        a0 = view.challenge(0)
        y0 = stream_value(self.seed, STREAM_SHARED, 0, spec.n)
        return y0 ^ spec.mul_i(a0, self.value)


class HonestOpen:
    """Sustain and opening behaviour of honest provers.

    Round i >= 1 commits to the previous pad: x_i = y_i + a_i * y_{i-1};
    the final message announces y_m.
    """

    def begin_session(self, params: SchemeParams, prover_seed: int):
        self.params = params
        self.seed = prover_seed

    def _pad(self, i: int) -> int:
        return stream_value(self.seed, STREAM_SHARED, i, self.params.field.n)

    def __call__(self, party: str, round_index: int, view: PartyView) -> int:
        spec = self.params.field
        m = self.params.m
        if round_index > m:
            return self._pad(m)
        a = view.challenge(round_index)
        return self._pad(round_index) ^ spec.mul_i(a, self._pad(round_index - 1))


def active_prover(params: SchemeParams, round_index: int) -> str:
    first = params.first_committer
    return first if round_index % 2 == 0 else other_prover(first)


def run_attack_session(params: SchemeParams, commit_strategy, open_strategy,
                       seed: int, fixed_challenges: Optional[Sequence[int]] = None,
                       forwarding_lag: int = 2) -> Transcript:
    """Run a session where the provers follow the given strategies.

    commit_strategy answers round 0; open_strategy answers rounds 1..m and
    the final opening message.  Each is called with (party, round, view)
    and must return a field value; the view holds exactly the messages that
    party may see.  Strategy objects are bound to one session at a time
    (begin_session re-binds them), so parallel sessions need fresh objects.
    fixed_challenges overrides the seeded verifier and forwarding_lag the
    two-round prover-to-prover delay (test knobs).
    """
    spec = params.field
    pseed = prover_root_seed(seed)
    for strat in (commit_strategy, open_strategy):
        begin = getattr(strat, "begin_session", None)
        if begin is not None:
            begin(params, pseed)

    t = Transcript(params, seed)
    msgs = t.messages
    challenges: List[int] = []
    responses: List[int] = []
    for i in range(params.m + 1):
        if fixed_challenges is not None:
            a = spec.check(fixed_challenges[i])
        else:
            a = stream_value(seed, STREAM_CHALLENGE, i, spec.n)
        prover = active_prover(params, i)
        msgs.append(RoundMessage(i, "V", prover, a))
        strat = commit_strategy if i == 0 else open_strategy
        x = spec.check(strat(prover, i, PartyView(
            prover, i, _visible(msgs, prover, i, forwarding_lag))))
        msgs.append(RoundMessage(i, prover, "V", x))
        challenges.append(a)
        responses.append(x)

    opener = other_prover(active_prover(params, params.m))
    fin = params.m + 1
    y = spec.check(open_strategy(opener, fin, PartyView(
        opener, fin, _visible(msgs, opener, fin, forwarding_lag))))
    msgs.append(RoundMessage(fin, opener, "V", y))
    t.outcome = multiround_verify(params, challenges, responses, y)
    return t


def run_honest_session(params: SchemeParams, value: int, seed: int,
                       fixed_challenges: Optional[Sequence[int]] = None) -> Transcript:
    """Honest execution committing to value; outcome from multiround_verify."""
    return run_attack_session(params, HonestCommit(value), HonestOpen(),
                              seed, fixed_challenges)


def replay_session(transcript: Transcript, commit_strategy, open_strategy) -> Transcript:
    """Re-run strategies against recorded challenges; must reproduce transcript."""
    return run_attack_session(
        transcript.params, commit_strategy, open_strategy, transcript.seed,
        fixed_challenges=transcript.challenges())
