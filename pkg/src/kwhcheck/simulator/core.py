"""Concrete Monte Carlo runs of a protocol on a physical deck."""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

import numpy as np

from ..cards import Card
from ..dsl import Branch, Goto, Mode, Output, Perm, ProtocolAst, Result, Shuffle, Turn, validate
from ..verifier import Verdict
from ._bytecode import compile_protocol, decode_pattern
from ._kernel import get_kernel
from ._rng import RNG_NAME, SplitMix64, stream_key, trial_state

INPUTS = ((0, 0), (0, 1), (1, 0), (1, 1))
COUNTERS = ("turns", "shuffles", "passes")
DEFAULT_STEP_BUDGET = 10 ** 6
CHUNK = 1 << 15

_OK, _BUDGET, _NO_OUTPUT, _STUCK = range(4)


class SimulationError(RuntimeError):
    """The protocol cannot be executed on a concrete deck."""


class StepBudgetExceeded(SimulationError):
    def __init__(self, inp: tuple[int, int], trial: int, budget: int):
        self.input = inp
        self.trial = trial
        self.budget = budget
        super().__init__(f"trial {trial} for input a={inp[0]} b={inp[1]} "
                         f"did not terminate within {budget} steps")


def dec6(x: Fraction) -> str:
    """Six-digit decimal string, rounded half to even."""
    x = Fraction(x)
    return str((Decimal(x.numerator) / Decimal(x.denominator)).quantize(
        Decimal("0.000001"), rounding=ROUND_HALF_EVEN))


# -- single runs -----------------------------------------------------------

@dataclass(frozen=True)
class Transcript:
    input: tuple[int, int]
    steps: tuple[tuple[str, str | None], ...]
    output: int | None
    reading: str
    turns: int
    shuffles: int

    @property
    def passes(self) -> int:
        return max(self.turns - 1, 0)

    def to_dict(self) -> dict:
        return {
            "input": list(self.input),
            "steps": [[a, v] for a, v in self.steps],
            "output": self.output,
            "reading": self.reading,
            "turns": self.turns,
            "shuffles": self.shuffles,
            "passes": self.passes,
        }

    def __str__(self) -> str:
        lines = [f"input a={self.input[0]} b={self.input[1]}"]
        for action, visible in self.steps:
            lines.append(f"  {action}" + (f"  => {visible}" if visible is not None else ""))
        lines.append(f"  output {self.output} (read {self.reading}); "
                     f"turns={self.turns} shuffles={self.shuffles} passes={self.passes}")
        return "\n".join(lines)


def _cumulative(entries) -> list[int]:
    denom = math.lcm(*(w.denominator for _, w in entries))
    cum, total = [], 0
    for _, w in entries:
        total += int(w * denom)
        cum.append(total)
    return cum


def run_once(ast: ProtocolAst, inp: tuple[int, int], rng: SplitMix64 | int = 0,
             budget: int = DEFAULT_STEP_BUDGET) -> Transcript:
    """Deal the deck for ``inp`` and play the protocol once.

    An integer ``rng`` is a seed; the run then uses trial 0 of that
    input's stream, the same draws :func:`estimate` makes for trial 0.
    """
    a, b = inp
    if isinstance(rng, int):
        rng = SplitMix64.for_trial(rng, INPUTS.index((a, b)), 0)
    program = ast.program()
    actions = program.actions
    faces = list(ast.initial_faces(a, b))
    up = [False] * ast.n
    steps: list[tuple[str, str | None]] = []
    turns = shuffles = 0
    pc = 0

    def visible() -> str:
        return "".join(f.letter if u else "?" for f, u in zip(faces, up))

    for _ in range(budget):
        if not 0 <= pc < len(actions):
            raise SimulationError(f"control left the protocol at pc {pc}")
        act = actions[pc]
        if isinstance(act, (Shuffle, Perm)):
            if any(up):
                raise SimulationError(f"{act.label()} with face-up cards ({visible()})")
            if isinstance(act, Shuffle):
                shuffles += 1
                perm = act.entries[rng.choose(_cumulative(act.entries))][0]
                steps.append((f"{act.label()} applied {perm}", None))
            else:
                perm = act.perm
                steps.append((act.label(), None))
            moved = [Card.CLUB] * ast.n
            for i, f in enumerate(faces):
                moved[perm(i + 1) - 1] = f
            faces = moved
            pc += 1
        elif isinstance(act, Turn):
            revealing = any(not up[p - 1] for p in act.positions)
            for p in act.positions:
                up[p - 1] = not up[p - 1]
            if revealing:
                turns += 1
            steps.append((act.label(), visible() if revealing else None))
            pc += 1
        elif isinstance(act, Branch):
            target = act.target(visible())
            if target is None:
                raise SimulationError(f"no branch arm matches {visible()}")
            steps.append((f"branch -> {target}", None))
            pc = program.pc_of(target)
        elif isinstance(act, Goto):
            steps.append((act.label(), None))
            pc = program.pc_of(act.target)
        elif isinstance(act, Result):
            pair = (faces[act.x - 1], faces[act.y - 1])
            reading = pair[0].letter + pair[1].letter
            out = {(Card.CLUB, Card.HEART): 0, (Card.HEART, Card.CLUB): 1}.get(pair)
            steps.append((act.label(), None))
            return Transcript((a, b), tuple(steps), out, reading, turns, shuffles)
        elif isinstance(act, Output):
            reading = "".join(f.letter for f in faces)
            steps.append((act.label(), reading))
            return Transcript((a, b), tuple(steps), act.bit(reading), reading, turns, shuffles)
    raise StepBudgetExceeded((a, b), 0, budget)


# -- aggregate statistics --------------------------------------------------

@dataclass(frozen=True)
class InputStats:
    input: tuple[int, int]
    trials: int
    outputs: tuple[int, int, int]   # output 0, output 1, no valid output
    sums: tuple[int, int, int]      # per counter in COUNTERS
    sumsq: tuple[int, int, int]
    runs_with_passes: int
    outcomes: tuple[tuple[int, str, int], ...]  # (pc, visible pattern, count)

    @property
    def mismatches(self) -> int:
        want = self.input[0] & self.input[1]
        return self.trials - self.outputs[want]


@dataclass(frozen=True)
class TurnSite:
    pc: int
    block: str
    action: str


def _counter_index(name: str) -> int:
    try:
        return COUNTERS.index(name)
    except ValueError:
        raise ValueError(f"unknown counter {name!r}; expected one of {COUNTERS}") from None


@dataclass(frozen=True)
class SimulationStats:
    protocol: str
    mode: Mode
    seed: int
    trials: int
    inputs: tuple[InputStats, ...]
    sites: tuple[TurnSite, ...]
    rng: str = RNG_NAME
    transcripts: tuple[Transcript, ...] = field(default=())

    def _select(self, inp):
        if inp is None:
            return self.inputs
        return tuple(s for s in self.inputs if s.input == tuple(inp))

    @property
    def mismatches(self) -> int:
        return sum(s.mismatches for s in self.inputs)

    @property
    def all_outputs_correct(self) -> bool:
        return self.mismatches == 0

    def output_frequency(self, inp, bit: int) -> Fraction:
        (s,) = self._select(inp)
        return Fraction(s.outputs[bit], s.trials)

    def mean(self, counter: str, inp=None) -> Fraction:
        k = _counter_index(counter)
        sel = self._select(inp)
        return Fraction(sum(s.sums[k] for s in sel), sum(s.trials for s in sel))

    def variance(self, counter: str, inp=None) -> Fraction:
        k = _counter_index(counter)
        sel = self._select(inp)
        n = sum(s.trials for s in sel)
        return Fraction(sum(s.sumsq[k] for s in sel), n) - self.mean(counter, inp) ** 2

    def outcome_counts(self, pc: int, inp=None) -> dict[str, int]:
        out: Counter = Counter()
        for s in self._select(inp):
            for p, pattern, k in s.outcomes:
                if p == pc:
                    out[pattern] += k
        return dict(sorted(out.items()))

    def visits(self, pc: int, inp=None) -> int:
        return sum(self.outcome_counts(pc, inp).values())

    def branch_frequency(self, pc: int, pattern: str, inp=None) -> Fraction:
        counts = self.outcome_counts(pc, inp)
        total = sum(counts.values())
        return Fraction(counts.get(pattern, 0), total) if total else Fraction(0)

    @property
    def first_site(self) -> TurnSite | None:
        return self.sites[0] if self.sites else None

    @property
    def terminal_frequency(self) -> Fraction:
        """Share of branch passes (reveals after the first) that end the run."""
        passes = sum(s.sums[2] for s in self.inputs)
        ended = sum(s.runs_with_passes for s in self.inputs)
        return Fraction(ended, passes) if passes else Fraction(0)

    def to_dict(self) -> dict:
        def counters(inp=None):
            return {
                c: {"mean": dec6(self.mean(c, inp)), "variance": dec6(self.variance(c, inp)),
                    "sum": sum(s.sums[k] for s in self._select(inp)),
                    "sum_sq": sum(s.sumsq[k] for s in self._select(inp))}
                for k, c in enumerate(COUNTERS)
            }

        passes = sum(s.sums[2] for s in self.inputs)
        ended = sum(s.runs_with_passes for s in self.inputs)
        d = {
            "protocol": self.protocol,
            "mode": self.mode.value,
            "rng": self.rng,
            "seed": self.seed,
            "trials_per_input": self.trials,
            "all_outputs_correct": self.all_outputs_correct,
            "mismatches": self.mismatches,
            "inputs": [
                {
                    "a": s.input[0],
                    "b": s.input[1],
                    "expected": s.input[0] & s.input[1],
                    "outputs": {
                        key: {"count": s.outputs[k], "frequency": dec6(Fraction(s.outputs[k], s.trials))}
                        for k, key in enumerate(("0", "1", "none"))
                    },
                    "counters": counters(s.input),
                }
                for s in self.inputs
            ],
            "counters": counters(),
            "terminal_frequency": {
                "count": ended, "of": passes, "frequency": dec6(self.terminal_frequency)},
            "branches": [
                {
                    "pc": site.pc,
                    "at": site.block,
                    "action": site.action,
                    "visits": self.visits(site.pc),
                    "outcomes": [
                        {"pattern": pat, "count": k,
                         "frequency": dec6(Fraction(k, self.visits(site.pc)))}
                        for pat, k in self.outcome_counts(site.pc).items()
                    ],
                }
                for site in self.sites
            ],
        }
        if self.transcripts:
            d["transcripts"] = [t.to_dict() for t in self.transcripts]
        return d

    def to_text(self) -> str:
        lines = [f"protocol: {self.protocol} ({self.mode.value})",
                 f"rng: {self.rng} seed={self.seed} trials per input: {self.trials}"]
        for s in self.inputs:
            a, b = s.input
            lines.append(f"  a={a} b={b}: output 0 x{s.outputs[0]}, 1 x{s.outputs[1]}, "
                         f"none x{s.outputs[2]} (expected {a & b})")
        lines.append(f"all outputs equal a AND b: {'yes' if self.all_outputs_correct else 'no'}"
                     f" ({self.mismatches} mismatches)")
        for c in COUNTERS:
            lines.append(f"mean {c}: {dec6(self.mean(c))} (variance {dec6(self.variance(c))})")
        lines.append(f"terminal-branch frequency: {dec6(self.terminal_frequency)}")
        for site in self.sites:
            visits = self.visits(site.pc)
            outs = ", ".join(f"{p} {dec6(Fraction(k, visits))}"
                             for p, k in self.outcome_counts(site.pc).items())
            lines.append(f"  [{site.block}] {site.action} x{visits}: {outs}")
        for t in self.transcripts:
            lines.append(str(t))
        return "\n".join(lines) + "\n"


def _check_valid(ast: ProtocolAst) -> None:
    errors = [d for d in validate(ast) if d.severity == "error"]
    if errors:
        raise SimulationError("invalid protocol: " + "; ".join(str(d) for d in errors))


def estimate(ast: ProtocolAst, trials: int, seed: int = 0, *, workers: int = 1,
             budget: int = DEFAULT_STEP_BUDGET, backend: str | None = None) -> SimulationStats:
    """Run ``trials`` plays for each of the four inputs.

    Deterministic in ``(ast, trials, seed)``: neither ``workers`` nor the
    kernel backend changes the result.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    _check_valid(ast)
    kernel = get_kernel(backend)
    bc = compile_protocol(ast)
    program = ast.program()
    seed &= (1 << 64) - 1
    chunks = [(t, min(t + CHUNK, trials)) for t in range(0, trials, CHUNK)]

    def run(job):
        idx, t0, t1 = job
        out = np.zeros((t1 - t0, 4), dtype=np.int64)
        counts = np.zeros((len(bc.turn_pcs), bc.ncodes), dtype=np.int64)
        faces = np.array([int(f) for f in ast.initial_faces(*INPUTS[idx])], dtype=np.int64)
        kernel(bc.code, bc.perms, bc.cum, bc.arms, bc.tpos, faces,
               np.uint64(stream_key(seed, idx)), t0, t1, budget, out, counts)
        return out, counts

    jobs = [(idx, t0, t1) for idx in range(4) for t0, t1 in chunks]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    per_input = []
    for idx, inp in enumerate(INPUTS):
        parts = [r for j, r in zip(jobs, results) if j[0] == idx]
        out = np.concatenate([p[0] for p in parts])
        counts = sum(p[1] for p in parts)
        status = out[:, 3]
        bad = np.flatnonzero(status == _BUDGET)
        if bad.size:
            raise StepBudgetExceeded(inp, int(bad[0]), budget)
        stuck = np.flatnonzero(status == _STUCK)
        if stuck.size:
            pc = int(out[stuck[0], 0])
            where = program.actions[pc].label() if 0 <= pc < len(program.actions) else f"pc {pc}"
            raise SimulationError(f"trial {int(stuck[0])} for input a={inp[0]} b={inp[1]} "
                                  f"could not execute {where}")
        valid = status == _OK
        bits = out[:, 0]
        turns = out[:, 1]
        passes = np.maximum(turns - 1, 0)
        cols = (turns, out[:, 2], passes)
        outcomes = tuple(
            (bc.turn_pcs[r], decode_pattern(int(c), bc.n), int(counts[r, c]))
            for r, c in zip(*np.nonzero(counts))
        )
        per_input.append(InputStats(
            input=inp,
            trials=trials,
            outputs=(int(np.sum(valid & (bits == 0))), int(np.sum(valid & (bits == 1))),
                     int(np.sum(~valid))),
            sums=tuple(int(c.sum()) for c in cols),
            sumsq=tuple(int((c * c).sum()) for c in cols),
            runs_with_passes=int(np.sum(passes > 0)),
            outcomes=tuple(sorted(outcomes)),
        ))

    transcripts = ()
    if trials == 1:
        transcripts = tuple(
            run_once(ast, inp, SplitMix64(trial_state(stream_key(seed, i), 0)), budget)
            for i, inp in enumerate(INPUTS))
    sites = tuple(TurnSite(pc, program.block_of[pc], program.actions[pc].label())
                  for pc in bc.turn_pcs)
    # only sites that reveal something carry outcome counts
    seen = {pc for s in per_input for pc, _, _ in s.outcomes}
    return SimulationStats(ast.name, ast.mode, seed, trials, tuple(per_input),
                           tuple(s for s in sites if s.pc in seen), transcripts=transcripts)


@dataclass(frozen=True)
class IndependenceVerdict(Verdict):
    max_deviation: float = 0.0
    bound: float = 0.0


def transcript_independence_test(ast: ProtocolAst, trials: int, seed: int = 0,
                                 **kwargs) -> IndependenceVerdict:
    """Empirical check that what players see does not depend on the inputs.

    At every revealing turn, compare the frequency of each visible pattern
    (conditioned on reaching the turn) across the inputs.  In open-output
    mode only inputs with the same AND are compared.  PASS iff the largest
    pairwise gap is below ``4 / sqrt(trials)``.
    """
    stats = estimate(ast, trials, seed, **kwargs)
    bound = 4 / math.sqrt(trials)
    if ast.mode is Mode.OPEN_OUTPUT:
        groups = [[i for i in INPUTS if i[0] & i[1] == bit] for bit in (0, 1)]
    else:
        groups = [list(INPUTS)]
    worst, witness = 0.0, None
    for site in stats.sites:
        patterns = set(stats.outcome_counts(site.pc))
        for group in groups:
            for pattern in sorted(patterns):
                freqs = {}
                for inp in group:
                    if stats.visits(site.pc, inp):
                        freqs[inp] = float(stats.branch_frequency(site.pc, pattern, inp))
                if len(freqs) < 2:
                    continue
                lo = min(freqs, key=freqs.get)
                hi = max(freqs, key=freqs.get)
                gap = freqs[hi] - freqs[lo]
                if gap > worst:
                    worst = gap
                    witness = (f"[{site.block}] {site.action} shows {pattern} with frequency "
                               f"{freqs[hi]:.4f} for a={hi[0]} b={hi[1]} but {freqs[lo]:.4f} "
                               f"for a={lo[0]} b={lo[1]}")
    ok = worst < bound
    return IndependenceVerdict(ok, None if ok else f"{witness}; gap {worst:.4f} >= {bound:.4f}",
                               worst, bound)
