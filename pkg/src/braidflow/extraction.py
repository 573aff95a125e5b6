"""Read the braid word back off strand trajectories.

Strands are projected to the (x, t)-plane with y as depth. Between two
samples the trajectories are linear, so every pairwise crossing time in
the interval is exact; crossings are replayed in time order as adjacent
transpositions of the current x-order. A crossing is positive when the
strand arriving from the left passes through with the larger y.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .braid_algebra import (
    BraidWord,
    endpoint_permutation,
    format_word,
    free_reduce,
    left_normal_form,
    words_equal,
)
from .flow import IntegratorOpts, StrandSet, flow_map_check, trace_strands
from .synthesis import DEFAULT_Q, WarpSpec, build_schedule, make_layout

log = logging.getLogger(__name__)

MIN_Y_GAP = 1e-6


class CrossingAmbiguity(RuntimeError):
    pass


@dataclass(frozen=True)
class CrossingEvent:
    time: float
    slot: int
    sign: int
    y_gap: float


def detect_crossings(strands: StrandSet) -> list[CrossingEvent]:
    x, y, times = strands.x, strands.y, strands.times
    n = strands.n
    span = np.max(x) - np.min(x)
    if span >= 1.0:
        raise CrossingAmbiguity("strands wrap around the annulus; x-order is not defined")
    order = list(np.argsort(x[0], kind="stable"))
    events: list[CrossingEvent] = []
    for i in range(len(times) - 1):
        xa, xb = x[i], x[i + 1]
        if np.array_equal(xa, xb):
            continue
        hits = []
        for j in range(n):
            for k in range(j + 1, n):
                d0 = xa[j] - xa[k]
                d1 = xb[j] - xb[k]
                # a sign change, with zero at the left end counted in the previous interval
                if (d0 < 0 < d1) or (d0 > 0 > d1) or (d0 == 0 and d1 != 0 and _was_tied(order, j, k, d1)):
                    f = d0 / (d0 - d1)
                    hits.append((f, j, k))
        if not hits:
            continue
        hits.sort()
        for f, j, k in hits:
            pj, pk = order.index(j), order.index(k)
            if abs(pj - pk) != 1:
                raise CrossingAmbiguity(
                    f"non-adjacent strands {j + 1}, {k + 1} cross near t = {times[i]:.6g}")
            left, right = (j, k) if pj < pk else (k, j)
            tc = times[i] + f * (times[i + 1] - times[i])
            yl = y[i, left] + f * (y[i + 1, left] - y[i, left])
            yr = y[i, right] + f * (y[i + 1, right] - y[i, right])
            gap = abs(yl - yr)
            if gap < MIN_Y_GAP:
                raise CrossingAmbiguity(
                    f"strands {left + 1}, {right + 1} meet at t = {tc:.6g} (y gap {gap:.2g})")
            slot = min(pj, pk)
            order[slot], order[slot + 1] = order[slot + 1], order[slot]
            events.append(CrossingEvent(float(tc), slot + 1, 1 if yl > yr else -1, float(gap)))
    return events


def _was_tied(order, j, k, d1):
    # strands tied at the left end: a crossing happened only if the new sign
    # disagrees with the current order
    return (order.index(j) < order.index(k)) == (d1 > 0)


def word_from_crossings(events: list[CrossingEvent], n: int) -> BraidWord:
    return BraidWord(n, tuple((e.slot, e.sign) for e in sorted(events, key=lambda e: e.time)))


def strand_permutation(strands: StrandSet) -> tuple[int, ...]:
    """1-based end slot of the strand starting in each slot, from x-order."""
    start = np.argsort(strands.x[0], kind="stable")
    end = np.argsort(strands.x[-1], kind="stable")
    slot_of = {int(s): i for i, s in enumerate(end)}
    return tuple(slot_of[int(s)] + 1 for s in start)


@dataclass
class VerificationReport:
    match: bool
    input_word: BraidWord
    extracted_word: BraidWord | None = None
    certificates: dict = field(default_factory=dict)
    max_ode_map_error: float | None = None
    min_separation: float | None = None
    q_used: int | None = None
    error: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        nf = {"input": left_normal_form(self.input_word).to_dict()}
        if self.extracted_word is not None:
            nf["extracted"] = left_normal_form(self.extracted_word).to_dict()
        return {
            "match": bool(self.match),
            "input_word": format_word(self.input_word),
            "extracted_word": None if self.extracted_word is None else format_word(self.extracted_word),
            "normal_forms": nf,
            "certificates": {k: v.to_dict() for k, v in self.certificates.items()},
            "diagnostics": {
                "q": self.q_used,
                "max_ode_map_error": self.max_ode_map_error,
                "min_separation": self.min_separation,
                "error": self.error,
                **self.diagnostics,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def verify_braid(word: BraidWord, q: int = DEFAULT_Q, warp: WarpSpec = WarpSpec(),
                 method: str = "isotopy", samples_per_substep: int = 64,
                 ode_check: bool = True, opts: IntegratorOpts = IntegratorOpts()) -> VerificationReport:
    """Compile ``word`` to a Hamiltonian, trace the marked points, and compare."""
    from .flow import min_separation

    report = VerificationReport(False, word)
    try:
        layout = make_layout(word.n_strands, q=q)
        sched = build_schedule(word, layout, q, warp)
        report.q_used = sched.q
        report.certificates = sched.certificates
        strands = trace_strands(sched, samples_per_substep, method, opts)
        report.min_separation = min_separation(strands.x, strands.y) if strands.n > 1 else None
        events = detect_crossings(strands)
        extracted = word_from_crossings(events, word.n_strands)
        report.extracted_word = extracted
        if ode_check and sched.segments and warp.kind != "literal_eq17":
            x0, y0 = sched.layout.marked_points()
            report.max_ode_map_error = flow_map_check(sched, (x0, y0), opts).max_error
        perm_ok = strand_permutation(strands) == endpoint_permutation(extracted).images
        report.diagnostics["permutation_consistent"] = perm_ok
        report.match = words_equal(word, extracted) and perm_ok
        report.diagnostics["letter_equal"] = free_reduce(extracted) == free_reduce(word)
    except Exception as exc:  # recorded in the report by contract
        log.info("verification of %s failed: %s", format_word(word), exc)
        report.error = f"{type(exc).__name__}: {exc}"
        report.match = False
    return report
