"""Boundedness of global types and excluded lock/deadlock-freedom of sessions.

Depth of a participant in a global type is the supremum, over all paths, of
the index of the first communication involving that participant; a path that
terminates or loops without ever involving the participant pushes the
supremum to infinity.  A global type is bounded when every participant of
every subterm has finite depth there.

Liveness verdicts are decided exactly on the finite reachable-state graph.
A participant is locked in a state when no path from that state contains a
communication involving it.  Only the existence of such a continuation is
required: a verdict of "lock-free" does not promise that every scheduler
eventually takes it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

from .semantics import ExploreConfig, StateGraph, Trace, explore
from .terms import COMM, GlobalGraph, IN, OUT, Session, participants

# Fixed note attached to lock-freedom reports: the verdict follows the literal
# existential-continuation reading, which accepts sessions that a fairness
# argument would call locked (a branch may be postponed forever by a loop).
LOCKFREEDOM_NOTE = (
    "lock-freedom is decided with the existential reading: a participant is "
    "lock-free in a state when some continuation contains one of its "
    "communications; schedulers that forever avoid that continuation are not "
    "counted as locks"
)


@lru_cache(maxsize=None)
def _plays_at(g: GlobalGraph, node_id: int) -> frozenset[str]:
    seen = {node_id}
    todo = [node_id]
    out = set()
    while todo:
        n = g.nodes[todo.pop()]
        if n.kind == COMM:
            out.add(n.sender)
            out.add(n.receiver)
            for _, t in n.branches:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
    return frozenset(out)


def plays_global(g: GlobalGraph) -> frozenset[str]:
    """All participants occurring in the (paths of the) global type."""
    return _plays_at(g, g.root)


def _depth_at(g: GlobalGraph, start: int, p: str) -> int | float:
    if p not in _plays_at(g, start):
        return 0
    # Walk the region reachable without touching p.  An End node or a cycle
    # inside the region means some path avoids p forever.
    color: dict[int, int] = {}  # 1 = on stack, 2 = done
    best: dict[int, int | float] = {}

    def visit(i: int) -> int | float:
        node = g.nodes[i]
        if node.kind != COMM:
            return math.inf  # terminated without meeting p
        if p in (node.sender, node.receiver):
            return 1
        if color.get(i) == 1:
            return math.inf  # p-avoiding cycle
        if color.get(i) == 2:
            return best[i]
        color[i] = 1
        worst: int | float = 0
        for _, t in node.branches:
            sub = visit(t)
            worst = max(worst, math.inf if sub is math.inf else 1 + sub)
        color[i] = 2
        best[i] = worst
        return worst

    return visit(start)


def depth(g: GlobalGraph, p: str) -> int | float:
    """Depth of p in g: 0 when absent, the longest wait otherwise, inf if
    some path never involves p."""
    return _depth_at(g, g.root, p)


@dataclass(frozen=True)
class BoundednessVerdict:
    holds: bool
    witness_node: int | None = None
    witness_participant: str | None = None

    def __bool__(self) -> bool:
        return self.holds


@lru_cache(maxsize=None)
def bounded(g: GlobalGraph) -> BoundednessVerdict:
    """True iff every participant of every subterm has finite depth there."""
    reachable = {g.root}
    todo = [g.root]
    while todo:
        for _, t in g.nodes[todo.pop()].branches:
            if t not in reachable:
                reachable.add(t)
                todo.append(t)
    for node_id in sorted(reachable):
        for p in sorted(_plays_at(g, node_id)):
            if _depth_at(g, node_id, p) == math.inf:
                return BoundednessVerdict(False, node_id, p)
    return BoundednessVerdict(True)


def top_partner(s: Session, p: str) -> str | None:
    """The participant addressed at the root of p's process, if p is active."""
    g = s.get(p)
    if g is None:
        return None
    node = g.root_node
    if node.kind in (OUT, IN):
        return node.partner
    return None


# ---------------------------------------------------------------------------
# Liveness.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LivenessVerdict:
    prop: str  # "lock-freedom" or "deadlock-freedom"
    ignored: frozenset[str]
    holds: bool
    witness_state: int | None = None
    witness_session: Session | None = None
    witness_participant: str | None = None
    witness_trace: Trace | None = None  # how to reach the witness state
    note: str | None = None

    def __bool__(self) -> bool:
        return self.holds

    def to_json_dict(self) -> dict:
        from .frontend import format_session

        out: dict = {
            "property": self.prop,
            "ignored": sorted(self.ignored),
            "holds": self.holds,
        }
        if self.holds:
            out["witness"] = None
        else:
            out["witness"] = {
                "state": self.witness_state,
                "session": format_session(self.witness_session),
                "participant": self.witness_participant,
                "trace": [str(lab) for lab in self.witness_trace.labels],
            }
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def _states_reaching_label_of(graph: StateGraph, p: str) -> set[int]:
    """States from which some path contains a communication involving p."""
    preds: dict[int, list[int]] = {}
    seeds = set()
    for i, lab, j in graph.edges:
        preds.setdefault(j, []).append(i)
        if p in lab.plays:
            seeds.add(i)
    reach = set(seeds)
    todo = list(seeds)
    while todo:
        j = todo.pop()
        for i in preds.get(j, ()):
            if i not in reach:
                reach.add(i)
                todo.append(i)
    return reach


def excluded_lock_free(
    s: Session,
    ignored: frozenset[str] | set[str] = frozenset(),
    config: ExploreConfig = ExploreConfig(),
    graph: StateGraph | None = None,
) -> LivenessVerdict:
    """Exact decision of excluded lock-freedom on the reachable-state graph.

    Fails on the first (in BFS order) reachable state holding an active,
    non-ignored participant from which no continuation involves it.
    """
    ignored = frozenset(ignored)
    if graph is None:
        graph = explore(s, config)
    live_cache: dict[str, set[int]] = {}
    for i, state in enumerate(graph.states):
        for p in sorted(participants(state) - ignored):
            if p not in live_cache:
                live_cache[p] = _states_reaching_label_of(graph, p)
            if i not in live_cache[p]:
                return LivenessVerdict(
                    "lock-freedom",
                    ignored,
                    False,
                    i,
                    state,
                    p,
                    graph.path_to(i),
                    LOCKFREEDOM_NOTE,
                )
    return LivenessVerdict("lock-freedom", ignored, True, note=LOCKFREEDOM_NOTE)


def excluded_deadlock_free(
    s: Session,
    ignored: frozenset[str] | set[str] = frozenset(),
    config: ExploreConfig = ExploreConfig(),
    graph: StateGraph | None = None,
) -> LivenessVerdict:
    """Every stuck reachable state may hold only ignored participants."""
    ignored = frozenset(ignored)
    if graph is None:
        graph = explore(s, config)
    has_edge = {i for i, _, _ in graph.edges}
    for i, state in enumerate(graph.states):
        if i in has_edge:
            continue
        stuck = sorted(participants(state) - ignored)
        if stuck:
            return LivenessVerdict(
                "deadlock-freedom", ignored, False, i, state, stuck[0], graph.path_to(i)
            )
    return LivenessVerdict("deadlock-freedom", ignored, True)
