"""Processes, sessions and global types as finite graphs over regular terms.

A regular (possibly infinite) term has finitely many distinct subterms, so it
is stored as a finite rooted graph.  Graphs are brought to a canonical form
(bisimulation-minimal, breadth-first numbered, branches sorted by label), which
makes equality of regular terms plain structural equality of the dataclasses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

END = "end"
OUT = "!"
IN = "?"
COMM = "comm"


class TermError(Exception):
    """Base class for malformed process/session/global-type structures."""


class BadIdentifier(TermError):
    pass


class UndefinedName(TermError):
    pass


class UnguardedRecursion(TermError):
    pass


class DuplicateBranchLabel(TermError):
    pass


class EmptyChoice(TermError):
    pass


class DuplicateParticipant(TermError):
    pass


def check_ident(name: str, what: str = "identifier") -> str:
    if not isinstance(name, str) or not IDENT_RE.match(name):
        raise BadIdentifier(f"{what} {name!r} is not a valid identifier")
    return name


# ---------------------------------------------------------------------------
# Syntax trees for recursive equation systems (the input of the builders).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcEnd:
    pass


@dataclass(frozen=True)
class ProcRef:
    name: str


@dataclass(frozen=True)
class ProcComm:
    kind: str  # OUT or IN
    partner: str
    branches: tuple[tuple[str, "ProcExpr"], ...]


ProcExpr = Union[ProcEnd, ProcRef, ProcComm]


@dataclass(frozen=True)
class GlobalEnd:
    pass


@dataclass(frozen=True)
class GlobalRef:
    name: str


@dataclass(frozen=True)
class GlobalComm:
    sender: str
    receiver: str
    branches: tuple[tuple[str, "GlobalExpr"], ...]


GlobalExpr = Union[GlobalEnd, GlobalRef, GlobalComm]


# ---------------------------------------------------------------------------
# Graph nodes.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PNode:
    """One process state: terminated, or a send/receive choice."""

    kind: str  # END, OUT or IN
    partner: str | None
    branches: tuple[tuple[str, int], ...]  # (label, successor), sorted by label

    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.branches)


@dataclass(frozen=True)
class GNode:
    """One global-type state: End, or a communication between two roles."""

    kind: str  # END or COMM
    sender: str | None
    receiver: str | None
    branches: tuple[tuple[str, int], ...]

    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.branches)


def _check_branches(branches: Sequence[tuple[str, int]], n_nodes: int) -> None:
    if not branches:
        raise EmptyChoice("communication node with no branches")
    seen = set()
    for lab, tgt in branches:
        check_ident(lab, "message label")
        if lab in seen:
            raise DuplicateBranchLabel(f"duplicate branch label {lab!r}")
        seen.add(lab)
        if not (0 <= tgt < n_nodes):
            raise TermError(f"branch target {tgt} out of range")


@dataclass(frozen=True)
class ProcessGraph:
    """Finite rooted graph of process states.

    Construction validates node shape; re-rooting may leave unreachable
    nodes, which minimize prunes (canonical graphs hold reachable nodes
    only).
    """

    nodes: tuple[PNode, ...]
    root: int

    def __post_init__(self) -> None:
        if not (0 <= self.root < len(self.nodes)):
            raise TermError("root out of range")
        for node in self.nodes:
            if node.kind == END:
                if node.partner is not None or node.branches:
                    raise TermError("end node must carry no partner or branches")
            elif node.kind in (OUT, IN):
                check_ident(node.partner, "participant")
                _check_branches(node.branches, len(self.nodes))
            else:
                raise TermError(f"unknown process node kind {node.kind!r}")

    @property
    def root_node(self) -> PNode:
        return self.nodes[self.root]

    @property
    def is_end(self) -> bool:
        return self.root_node.kind == END

    def step(self, label: str) -> "ProcessGraph":
        """Canonical graph re-rooted at the continuation of the given branch."""
        node = self.root_node
        for lab, tgt in node.branches:
            if lab == label:
                return minimize(ProcessGraph(self.nodes, tgt))
        raise KeyError(label)


@dataclass(frozen=True)
class GlobalGraph:
    nodes: tuple[GNode, ...]
    root: int

    def __post_init__(self) -> None:
        if not (0 <= self.root < len(self.nodes)):
            raise TermError("root out of range")
        for node in self.nodes:
            if node.kind == END:
                if node.sender is not None or node.branches:
                    raise TermError("end node must carry no roles or branches")
            elif node.kind == COMM:
                check_ident(node.sender, "participant")
                check_ident(node.receiver, "participant")
                if node.sender == node.receiver:
                    raise TermError(f"self-communication {node.sender!r}")
                _check_branches(node.branches, len(self.nodes))
            else:
                raise TermError(f"unknown global node kind {node.kind!r}")

    @property
    def root_node(self) -> GNode:
        return self.nodes[self.root]

    @property
    def is_end(self) -> bool:
        return self.root_node.kind == END

    def at(self, node_id: int) -> "GlobalGraph":
        """Canonical subgraph rooted at the given node."""
        return minimize_global(GlobalGraph(self.nodes, node_id))


END_PROCESS = ProcessGraph((PNode(END, None, ()),), 0)
END_GLOBAL = GlobalGraph((GNode(END, None, None, ()),), 0)


# ---------------------------------------------------------------------------
# Bisimulation minimization and canonical numbering.
#
# Partition refinement: start from node signatures, split blocks until the
# label-indexed successor blocks stabilize, then renumber blocks in BFS order
# from the root with branches sorted by label.  Two graphs denote the same
# regular tree iff their canonical forms are identical.
# ---------------------------------------------------------------------------


def _refine(sigs: list, branches: list[tuple[tuple[str, int], ...]]) -> list[int]:
    block = {}
    cls = []
    for s in sigs:
        if s not in block:
            block[s] = len(block)
        cls.append(block[s])
    while True:
        keys = [
            (cls[i], tuple((lab, cls[t]) for lab, t in branches[i]))
            for i in range(len(sigs))
        ]
        remap: dict = {}
        new_cls = []
        for k in keys:
            if k not in remap:
                remap[k] = len(remap)
            new_cls.append(remap[k])
        if new_cls == cls:
            return cls
        cls = new_cls


def _canonical_order(
    cls: list[int], branches: list[tuple[tuple[str, int], ...]], root: int
) -> tuple[list[int], dict[int, int]]:
    """BFS over blocks from the root block; returns block visit order and ids."""
    rep: dict[int, int] = {}
    for i, c in enumerate(cls):
        rep.setdefault(c, i)
    order: list[int] = []
    number: dict[int, int] = {}
    queue = [cls[root]]
    number[cls[root]] = 0
    order.append(cls[root])
    while queue:
        b = queue.pop(0)
        for lab, tgt in branches[rep[b]]:
            tb = cls[tgt]
            if tb not in number:
                number[tb] = len(number)
                order.append(tb)
                queue.append(tb)
    return order, number


def minimize(g: ProcessGraph) -> ProcessGraph:
    sigs = [(n.kind, n.partner) for n in g.nodes]
    branches = [n.branches for n in g.nodes]
    cls = _refine(sigs, branches)
    order, number = _canonical_order(cls, branches, g.root)
    rep = {}
    for i, c in enumerate(cls):
        rep.setdefault(c, i)
    new_nodes = []
    for b in order:
        n = g.nodes[rep[b]]
        new_branches = tuple(
            sorted((lab, number[cls[t]]) for lab, t in n.branches)
        )
        new_nodes.append(PNode(n.kind, n.partner, new_branches))
    return ProcessGraph(tuple(new_nodes), 0)


def minimize_global(g: GlobalGraph) -> GlobalGraph:
    sigs = [(n.kind, n.sender, n.receiver) for n in g.nodes]
    branches = [n.branches for n in g.nodes]
    cls = _refine(sigs, branches)
    order, number = _canonical_order(cls, branches, g.root)
    rep = {}
    for i, c in enumerate(cls):
        rep.setdefault(c, i)
    new_nodes = []
    for b in order:
        n = g.nodes[rep[b]]
        new_branches = tuple(
            sorted((lab, number[cls[t]]) for lab, t in n.branches)
        )
        new_nodes.append(GNode(n.kind, n.sender, n.receiver, new_branches))
    return GlobalGraph(tuple(new_nodes), 0)


def processes_equivalent(a: ProcessGraph, b: ProcessGraph) -> bool:
    return minimize(a) == minimize(b)


def globals_equivalent(a: GlobalGraph, b: GlobalGraph) -> bool:
    return minimize_global(a) == minimize_global(b)


# ---------------------------------------------------------------------------
# Building graphs from named recursive equations.
# ---------------------------------------------------------------------------


class _GraphBuilder:
    def __init__(self) -> None:
        self.nodes: list = []
        self.end_id: int | None = None

    def end(self) -> int:
        if self.end_id is None:
            self.end_id = len(self.nodes)
            self.nodes.append(None)  # patched by caller
        return self.end_id

    def reserve(self) -> int:
        self.nodes.append(None)
        return len(self.nodes) - 1


def _branch_pairs(branches: Sequence[tuple[str, object]]) -> list[tuple[str, object]]:
    if not branches:
        raise EmptyChoice("choice with no branches")
    seen = set()
    for lab, _ in branches:
        check_ident(lab, "message label")
        if lab in seen:
            raise DuplicateBranchLabel(f"duplicate branch label {lab!r}")
        seen.add(lab)
    return list(branches)


def build_process_graph(
    definitions: Mapping[str, ProcExpr], root: str | None = None
) -> ProcessGraph:
    """Turn named recursive process equations into a canonical ProcessGraph.

    Every name must be defined and every recursion must pass through at least
    one send or receive; pure aliasing cycles (``P = P``) are rejected.
    """
    if root is None:
        root = next(iter(definitions))
    if root not in definitions:
        raise UndefinedName(f"undefined process {root!r}")
    builder = _GraphBuilder()
    def_node: dict[str, int] = {}

    def resolve(name: str, trail: tuple[str, ...]) -> int:
        if name not in definitions:
            raise UndefinedName(f"undefined process {name!r}")
        if name in trail:
            raise UnguardedRecursion(
                f"process {name!r} is defined in terms of itself without any communication"
            )
        expr = definitions[name]
        if isinstance(expr, ProcRef):
            return resolve(expr.name, trail + (name,))
        if isinstance(expr, ProcEnd):
            return builder.end()
        return node_for(name)

    def node_for(name: str) -> int:
        if name in def_node:
            return def_node[name]
        expr = definitions[name]
        assert isinstance(expr, ProcComm)
        nid = builder.reserve()
        def_node[name] = nid
        fill(nid, expr)
        return nid

    def place(expr: ProcExpr) -> int:
        if isinstance(expr, ProcEnd):
            return builder.end()
        if isinstance(expr, ProcRef):
            return resolve(expr.name, ())
        nid = builder.reserve()
        fill(nid, expr)
        return nid

    def fill(nid: int, expr: ProcComm) -> None:
        if expr.kind not in (OUT, IN):
            raise TermError(f"bad process kind {expr.kind!r}")
        check_ident(expr.partner, "participant")
        pairs = _branch_pairs(expr.branches)
        targets = tuple(sorted((lab, place(sub)) for lab, sub in pairs))
        builder.nodes[nid] = PNode(expr.kind, expr.partner, targets)

    root_id = resolve(root, ())
    if builder.end_id is not None:
        builder.nodes[builder.end_id] = PNode(END, None, ())
    return minimize(ProcessGraph(tuple(builder.nodes), root_id))


def build_global_graph(
    definitions: Mapping[str, GlobalExpr], root: str | None = None
) -> GlobalGraph:
    """Same construction for global-type equations."""
    if root is None:
        root = next(iter(definitions))
    if root not in definitions:
        raise UndefinedName(f"undefined global type {root!r}")
    builder = _GraphBuilder()
    def_node: dict[str, int] = {}

    def resolve(name: str, trail: tuple[str, ...]) -> int:
        if name not in definitions:
            raise UndefinedName(f"undefined global type {name!r}")
        if name in trail:
            raise UnguardedRecursion(
                f"global type {name!r} is defined in terms of itself without any communication"
            )
        expr = definitions[name]
        if isinstance(expr, GlobalRef):
            return resolve(expr.name, trail + (name,))
        if isinstance(expr, GlobalEnd):
            return builder.end()
        return node_for(name)

    def node_for(name: str) -> int:
        if name in def_node:
            return def_node[name]
        expr = definitions[name]
        assert isinstance(expr, GlobalComm)
        nid = builder.reserve()
        def_node[name] = nid
        fill(nid, expr)
        return nid

    def place(expr: GlobalExpr) -> int:
        if isinstance(expr, GlobalEnd):
            return builder.end()
        if isinstance(expr, GlobalRef):
            return resolve(expr.name, ())
        nid = builder.reserve()
        fill(nid, expr)
        return nid

    def fill(nid: int, expr: GlobalComm) -> None:
        check_ident(expr.sender, "participant")
        check_ident(expr.receiver, "participant")
        if expr.sender == expr.receiver:
            raise TermError(f"self-communication {expr.sender!r}")
        pairs = _branch_pairs(expr.branches)
        targets = tuple(sorted((lab, place(sub)) for lab, sub in pairs))
        builder.nodes[nid] = GNode(COMM, expr.sender, expr.receiver, targets)

    root_id = resolve(root, ())
    if builder.end_id is not None:
        builder.nodes[builder.end_id] = GNode(END, None, None, ())
    return minimize_global(GlobalGraph(tuple(builder.nodes), root_id))


# ---------------------------------------------------------------------------
# Sessions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Session:
    """Parallel composition of participant-owned processes.

    Bindings are kept sorted by participant.  A binding to a terminated
    process is legal here and erased by normalize_session.
    """

    bindings: tuple[tuple[str, ProcessGraph], ...]

    def __post_init__(self) -> None:
        names = [p for p, _ in self.bindings]
        for p in names:
            check_ident(p, "participant")
        if len(set(names)) != len(names):
            dup = sorted({p for p in names if names.count(p) > 1})
            raise DuplicateParticipant(f"participant(s) bound twice: {', '.join(dup)}")
        if names != sorted(names):
            raise TermError("session bindings must be sorted by participant")

    @property
    def is_null(self) -> bool:
        return all(g.is_end for _, g in self.bindings)

    def get(self, participant: str) -> ProcessGraph | None:
        for p, g in self.bindings:
            if p == participant:
                return g
        return None

    def items(self) -> Iterator[tuple[str, ProcessGraph]]:
        return iter(self.bindings)

    def replace(self, participant: str, graph: ProcessGraph) -> "Session":
        pairs = dict(self.bindings)
        pairs[participant] = graph
        return session_of(pairs)

    def without(self, participants: Iterable[str]) -> "Session":
        drop = set(participants)
        return Session(tuple((p, g) for p, g in self.bindings if p not in drop))


def session_of(bindings: Mapping[str, ProcessGraph] | Iterable[tuple[str, ProcessGraph]]) -> Session:
    pairs = bindings.items() if isinstance(bindings, Mapping) else bindings
    return Session(tuple(sorted(pairs, key=lambda kv: kv[0])))


EMPTY_SESSION = Session(())


def normalize_session(s: Session) -> Session:
    """The canonical representative modulo structural congruence.

    Drops terminated participants, minimizes every process and keeps the
    bindings sorted, so == on normalized sessions decides equivalence.
    """
    kept = []
    for p, g in s.bindings:
        g = minimize(g)
        if not g.is_end:
            kept.append((p, g))
    return Session(tuple(kept))


def participants(s: Session) -> frozenset[str]:
    """The active participants: those bound to a process that is not 0."""
    return frozenset(p for p, g in s.bindings if not minimize(g).is_end)


def sessions_equivalent(a: Session, b: Session) -> bool:
    return normalize_session(a) == normalize_session(b)
