"""Seeded generators for small random processes and sessions.

Used by the randomized suites: liveness oracle agreement, replacement
stability, and inference round trips.  Everything is driven by an explicit
random.Random so runs are reproducible.  Purely random processes rarely form
matching send/receive pairs, so the session generator plants one ready pair
half of the time; the rest stay fully random (stuck sessions exercise the
lock analyses).
"""

from __future__ import annotations

import random
from typing import Sequence

from .terms import (
    COMM,
    END,
    GNode,
    GlobalGraph,
    IN,
    OUT,
    PNode,
    ProcessGraph,
    Session,
    minimize,
    minimize_global,
    normalize_session,
    session_of,
)

LABEL_POOL = ("a", "b", "c")


def random_process(
    rng: random.Random,
    partners: Sequence[str],
    max_nodes: int = 5,
    labels: Sequence[str] = LABEL_POOL,
    end_bias: float = 0.3,
) -> ProcessGraph:
    """A small random process graph; cycles and dead choices are all fair game."""
    n = rng.randint(1, max_nodes)
    nodes = []
    for i in range(n):
        if i > 0 and rng.random() < end_bias:
            nodes.append(PNode(END, None, ()))
            continue
        kind = rng.choice((OUT, IN))
        partner = rng.choice(list(partners))
        width = rng.randint(1, min(2, len(labels)))
        labs = rng.sample(list(labels), width)
        branches = tuple(sorted((lab, rng.randrange(n)) for lab in labs))
        nodes.append(PNode(kind, partner, branches))
    return minimize(ProcessGraph(tuple(nodes), 0))


def _plant_pair(
    rng: random.Random,
    sender: str,
    receiver: str,
    pool: Sequence[str],
    max_nodes: int,
    labels: Sequence[str],
) -> tuple[ProcessGraph, ProcessGraph]:
    """A matching output/input root pair with random continuations."""
    width = rng.randint(1, min(2, len(labels)))
    out_labels = rng.sample(list(labels), width)
    extra = [lab for lab in labels if lab not in out_labels]
    in_labels = sorted(out_labels + ([rng.choice(extra)] if extra and rng.random() < 0.5 else []))

    def graph(kind: str, partner: str, labs: Sequence[str]) -> ProcessGraph:
        rest = random_process(rng, [x for x in pool if x != partner] or [partner],
                              max(1, max_nodes - 1), labels)
        offset = 1
        nodes = [PNode(kind, partner, tuple(sorted((lab, offset + rng.randrange(len(rest.nodes)))
                                                   for lab in labs)))]
        for node in rest.nodes:
            nodes.append(
                PNode(node.kind, node.partner,
                      tuple((lab, offset + t) for lab, t in node.branches))
            )
        return minimize(ProcessGraph(tuple(nodes), 0))

    return graph(OUT, receiver, out_labels), graph(IN, sender, in_labels)


def random_global(
    rng: random.Random,
    participants: Sequence[str] = ("p", "q", "r", "s"),
    max_nodes: int = 5,
    labels: Sequence[str] = LABEL_POOL,
    end_bias: float = 0.3,
) -> GlobalGraph:
    """A small random global type; may well be unbounded."""
    n = rng.randint(1, max_nodes)
    nodes = []
    for i in range(n):
        if i > 0 and rng.random() < end_bias:
            nodes.append(GNode(END, None, None, ()))
            continue
        sender, receiver = rng.sample(list(participants), 2)
        width = rng.randint(1, min(2, len(labels)))
        labs = rng.sample(list(labels), width)
        branches = tuple(sorted((lab, rng.randrange(n)) for lab in labs))
        nodes.append(GNode(COMM, sender, receiver, branches))
    return minimize_global(GlobalGraph(tuple(nodes), 0))


def random_session(
    rng: random.Random,
    max_participants: int = 4,
    max_nodes: int = 5,
    labels: Sequence[str] = LABEL_POOL,
    ready_bias: float = 0.5,
) -> Session:
    """A random session over participants drawn from p, q, r, s."""
    pool = ["p", "q", "r", "s"][: rng.randint(1, max_participants)]
    bindings = {}
    for p in pool:
        partners = [x for x in pool if x != p] or ["q" if p != "q" else "p"]
        bindings[p] = random_process(rng, partners, max_nodes, labels)
    if len(pool) >= 2 and rng.random() < ready_bias:
        sender, receiver = rng.sample(pool, 2)
        out_graph, in_graph = _plant_pair(rng, sender, receiver, pool, max_nodes, labels)
        bindings[sender] = out_graph
        bindings[receiver] = in_graph
    return normalize_session(session_of(bindings))
