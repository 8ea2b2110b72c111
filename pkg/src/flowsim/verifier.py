"""Explicit-state model of the flow-sensor workflow and a response-property checker.

The workflow is a finite labelled transition system. A run is an infinite
sequence of *steps* ``(state, label)`` where ``label`` names the transition
taken out of ``state``; predicates are evaluated on steps, which lets a
property talk about the choice made in a state (keep vs. drop) as well as
the state itself.

:func:`check_response` decides ``G(p -> F q)`` by searching the product of the
model with a one-bit monitor ("an obligation is pending") for a reachable
cycle on which the obligation stays pending. That search is sound and
complete for finite models and returns a lasso witness on failure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .errors import InvalidModelError

RECEIVE = "Receive_pkt"
MATCH = "Match_pkt"
DROP = "Drop"
TRANSLATION = "Translation"
SEND = "Send_pkt"
CACHE = "Add_cache"


def task_alloc(i: int) -> str:
    return f"TaskAlloc({i})"


def is_task_alloc(state: str) -> bool:
    return state.startswith("TaskAlloc(")


class Transition(NamedTuple):
    src: str
    label: str
    dst: str


class Step(NamedTuple):
    state: str
    label: str


@dataclass(frozen=True)
class WfModel:
    n_tasks: int
    transitions: tuple[Transition, ...]
    initial: str = RECEIVE
    extra_states: frozenset[str] = frozenset()

    @property
    def states(self) -> frozenset[str]:
        found = {self.initial, *self.extra_states}
        for t in self.transitions:
            found.update((t.src, t.dst))
        return frozenset(found)

    def outgoing(self, state: str) -> list[Transition]:
        return [t for t in self.transitions if t.src == state]

    def is_complete(self) -> bool:
        return all(self.outgoing(s) for s in self.states)

    def without(self, edge: Transition) -> WfModel:
        """Drop one transition; a state left without exits gets a self-loop."""
        kept = [t for t in self.transitions if t != edge]
        if not any(t.src == edge.src for t in kept):
            kept.append(Transition(edge.src, "stall", edge.src))
        return WfModel(self.n_tasks, tuple(kept), self.initial, self.states)


def build_reference_model(n_tasks: int) -> WfModel:
    if n_tasks < 1:
        raise InvalidModelError(f"n_tasks must be >= 1, got {n_tasks}")
    ts = [
        Transition(RECEIVE, "drop", DROP),
        Transition(RECEIVE, "keep", MATCH),
        Transition(MATCH, "match", TRANSLATION),
    ]
    for i in range(1, n_tasks + 1):
        ts.append(Transition(TRANSLATION, f"task{i}", task_alloc(i)))
    for i in range(1, n_tasks + 1):
        ts.append(Transition(task_alloc(i), "send", SEND))
    ts += [
        Transition(SEND, "ack", CACHE),
        Transition(SEND, "data", TRANSLATION),
        Transition(DROP, "recv", RECEIVE),
        Transition(CACHE, "recv", RECEIVE),
    ]
    return WfModel(n_tasks, tuple(ts))


StepPredicate = Callable[[str, str], bool]


@dataclass(frozen=True)
class LtlResponse:
    """``G(trigger -> F response)`` over steps."""

    name: str
    trigger: StepPredicate
    response: StepPredicate
    text: str = ""


LTL1 = LtlResponse(
    "LTL1",
    lambda s, label: s == RECEIVE and label != "drop",
    lambda s, label: s == MATCH,
    "G((Receive_pkt & !drop) -> F Match_pkt)",
)
LTL2 = LtlResponse(
    "LTL2",
    lambda s, label: s == TRANSLATION,
    lambda s, label: is_task_alloc(s),
    "G(Translation -> F (TaskAlloc(1) | ... | TaskAlloc(n)))",
)
LTL3 = LtlResponse(
    "LTL3",
    lambda s, label: s == SEND,
    lambda s, label: s in (CACHE, TRANSLATION),
    "G((Send_pkt & !Drop) -> F (Add_cache | Translation))",
)
PROPERTIES = (LTL1, LTL2, LTL3)


@dataclass(frozen=True)
class Counterexample:
    prefix: tuple[Step, ...]
    cycle: tuple[Step, ...]
    property_name: str = ""

    def format(self) -> str:
        lines = [f"counterexample: {self.property_name}", "prefix:"]
        lines += [f"  {s.state} [{s.label}]" for s in self.prefix]
        lines.append("cycle:")
        lines += [f"  {s.state} [{s.label}]" for s in self.cycle]
        return "\n".join(lines) + "\n"


def enumerate_states(model: WfModel) -> set[str]:
    seen = {model.initial}
    queue = deque([model.initial])
    while queue:
        s = queue.popleft()
        for t in model.outgoing(s):
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    return seen


def _pending(t: Transition, before: bool, prop: LtlResponse) -> bool:
    return (before or prop.trigger(t.src, t.label)) and not prop.response(t.src, t.label)


def check_response(model: WfModel, prop: LtlResponse) -> Counterexample | None:
    """Return ``None`` when ``prop`` holds on every run, otherwise a lasso."""
    if not model.is_complete():
        raise InvalidModelError("model has a state without outgoing transitions")
    out = {s: model.outgoing(s) for s in model.states}

    def succ(node: tuple[Transition, bool]) -> list[tuple[Transition, bool]]:
        t, pend = node
        return [(u, _pending(u, pend, prop)) for u in out[t.dst]]

    starts = [(t, _pending(t, False, prop)) for t in out[model.initial]]
    parent: dict[tuple[Transition, bool], tuple[Transition, bool] | None] = {}
    queue: deque = deque()
    for s in starts:
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        node = queue.popleft()
        for nxt in succ(node):
            if nxt not in parent:
                parent[nxt] = node
                queue.append(nxt)

    pending_nodes = [n for n in parent if n[1]]
    cyclic = _nodes_on_cycles(pending_nodes, lambda n: [m for m in succ(n) if m[1]])
    if not cyclic:
        return None

    # shortest prefix: BFS order of ``parent`` insertion reaches cyclic nodes early
    entry = next(n for n in parent if n in cyclic)
    prefix_nodes = []
    n = parent[entry]
    while n is not None:
        prefix_nodes.append(n)
        n = parent[n]
    prefix_nodes.reverse()
    cycle_nodes = _cycle_through(entry, lambda n: [m for m in succ(n) if m in cyclic])
    return Counterexample(
        tuple(Step(t.src, t.label) for t, _ in prefix_nodes),
        tuple(Step(t.src, t.label) for t, _ in cycle_nodes),
        prop.name,
    )


def _nodes_on_cycles(nodes, succ) -> set:
    """Nodes lying on some cycle of the graph induced on ``nodes`` (Tarjan SCC)."""
    node_set = set(nodes)
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    result: set = set()
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in node_set:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1 or v in succ(v):
                    result.update(comp)
    return result


def _cycle_through(start, succ) -> list:
    """Shortest cycle from ``start`` back to itself, as the list of nodes visited."""
    parent = {}
    queue = deque()
    for m in succ(start):
        if m == start:
            return [start]
        if m not in parent:
            parent[m] = start
            queue.append(m)
    while queue:
        n = queue.popleft()
        for m in succ(n):
            if m == start:
                path = [n]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                return list(reversed(path))
            if m not in parent:
                parent[m] = n
                queue.append(m)
    raise AssertionError("start is not on a cycle")


def replay(model: WfModel, cex: Counterexample) -> bool:
    """True iff ``cex`` is a real run of ``model`` (labels and closure check out)."""
    steps = [*cex.prefix, *cex.cycle]
    if not cex.cycle or steps[0].state != model.initial:
        return False
    edges = {(t.src, t.label): set() for t in model.transitions}
    for t in model.transitions:
        edges[(t.src, t.label)].add(t.dst)
    nxt_states = [s.state for s in steps[1:]] + [cex.cycle[0].state]
    return all(nxt in edges.get((s.state, s.label), ()) for s, nxt in zip(steps, nxt_states))


def violates(prop: LtlResponse, prefix: Iterable[Step], cycle: Iterable[Step]) -> bool:
    """Evaluate ``G(p -> F q)`` on the infinite word ``prefix cycle cycle ...``."""
    prefix, cycle = list(prefix), list(cycle)
    if any(prop.response(*s) for s in cycle):
        return False
    if any(prop.trigger(*s) for s in cycle):
        return True
    for i, s in enumerate(prefix):
        if prop.trigger(*s) and not any(prop.response(*r) for r in prefix[i:]):
            return True
    return False


def _replace(model: WfModel, drop: Callable[[Transition], bool], add: Iterable[Transition]) -> WfModel:
    kept = tuple(t for t in model.transitions if not drop(t)) + tuple(add)
    return WfModel(model.n_tasks, kept, model.initial, model.states)


MUTANTS: dict[str, Callable[[WfModel], WfModel]] = {
    # translation never allocates a task and spins instead
    "drop-translation-edge": lambda m: _replace(
        m, lambda t: t.src == TRANSLATION, [Transition(TRANSLATION, "spin", TRANSLATION)]
    ),
    # a kept packet goes back to waiting instead of being matched
    "drop-match-edge": lambda m: _replace(
        m, lambda t: t.src == RECEIVE and t.label == "keep", [Transition(RECEIVE, "keep", RECEIVE)]
    ),
    # the sender retries forever instead of caching or translating
    "drop-send-branches": lambda m: _replace(
        m, lambda t: t.src == SEND, [Transition(SEND, "retry", SEND)]
    ),
    # no drop decision; the Drop state becomes unreachable
    "no-drop": lambda m: _replace(m, lambda t: t.src == RECEIVE and t.label == "drop", []),
}


def mutate(model: WfModel, name: str) -> WfModel:
    try:
        return MUTANTS[name](model)
    except KeyError:
        raise InvalidModelError(f"unknown mutant {name!r}; choose from {sorted(MUTANTS)}") from None


def allocation_coverage(model: WfModel) -> dict[int, bool]:
    """Which task allocations F1..Fn are reachable."""
    reach = enumerate_states(model)
    return {i: task_alloc(i) in reach for i in range(1, model.n_tasks + 1)}
