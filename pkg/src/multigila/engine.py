"""Superstep-synchronous vertex-centric execution engine.

A :class:`VertexProgram` is executed over a :class:`~multigila.graph.Graph`
in rounds (supersteps).  Messages sent during superstep ``t`` become visible
in the target's inbox at ``t + 1``; vertices may only address direct
neighbours.  Longer routes are expressed with an explicit :class:`TwoHop`
envelope that the relaying vertex forwards itself.

With ``num_workers > 1`` each worker is a forked process that owns one
vertex partition for the whole run.  Messages between partitions cross the
barrier through the coordinating process.  Inboxes are ordered by sender
id (stable in emission order), so results do not depend on the number of
workers.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import multiprocessing as mp
import random
import traceback
from collections import defaultdict
from dataclasses import dataclass, field
from operator import itemgetter
from typing import Any, Callable, Iterable, Mapping

_by_sender = itemgetter(0)
_EMPTY: list = []


class EngineError(Exception):
    pass


class MessageToNonNeighbor(EngineError):
    def __init__(self, sender: int, target: int, superstep: int):
        super().__init__(sender, target, superstep)
        self.sender = sender
        self.target = target
        self.superstep = superstep

    def __str__(self) -> str:
        return (
            f"vertex {self.sender} sent a message to non-neighbour {self.target} "
            f"in superstep {self.superstep}"
        )


class SuperstepCapExceeded(EngineError):
    """Run hit ``max_supersteps``; the partial result is attached."""

    def __init__(self, final_state: dict, stats: "RunStats"):
        super().__init__(stats.supersteps_executed)
        self.final_state = final_state
        self.stats = stats

    def __str__(self) -> str:
        return f"superstep cap reached after {self.stats.supersteps_executed} supersteps"


class WorkerFailure(EngineError):
    pass


@dataclass(frozen=True, slots=True)
class TwoHop:
    """Envelope for a payload routed through one intermediate neighbour."""

    final: int
    payload: Any

    def words(self) -> int:
        return 1 + semantic_words(self.payload)


def semantic_words(obj: Any) -> int:
    """Size of a message or state in scalar words (ids, coordinates, flags)."""
    words = getattr(obj, "words", None)
    if words is not None and callable(words):
        return words()
    if obj is None or isinstance(obj, (int, float, str, bool)):
        return 1
    if isinstance(obj, (tuple, list, set, frozenset)):
        return sum(semantic_words(x) for x in obj)
    if isinstance(obj, dict):
        return sum(semantic_words(k) + semantic_words(v) for k, v in obj.items())
    if dataclasses.is_dataclass(obj):
        return sum(semantic_words(getattr(obj, f.name)) for f in dataclasses.fields(obj))
    return 1


WORD_BYTES = 8


def derive_seed(seed: int, *tags: Any) -> int:
    """Deterministic 64-bit sub-seed for a phase/level/round."""
    key = "/".join([str(seed), *map(str, tags)]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


@dataclass
class EngineConfig:
    num_workers: int = 1
    max_supersteps: int = 10_000
    partition_map: Mapping[int, int] | None = None
    seed: int = 0
    shuffle_inboxes: bool = False
    track_state: bool = True

    def __post_init__(self) -> None:
        if self.num_workers < 1:
            raise ValueError("num_workers must be >= 1")
        if self.max_supersteps < 1:
            raise ValueError("max_supersteps must be >= 1")

    def worker_of(self, vertex: int) -> int:
        if self.partition_map is None:
            return vertex % self.num_workers
        return self.partition_map[vertex] % self.num_workers


@dataclass
class RunStats:
    supersteps_executed: int = 0
    messages_per_superstep: list[int] = field(default_factory=list)
    bytes_per_superstep: list[int] = field(default_factory=list)
    max_state_words: list[int] = field(default_factory=list)
    capped: bool = False

    @property
    def total_messages(self) -> int:
        return sum(self.messages_per_superstep)

    def merge(self, other: "RunStats") -> None:
        """Accumulate another run's counters (used for pipeline totals)."""
        self.supersteps_executed += other.supersteps_executed
        self.messages_per_superstep.extend(other.messages_per_superstep)
        self.bytes_per_superstep.extend(other.bytes_per_superstep)
        self.max_state_words.extend(other.max_state_words)
        self.capped = self.capped or other.capped


class VertexProgram:
    """Base class for vertex programs.

    Subclasses implement :meth:`compute`.  ``aggregators`` maps aggregate
    names to one of ``"sum"``, ``"min"``, ``"max"``; values written with
    :meth:`Context.aggregate` in superstep ``t`` are readable through
    ``ctx.aggregates`` in ``t + 1``.
    """

    aggregators: dict[str, str] = {}

    def compute(self, ctx: "Context") -> None:
        raise NotImplementedError

    # optional per-target combiner over the (sender, payload) inbox; returns
    # the reduced list in the same form
    combine: Callable[[int, list], list] | None = None

    def message_words(self, msg: Any) -> int:
        return semantic_words(msg)

    def state_words(self, state: Any) -> int:
        return semantic_words(state)


class Context:
    """Per-vertex view handed to :meth:`VertexProgram.compute`.

    ``inbox`` is a list of ``(sender, payload)`` pairs ordered by sender id
    and, per sender, by emission order.  ``state`` may be mutated in place
    or reassigned.
    """

    __slots__ = (
        "superstep", "vertex_id", "inbox", "state", "aggregates", "neighbors",
        "_halt", "_worker", "_seed",
    )

    def __init__(self, worker: "_Worker", seed: int):
        self._worker = worker
        self._seed = seed
        self.superstep = 0
        self.vertex_id = 0
        self.inbox: list = _EMPTY
        self.state: Any = None
        self.aggregates: Mapping[str, Any] = {}
        self.neighbors: Mapping[int, float] = {}
        self._halt = False

    @property
    def active(self) -> bool:
        return not self._halt

    @property
    def messages(self) -> list:
        return [m for _, m in self.inbox]

    def send(self, target: int, msg: Any) -> None:
        if target not in self.neighbors:
            raise MessageToNonNeighbor(self.vertex_id, target, self.superstep)
        self._worker.emit(self.vertex_id, target, msg)

    def send_to_neighbors(self, msg: Any) -> None:
        self._worker.emit_all(self.vertex_id, self.neighbors, msg)

    def send_two_hop(self, via: int, final: int, payload: Any) -> None:
        """Route ``payload`` to ``final`` through neighbour ``via``."""
        self.send(via, TwoHop(final, payload))

    def vote_to_halt(self) -> None:
        self._halt = True

    def aggregate(self, name: str, value: Any) -> None:
        self._worker.aggregate(name, value)

    def random(self, *tags: Any) -> random.Random:
        return random.Random(f"{self._seed}/{self.vertex_id}/{self.superstep}/{tags}")


def relay_two_hop(ctx: Context) -> list:
    """Forward envelopes meant for others; return ``(sender, payload)`` for this vertex.

    Envelopes addressed to this vertex are unwrapped, other messages pass
    through unchanged.
    """
    mine = []
    for sender, msg in ctx.inbox:
        if type(msg) is TwoHop:
            if msg.final == ctx.vertex_id:
                mine.append((sender, msg.payload))
            else:
                ctx.send(msg.final, msg.payload)
        else:
            mine.append((sender, msg))
    return mine


class _Worker:
    """Executes one vertex partition."""

    def __init__(self, graph, program: VertexProgram, states: dict, vertices: list[int],
                 config: EngineConfig, local: Callable[[int], bool]):
        self.adj = graph.adj
        self.program = program
        self.states = states
        self.vertices = vertices
        self.config = config
        self.is_local = local
        self.halted: set[int] = set()
        self.inbox: dict[int, list] = {}
        self.ctx = Context(self, config.seed)
        self._reset_outbox()
        self.words = program.message_words
        self.state_words = program.state_words

    def _reset_outbox(self) -> None:
        self.next_inbox: dict[int, list] = defaultdict(list)
        self.remote: list = []
        self.sent = 0
        self.sent_words = 0
        self.agg_partial: dict[str, Any] = {}

    def emit(self, sender: int, target: int, msg: Any) -> None:
        self.sent += 1
        self.sent_words += self.words(msg)
        if self.is_local(target):
            self.next_inbox[target].append((sender, msg))
        else:
            self.remote.append((target, sender, msg))

    def emit_all(self, sender: int, targets: Iterable[int], msg: Any) -> None:
        n = len(targets)
        if not n:
            return
        self.sent += n
        self.sent_words += n * self.words(msg)
        nxt = self.next_inbox
        local = self.is_local
        item = (sender, msg)
        for t in targets:
            if local(t):
                nxt[t].append(item)
            else:
                self.remote.append((t, sender, msg))

    def aggregate(self, name: str, value: Any) -> None:
        kind = self.program.aggregators[name]
        part = self.agg_partial
        if kind == "sum":
            part.setdefault(name, []).append(value)
        elif name not in part:
            part[name] = value
        elif kind == "min":
            part[name] = min(part[name], value)
        elif kind == "max":
            part[name] = max(part[name], value)
        else:
            raise ValueError(f"unknown aggregator kind {kind!r}")

    def deliver(self, incoming: list) -> None:
        """Merge cross-partition messages into the pending inbox."""
        if not incoming:
            return
        touched = set()
        nxt = self.inbox
        for target, sender, msg in incoming:
            nxt.setdefault(target, []).append((sender, msg))
            touched.add(target)
        for t in touched:
            nxt[t].sort(key=_by_sender)

    def superstep(self, step: int, aggregates: Mapping[str, Any]) -> None:
        self._reset_outbox()
        ctx = self.ctx
        ctx.superstep = step
        ctx.aggregates = aggregates
        program = self.program
        states = self.states
        inbox = self.inbox
        halted = self.halted
        adj = self.adj
        shuffle = self.config.shuffle_inboxes
        track = self.config.track_state
        combine = program.combine
        max_words = 0
        for v in self.vertices:
            msgs = inbox.pop(v, _EMPTY)
            if v in halted:
                if not msgs:
                    continue
                halted.discard(v)
            if combine is not None and msgs:
                msgs = combine(v, msgs)
            if shuffle and len(msgs) > 1:
                random.Random(f"{self.config.seed}/shuffle/{step}/{v}").shuffle(msgs)
            ctx.vertex_id = v
            ctx.inbox = msgs
            ctx.state = states[v]
            ctx.neighbors = adj[v]
            ctx._halt = False
            program.compute(ctx)
            states[v] = ctx.state
            if ctx._halt:
                halted.add(v)
            if track:
                w = self.state_words(ctx.state)
                if w > max_words:
                    max_words = w
        self.max_words = max_words
        self.inbox = dict(self.next_inbox)

    def quiescent(self) -> bool:
        return not self.inbox and len(self.halted) == len(self.vertices)


def _reduce_aggregates(program: VertexProgram, partials: list[dict]) -> dict:
    out: dict[str, Any] = {}
    for name, kind in program.aggregators.items():
        vals = [p[name] for p in partials if name in p]
        if not vals:
            continue
        if kind == "sum":
            flat = [x for chunk in vals for x in chunk]
            if all(isinstance(x, int) for x in flat):
                out[name] = sum(flat)
            else:
                # exactly rounded, so independent of partition order
                out[name] = math.fsum(flat)
        elif kind == "min":
            out[name] = min(vals)
        else:
            out[name] = max(vals)
    return out


def run(graph, program: VertexProgram, init_state: Mapping[int, Any],
        config: EngineConfig | None = None) -> tuple[dict, RunStats]:
    """Execute ``program`` until every vertex halted with an empty inbox.

    Raises :class:`SuperstepCapExceeded` (carrying the partial state) when
    ``config.max_supersteps`` is reached first.
    """
    config = config or EngineConfig()
    if not graph.adj:
        raise ValueError("graph is empty")
    missing = [v for v in graph.adj if v not in init_state]
    if missing:
        raise ValueError(f"init_state lacks vertices, e.g. {missing[:5]}")
    if config.partition_map is not None:
        uncovered = [v for v in graph.adj if v not in config.partition_map]
        if uncovered:
            raise ValueError(f"partition_map lacks vertices, e.g. {uncovered[:5]}")
    workers = min(config.num_workers, len(graph.adj))
    if workers == 1:
        return _run_serial(graph, program, init_state, config)
    return _run_forked(graph, program, init_state, config)


def _run_serial(graph, program, init_state, config):
    states = dict(init_state)
    worker = _Worker(graph, program, states, graph.vertex_ids, config, lambda v: True)
    stats = RunStats()
    aggregates: dict = {}
    step = 0
    while True:
        if step > 0 and worker.quiescent():
            break
        if step >= config.max_supersteps:
            stats.capped = True
            break
        worker.superstep(step, aggregates)
        aggregates = _reduce_aggregates(program, [worker.agg_partial])
        stats.messages_per_superstep.append(worker.sent)
        stats.bytes_per_superstep.append(worker.sent_words * WORD_BYTES)
        stats.max_state_words.append(worker.max_words)
        step += 1
    stats.supersteps_executed = step
    if stats.capped:
        raise SuperstepCapExceeded(states, stats)
    return states, stats


def _worker_main(conn, graph, program, init_state, config, index, owner):
    try:
        verts = [v for v in graph.vertex_ids if owner[v] == index]
        states = {v: init_state[v] for v in verts}
        worker = _Worker(graph, program, states, verts, config,
                         lambda v: owner[v] == index)
        while True:
            cmd = conn.recv()
            if cmd[0] == "step":
                _, step, aggregates, incoming = cmd
                worker.deliver(incoming)
                worker.superstep(step, aggregates)
                outgoing: dict[int, list] = defaultdict(list)
                for msg in worker.remote:
                    outgoing[owner[msg[0]]].append(msg)
                conn.send((
                    "ok", dict(outgoing), worker.sent, worker.sent_words,
                    worker.agg_partial, worker.max_words, worker.quiescent(),
                ))
            elif cmd[0] == "finish":
                conn.send(("states", worker.states))
                break
    except BaseException as exc:  # report and exit; parent re-raises
        try:
            conn.send(("error", exc, traceback.format_exc()))
        except Exception:
            conn.send(("error", WorkerFailure(repr(exc)), traceback.format_exc()))
    finally:
        conn.close()


def _run_forked(graph, program, init_state, config):
    ctx = mp.get_context("fork")
    n = config.num_workers
    owner = {v: config.worker_of(v) for v in graph.vertex_ids}
    conns, procs = [], []
    for i in range(n):
        parent, child = ctx.Pipe()
        p = ctx.Process(target=_worker_main,
                        args=(child, graph, program, init_state, config, i, owner),
                        daemon=True)
        p.start()
        child.close()
        conns.append(parent)
        procs.append(p)

    def recv(conn):
        reply = conn.recv()
        if reply[0] == "error":
            raise reply[1]
        return reply

    stats = RunStats()
    aggregates: dict = {}
    pending: list[list] = [[] for _ in range(n)]
    quiet = [False] * n
    step = 0
    try:
        while True:
            if step > 0 and all(quiet) and not any(pending):
                break
            if step >= config.max_supersteps:
                stats.capped = True
                break
            for i, conn in enumerate(conns):
                conn.send(("step", step, aggregates, pending[i]))
            pending = [[] for _ in range(n)]
            sent = words = max_words = 0
            partials = []
            for i, conn in enumerate(conns):
                _, outgoing, s, w, part, mw, q = recv(conn)
                for dest, msgs in outgoing.items():
                    pending[dest].extend(msgs)
                sent += s
                words += w
                partials.append(part)
                max_words = max(max_words, mw)
                quiet[i] = q
            aggregates = _reduce_aggregates(program, partials)
            stats.messages_per_superstep.append(sent)
            stats.bytes_per_superstep.append(words * WORD_BYTES)
            stats.max_state_words.append(max_words)
            step += 1
        stats.supersteps_executed = step
        states: dict = {}
        for conn in conns:
            conn.send(("finish",))
        for conn in conns:
            states.update(recv(conn)[1])
    finally:
        for conn in conns:
            conn.close()
        for p in procs:
            p.join(timeout=5)
            if p.is_alive():
                p.kill()
    # restore the caller's vertex order
    states = {v: states[v] for v in graph.vertex_ids}
    if stats.capped:
        raise SuperstepCapExceeded(states, stats)
    return states, stats
