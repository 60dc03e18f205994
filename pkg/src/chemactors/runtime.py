"""Minimal actor runtime with a seeded, reproducible scheduler.

Actors are spawned with an initial :class:`Behavior` and owned by an
:class:`ActorSystem`.  Each actor has an unbounded FIFO mailbox and handles
one envelope at a time; a handler may replace the behavior (``become``),
send further messages, and complete :class:`DeferredCell` replies.  Anything
a behavior does not match is either stashed (when the behavior retains that
kind, see :mod:`chemactors.chemical`) or appended to the dead-letter log;
no message is ever silently dropped.

Scheduling is explicit: ``run_until_quiescent`` repeatedly picks one ready
actor with a ``random.Random(seed)`` choice and processes a single envelope,
so a given (program, seed) pair always yields the same handling trace.
``run_free`` trades that reproducibility for a small worker-thread pool,
which is useful for stress runs.  Every processed envelope leaves exactly one
:class:`TraceStep` whose outcome is ``handled``, ``stashed`` or
``dead-letter``; stash flushes add ``flush(n)`` records.  Traces render to a
stable tab-separated text form via :func:`format_trace` / :func:`parse_trace`.
"""

from __future__ import annotations

import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .errors import DoubleCompletion

#: Kind tag carried by untyped ("raw") payloads that bypass kind declarations.
RAW_KIND = "__raw__"

HANDLED = "handled"
STASHED = "stashed"
DEAD_LETTER = "dead-letter"


@dataclass(frozen=True)
class ActorId:
    """Opaque identity of a spawned actor (name plus spawn serial)."""

    name: str
    serial: int

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Message:
    """A kind tag plus positional payload values."""

    kind: str
    args: tuple = ()

    @classmethod
    def raw(cls, value: Any) -> "Message":
        """Wrap an arbitrary value as an undeclared, kindless payload."""
        return cls(RAW_KIND, (value,))

    def summary(self) -> str:
        shown = "raw" if self.kind == RAW_KIND else self.kind
        return "%s(%s)" % (shown, ",".join(str(a) for a in self.args))


Handler = Callable[["ActorContext", Message], None]


@dataclass(frozen=True, eq=False)
class Behavior:
    """One abstract state of an actor: the kinds it currently handles.

    ``handlers`` maps kind name to a handler taking ``(ctx, message)``.
    ``retained`` is normally ``None``; the chemical layer sets it to the
    kind set that should be stashed instead of dead-lettered when unmatched.
    """

    name: str
    handlers: dict[str, Handler] = field(default_factory=dict)
    retained: frozenset[str] | None = None

    @classmethod
    def empty(cls, name: str = "empty") -> "Behavior":
        return cls(name, {})

    def matches(self, kind: str) -> bool:
        return kind in self.handlers


class DeferredCell:
    """Single-assignment result slot.

    A cell is completed at most once, with a value (``complete``) or a
    failure reason (``fail``); a second assignment raises
    :class:`DoubleCompletion`.  Observers registered before or after
    completion fire exactly once, outside the cell's lock, so an observer
    may itself send messages or complete other cells.
    """

    __slots__ = ("_lock", "_done", "_value", "_failure", "_observers")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._done = False
        self._value: Any = None
        self._failure: Any = None
        self._observers: list[tuple[Callable | None, Callable | None]] = []

    @property
    def done(self) -> bool:
        return self._done

    @property
    def failed(self) -> bool:
        return self._done and self._failure is not None

    @property
    def value(self) -> Any:
        return self._value

    @property
    def failure(self) -> Any:
        return self._failure

    def complete(self, value: Any) -> None:
        for on_value, _ in self._settle(value, None):
            if on_value is not None:
                on_value(value)

    def fail(self, reason: Any) -> None:
        for _, on_failure in self._settle(None, reason):
            if on_failure is not None:
                on_failure(reason)

    def observe(self, on_value: Callable | None = None,
                on_failure: Callable | None = None) -> None:
        with self._lock:
            if not self._done:
                self._observers.append((on_value, on_failure))
                return
            value, failure = self._value, self._failure
        if failure is None:
            if on_value is not None:
                on_value(value)
        elif on_failure is not None:
            on_failure(failure)

    def _settle(self, value: Any, failure: Any) -> list[tuple]:
        with self._lock:
            if self._done:
                raise DoubleCompletion("cell already completed")
            self._done = True
            self._value = value
            self._failure = failure
            pending, self._observers = self._observers, []
        return pending


class DeadLetterLog:
    """Append-only record of messages nobody handled or retained."""

    def __init__(self) -> None:
        self._entries: list[tuple[ActorId, Message]] = []

    def append(self, target: ActorId, message: Message) -> None:
        self._entries.append((target, message))

    def kinds(self) -> list[str]:
        return [msg.kind for _, msg in self._entries]

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)


@dataclass
class Envelope:
    """A queued delivery: target, payload, optional reply cell and an
    optional client/session label used for per-client trace projections."""

    target: ActorId
    message: Message
    reply: DeferredCell | None = None
    client: str | None = None


@dataclass(frozen=True)
class TraceStep:
    """One scheduler event, renderable as a stable tab-separated line."""

    step: int
    actor: str
    state: str
    kind: str
    outcome: str
    client: str | None = None
    summary: str | None = None

    def line(self) -> str:
        return "\t".join((
            str(self.step), self.actor, self.state, self.kind,
            self.outcome, self.client or "-", self.summary or "-",
        ))


def format_trace(steps: Iterable[TraceStep]) -> str:
    return "".join(s.line() + "\n" for s in steps)


def parse_trace_line(line: str) -> TraceStep:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 7:
        raise ValueError("trace line must have 7 tab-separated fields: %r" % line)
    step, actor, state, kind, outcome, client, summary = parts
    return TraceStep(int(step), actor, state, kind, outcome,
                     None if client == "-" else client,
                     None if summary == "-" else summary)


def parse_trace(text: str) -> list[TraceStep]:
    return [parse_trace_line(ln) for ln in text.splitlines() if ln.strip()]


def write_trace(steps: Iterable[TraceStep], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(steps))


class _ActorRecord:
    __slots__ = ("actor_id", "behavior", "mailbox", "stash", "chem_variant")

    def __init__(self, actor_id: ActorId, behavior: Behavior, chem_variant: str):
        self.actor_id = actor_id
        self.behavior = behavior
        self.mailbox: deque[Envelope] = deque()
        self.stash: deque[Envelope] = deque()
        self.chem_variant = chem_variant


class ActorContext:
    """Handler-side view of the running actor.

    A context is only valid while its handler runs; keeping one around and
    calling ``become`` later is a usage error and raises ``RuntimeError``.
    """

    def __init__(self, system: "ActorSystem", record: _ActorRecord, envelope: Envelope):
        self._system = system
        self._record = record
        self._envelope = envelope
        self._active = True

    @property
    def self_id(self) -> ActorId:
        return self._record.actor_id

    @property
    def system(self) -> "ActorSystem":
        return self._system

    @property
    def reply(self) -> DeferredCell | None:
        """Reply cell carried by the envelope being handled, if any."""
        return self._envelope.reply

    @property
    def client(self) -> str | None:
        """Client/session label carried by the envelope being handled."""
        return self._envelope.client

    def become(self, behavior: Behavior) -> None:
        """Replace the behavior; takes effect from the next envelope."""
        self._guard()
        self._record.behavior = behavior

    def send(self, target: ActorId, message: Message,
             reply: DeferredCell | None = None, client: str | None = None) -> None:
        self._guard()
        self._system.tell(target, message, reply=reply, client=client)

    def _guard(self) -> None:
        if not self._active:
            raise RuntimeError("actor context used outside its handler")

    def _chem_become(self, behavior: Behavior, variant: str | None = None) -> int:
        """Flush the stash back into the mailbox, then become.  Internal;
        the public entry point is :func:`chemactors.chemical.chem_become`."""
        self._guard()
        rec = self._record
        n = self._system._flush(rec, variant or rec.chem_variant)
        self._system._record(rec.actor_id.name, rec.behavior.name, "-",
                             "flush(%d)" % n, self._envelope.client, behavior.name)
        rec.behavior = behavior
        return n


class ActorSystem:
    """Owns actors, their mailboxes, the dead-letter log and the trace."""

    def __init__(self, seed: int | None = 0):
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._rng = random.Random(seed)
        self._records: list[_ActorRecord] = []
        self._by_id: dict[ActorId, _ActorRecord] = {}
        self._next_serial = 1
        self.dead_letters = DeadLetterLog()
        self.trace: list[TraceStep] = []

    # -- construction and sends -------------------------------------------

    def spawn(self, behavior: Behavior, name: str | None = None,
              chem_variant: str = "stash") -> ActorId:
        """Create an actor and return its id.  ``chem_variant`` picks how a
        later stash flush re-enqueues envelopes: ``stash`` prepends them in
        arrival order (the default), ``resend`` appends to the tail."""
        if chem_variant not in ("stash", "resend"):
            raise ValueError("chem_variant must be 'stash' or 'resend'")
        with self._lock:
            serial = self._next_serial
            self._next_serial += 1
            actor_id = ActorId(name or "actor-%d" % serial, serial)
            record = _ActorRecord(actor_id, behavior, chem_variant)
            self._records.append(record)
            self._by_id[actor_id] = record
        return actor_id

    def tell(self, target: ActorId, message: Message,
             reply: DeferredCell | None = None, client: str | None = None) -> None:
        """Enqueue an envelope; never blocks and never drops."""
        with self._cond:
            record = self._by_id.get(target)
            if record is None:
                raise KeyError("unknown actor: %s" % (target,))
            record.mailbox.append(Envelope(target, message, reply, client))
            self._cond.notify_all()

    # -- observation -------------------------------------------------------

    def behavior_name(self, target: ActorId) -> str:
        return self._by_id[target].behavior.name

    def enabled_kinds(self, target: ActorId) -> frozenset[str]:
        """Kinds the actor's current behavior would handle right now."""
        return frozenset(self._by_id[target].behavior.handlers)

    def stash_size(self, target: ActorId) -> int:
        return len(self._by_id[target].stash)

    def stashed_kinds(self, target: ActorId) -> list[str]:
        return [env.message.kind for env in self._by_id[target].stash]

    def pending_messages(self) -> int:
        with self._lock:
            return sum(len(r.mailbox) for r in self._records)

    # -- deterministic execution -------------------------------------------

    def run_until_quiescent(self, max_steps: int = 10_000) -> list[TraceStep]:
        """Process envelopes until no actor has mail, or the budget runs out.

        Returns the slice of the trace produced by this call.  When the
        budget runs out with mail still pending, the caller can see that via
        :meth:`pending_messages`.
        """
        start = len(self.trace)
        for _ in range(max_steps):
            if not self._one_step():
                break
        return self.trace[start:]

    def _one_step(self) -> bool:
        with self._lock:
            ready = [r for r in self._records if r.mailbox]
            if not ready:
                return False
            record = ready[self._rng.randrange(len(ready))]
            envelope = record.mailbox.popleft()
        self._process(record, envelope)
        return True

    # -- free (parallel) execution ------------------------------------------

    def run_free(self, max_steps: int = 100_000, workers: int = 4) -> list[TraceStep]:
        """Like ``run_until_quiescent`` but with a worker-thread pool and no
        seeded choice; ordering between actors is whatever the threads make
        of it, while per-actor serialization still holds."""
        start = len(self.trace)
        budget = [max_steps]
        active: set[int] = set()
        free_rng = random.Random()
        failures: list[BaseException] = []

        def loop() -> None:
            while True:
                with self._cond:
                    record = None
                    while record is None:
                        if budget[0] <= 0 or failures:
                            return
                        ready = [r for r in self._records
                                 if r.mailbox and r.actor_id.serial not in active]
                        if ready:
                            record = ready[free_rng.randrange(len(ready))]
                        elif not active:
                            return
                        else:
                            self._cond.wait(0.005)
                    budget[0] -= 1
                    active.add(record.actor_id.serial)
                    envelope = record.mailbox.popleft()
                try:
                    self._process(record, envelope)
                except BaseException as exc:  # surface after join
                    with self._cond:
                        failures.append(exc)
                finally:
                    with self._cond:
                        active.discard(record.actor_id.serial)
                        self._cond.notify_all()

        threads = [threading.Thread(target=loop, daemon=True) for _ in range(workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if failures:
            raise failures[0]
        return self.trace[start:]

    # -- internals -----------------------------------------------------------

    def _process(self, record: _ActorRecord, envelope: Envelope) -> None:
        behavior = record.behavior
        kind = envelope.message.kind
        handler = behavior.handlers.get(kind)
        if handler is not None:
            self._record(record.actor_id.name, behavior.name, kind, HANDLED,
                         envelope.client, envelope.message.summary())
            ctx = ActorContext(self, record, envelope)
            try:
                handler(ctx, envelope.message)
            finally:
                ctx._active = False
        elif behavior.retained is not None and kind in behavior.retained:
            record.stash.append(envelope)
            self._record(record.actor_id.name, behavior.name, kind, STASHED,
                         envelope.client, envelope.message.summary())
        else:
            with self._lock:
                self.dead_letters.append(record.actor_id, envelope.message)
            self._record(record.actor_id.name, behavior.name, kind, DEAD_LETTER,
                         envelope.client, envelope.message.summary())

    def _flush(self, record: _ActorRecord, variant: str) -> int:
        with self._cond:
            n = len(record.stash)
            if variant == "resend":
                record.mailbox.extend(record.stash)
            else:
                record.mailbox.extendleft(reversed(record.stash))
            record.stash.clear()
            if n:
                self._cond.notify_all()
        return n

    def _record(self, actor: str, state: str, kind: str, outcome: str,
                client: str | None, summary: str | None) -> TraceStep:
        with self._lock:
            step = TraceStep(len(self.trace), actor, state, kind, outcome,
                             client, summary)
            self.trace.append(step)
        return step
