"""Executable demonstration scenarios and their reports.

Four scenarios exercise the stack end to end, all built from the packaged
protocol documents and the public library surface:

``buffer-untyped``
    A one-place buffer behind a raw actor id.  The fixed send sequence
    includes one ``insert`` against a full buffer and one raw (kindless)
    payload; both end in the dead-letter log, everything else is handled.

``buffer-single``
    The same buffer behind protocol references.  A single client walks
    ``insert 0 / remove / insert 2 / remove / insert 4 / remove`` as a chain
    of continuations, coercing each resolved reference to the state the
    session expects, and flags END when the chain finishes.

``buffer-pc``
    The chemical buffer: unmatched ``insert``/``remove`` messages are
    stashed and replayed at each state change, so concurrent producer and
    consumer sessions interleave safely.  Each producer inserts
    ``0, 10, 20, ...`` (``items`` values), each consumer issues
    ``items - 1`` removes.

``bookshop``
    A shop actor serving several user sessions
    (add/book/add/book/checkout/card/address).  The ``serialize-users``
    policy retains only ``add`` and re-enters the ready state with a plain
    behavior switch mid-session, so one user is served start to finish; the
    ``interleave-init`` policy also retains ``checkout`` and flushes the
    stash at every return to the ready state, so sessions interleave there.

Client sessions run as tiny driver actors: resolving a continuation posts a
``resume`` message back to the driver's own mailbox, so the seeded scheduler
interleaves clients and the buffer exactly like any other actors.  Every
conformance verdict comes from :func:`chemactors.protocol_spec.check_trace`
over the recorded trace; nothing is re-judged by ad-hoc logic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources

from .chemical import chem_become, chem_react
from .errors import BudgetExhausted, ChemactorsError
from .protocol import (Continuation, ProtRef, ProtocolTable, expect_state,
                       resolve_continuation)
from .protocol_spec import (ProtocolSpec, check_trace, derive_client_table,
                            handled_events, load_spec_file, split_by_client)
from .runtime import (ActorSystem, Behavior, DEAD_LETTER, HANDLED, Message,
                      STASHED, TraceStep, format_trace)
from .typed_refs import InterfaceId, MessageKind

SCENARIOS = ("buffer-untyped", "buffer-single", "buffer-pc", "bookshop")
POLICIES = ("serialize-users", "interleave-init")
CHEMICAL_VARIANTS = ("stash", "resend")
MODES = ("deterministic", "free")
CORRUPTIONS = ("double-remove", "reuse-initial", "skip-card")

#: Default bookshop users: (name, first title, second title, card, address).
DEFAULT_USERS = (
    ("Mary", "Pride and Prejudice", "Odissea", "1234", "Padua"),
    ("Jane", "Ben Hur", "Pinocchio", "1212", "Venice"),
    ("Alice", "Java8", "Scala", "8888", "NewYork"),
)

_BUILTIN_SPECS = {
    "buffer-single": "buffer_single.json",
    "buffer-pc": "buffer_pc.json",
    "bookshop": "bookshop.json",
}

_RESUME = MessageKind("resume", ("ref",))


def builtin_spec_names() -> tuple[str, ...]:
    return tuple(_BUILTIN_SPECS)


def spec_path(name: str) -> str:
    """Filesystem path of a packaged protocol document."""
    try:
        fname = _BUILTIN_SPECS[name]
    except KeyError:
        raise KeyError("no built-in document %r (have %s)"
                       % (name, ", ".join(_BUILTIN_SPECS))) from None
    return str(resources.files(__package__).joinpath("specs", fname))


def load_builtin(name: str) -> ProtocolSpec:
    return load_spec_file(spec_path(name))


# ---------------------------------------------------------------------------
# configuration and report
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 0
    producers: int = 1
    consumers: int = 2
    items: int = 5
    users: int = 3
    policy: str = "serialize-users"
    chemical_variant: str = "stash"
    affine: bool = True
    max_steps: int = 10_000
    mode: str = "deterministic"
    corrupt: str | None = None

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError("unknown scenario %r (have %s)"
                             % (self.scenario, ", ".join(SCENARIOS)))
        if self.policy not in POLICIES:
            raise ValueError("unknown policy %r" % self.policy)
        if self.chemical_variant not in CHEMICAL_VARIANTS:
            raise ValueError("unknown chemical variant %r" % self.chemical_variant)
        if self.mode not in MODES:
            raise ValueError("unknown mode %r" % self.mode)
        for name in ("producers", "consumers", "items", "users"):
            if getattr(self, name) < 1:
                raise ValueError("%s must be at least 1" % name)
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.corrupt is not None:
            if self.corrupt not in CORRUPTIONS:
                raise ValueError("unknown corruption %r" % self.corrupt)
            wanted = "bookshop" if self.corrupt == "skip-card" else "buffer-single"
            if self.scenario != wanted:
                raise ValueError("corruption %r only applies to the %s scenario"
                                 % (self.corrupt, wanted))


@dataclass
class TraceReport:
    """Everything a scenario run leaves behind."""

    scenario: str
    seed: int
    steps: list[TraceStep]
    dead_letters: int
    dead_letter_kinds: list[str]
    stash_count: int
    flush_events: list[tuple[int, int]]
    completions: dict[str, bool]
    verdicts: dict[str, str]
    final_states: dict[str, str]
    errors: list[str] = field(default_factory=list)
    removed_values: list = field(default_factory=list)
    basket: dict | None = None

    def all_ok(self) -> bool:
        return not self.errors and all(v == "OK" for v in self.verdicts.values())

    def trace_text(self) -> str:
        return format_trace(self.steps)

    def summary_lines(self) -> list[str]:
        handled = sum(1 for s in self.steps if s.outcome == HANDLED)
        lines = [
            "scenario %s (seed %d): %d trace records, %d handled, %d stashed, "
            "%d dead-letter, %d flushes"
            % (self.scenario, self.seed, len(self.steps), handled,
               self.stash_count, self.dead_letters, len(self.flush_events)),
            "final states: " + (", ".join("%s=%s" % kv for kv in self.final_states.items()) or "-"),
        ]
        if self.completions:
            lines.append("sessions complete: " + ", ".join(
                "%s=%s" % (k, "yes" if v else "no") for k, v in self.completions.items()))
        if self.removed_values:
            lines.append("removed values: " + ",".join(str(v) for v in self.removed_values))
        if self.basket is not None:
            lines.append("basket left over: %s" % (self.basket or "{}"))
        for name, verdict in self.verdicts.items():
            lines.append("verdict %s: %s" % (name, verdict))
        for err in self.errors:
            lines.append("error: %s" % err)
        return lines


def _flush_events(steps: list[TraceStep]) -> list[tuple[int, int]]:
    events = []
    for s in steps:
        if s.outcome.startswith("flush(") and s.outcome.endswith(")"):
            events.append((s.step, int(s.outcome[6:-1])))
    return events


def _base_report(config: ScenarioConfig, system: ActorSystem,
                 steps: list[TraceStep]) -> TraceReport:
    return TraceReport(
        scenario=config.scenario,
        seed=config.seed,
        steps=steps,
        dead_letters=len(system.dead_letters),
        dead_letter_kinds=system.dead_letters.kinds(),
        stash_count=sum(1 for s in steps if s.outcome == STASHED),
        flush_events=_flush_events(steps),
        completions={},
        verdicts={},
        final_states={},
    )


def _run(system: ActorSystem, config: ScenarioConfig) -> list[TraceStep]:
    if config.mode == "free":
        steps = system.run_free(config.max_steps)
    else:
        steps = system.run_until_quiescent(config.max_steps)
    if system.pending_messages():
        raise BudgetExhausted(
            "scenario %r still had %d pending message(s) after %d steps"
            % (config.scenario, system.pending_messages(), config.max_steps))
    return steps


# ---------------------------------------------------------------------------
# session drivers
# ---------------------------------------------------------------------------

@dataclass
class SessionStep:
    """One client step: the message to send, an optional deliberate state
    coercion applied first (may be wrong on purpose), and optionally a
    replay through the session's root reference instead of the resolved one."""

    message: Message
    expect: InterfaceId | None = None
    use_root: bool = False


class SessionDriver:
    """Runs one client session as its own actor.

    ``kickoff`` fires the first step immediately (the way an actor's
    constructor would); every later step runs when the previous
    continuation resolves and posts a ``resume`` into the driver's mailbox.
    Each resumed reference is first coerced to the state the session
    expects (the table's promise for the previous kind).  Any typestate
    error stops the session and is recorded instead of crashing the run.
    """

    def __init__(self, system: ActorSystem, label: str, steps: list[SessionStep]):
        self.system = system
        self.label = label
        self.steps: deque[SessionStep] = deque(steps)
        self.complete = False
        self.final_ref: ProtRef | None = None
        self.error: Exception | None = None
        self.root: ProtRef | None = None
        self._expect: InterfaceId | None = None
        self.actor_id = system.spawn(
            Behavior("DRIVE", {"resume": self._on_resume}), name=label)

    def kickoff(self, root: ProtRef) -> None:
        self.root = root
        self._advance(root, first=True)

    def _on_resume(self, ctx, msg: Message) -> None:
        self._advance(msg.args[0], first=False)

    def _advance(self, ref: ProtRef, first: bool) -> None:
        try:
            if not first and self._expect is not None:
                ref = expect_state(ref, self._expect)
            if not self.steps:
                self.complete = True
                self.final_ref = ref
                return
            step = self.steps.popleft()
            if step.use_root:
                ref = self.root
            if step.expect is not None:
                ref = expect_state(ref, step.expect)
            continuation = ref.tell(step.message)
            self._expect = continuation.next_interface
            continuation.cell.observe(self._post_resume, self._on_failure)
        except ChemactorsError as exc:
            self.error = exc

    def _post_resume(self, next_ref: ProtRef) -> None:
        self.system.tell(self.actor_id, _RESUME(next_ref), client=self.label)

    def _on_failure(self, reason) -> None:
        if isinstance(reason, Exception):
            self.error = reason


def _session_verdicts(report: TraceReport, drivers: list[SessionDriver]) -> None:
    report.completions = {d.label: d.complete for d in drivers}
    report.errors.extend(
        "%s: %s: %s" % (d.label, type(d.error).__name__, d.error)
        for d in drivers if d.error is not None)


# ---------------------------------------------------------------------------
# scenario: buffer-untyped
# ---------------------------------------------------------------------------

def run_buffer_untyped(config: ScenarioConfig) -> TraceReport:
    """Raw one-place buffer; two of the five sends are undeliverable."""
    spec = load_builtin("buffer-single")
    insert, remove = spec.kind("insert"), spec.kind("remove")
    system = ActorSystem(config.seed)

    def empty() -> Behavior:
        return Behavior("EMPTY", {
            "insert": lambda ctx, msg: ctx.become(full(msg.args[0])),
        })

    def full(value) -> Behavior:
        return Behavior("FULL(%s)" % value, {
            "remove": lambda ctx, msg: ctx.become(empty()),
        })

    buffer_id = system.spawn(empty(), name="buffer")
    for message in (insert(4), remove(), insert(10), insert(20), Message.raw(4)):
        system.tell(buffer_id, message)

    steps = _run(system, config)
    report = _base_report(config, system, steps)
    report.final_states = {"buffer": system.behavior_name(buffer_id)}
    report.verdicts["conformance"] = str(
        check_trace(spec, handled_events(steps, spec, actor="buffer")))
    return report


# ---------------------------------------------------------------------------
# scenario: buffer-single
# ---------------------------------------------------------------------------

def _typed_buffer(system: ActorSystem, spec: ProtocolSpec,
                  table: ProtocolTable, affine: bool):
    """One-place buffer whose handlers resolve each continuation with a
    fresh self-reference at the table's successor interface."""
    consume = table.successor_of("insert")
    produce = table.successor_of("remove")

    def empty() -> Behavior:
        def on_insert(ctx, msg):
            ctx.become(full(msg.args[0]))
            resolve_continuation(ctx, ctx.reply, ProtRef(
                system, ctx.self_id, consume, table, affine=affine))
        return Behavior("EMPTY", {"insert": on_insert})

    def full(value) -> Behavior:
        def on_remove(ctx, msg):
            ctx.become(empty())
            resolve_continuation(ctx, ctx.reply, ProtRef(
                system, ctx.self_id, produce, table, affine=affine))
        return Behavior("FULL(%s)" % value, {"remove": on_remove})

    return system.spawn(empty(), name="buffer")


def run_buffer_single(config: ScenarioConfig) -> TraceReport:
    """Single client walking the typed buffer to END through continuations."""
    spec = load_builtin("buffer-single")
    table = derive_client_table(spec, "default")
    system = ActorSystem(config.seed)
    buffer_id = _typed_buffer(system, spec, table, config.affine)

    insert, remove = spec.kind("insert"), spec.kind("remove")
    steps = [SessionStep(insert(0)), SessionStep(remove()),
             SessionStep(insert(2)), SessionStep(remove()),
             SessionStep(insert(4)), SessionStep(remove())]
    if config.corrupt == "double-remove":
        # Claim the session is back at the consuming state and remove again.
        steps = steps[:2] + [SessionStep(remove(),
                                         expect=spec.interface_of("FULL"))]
    elif config.corrupt == "reuse-initial":
        steps = steps[:1] + [SessionStep(insert(2), use_root=True)]

    driver = SessionDriver(system, "user", steps)
    driver.kickoff(ProtRef(system, buffer_id, spec.interface_of(spec.initial),
                           table, affine=config.affine, session="user"))

    trace = _run(system, config)
    report = _base_report(config, system, trace)
    report.final_states = {"buffer": system.behavior_name(buffer_id)}
    _session_verdicts(report, [driver])
    report.verdicts["conformance"] = str(
        check_trace(spec, handled_events(trace, spec, actor="buffer")))
    report.verdicts["session-complete"] = "OK" if driver.complete else \
        "FAIL: session stopped early"
    return report


# ---------------------------------------------------------------------------
# scenario: buffer-pc
# ---------------------------------------------------------------------------

def run_buffer_pc(config: ScenarioConfig) -> TraceReport:
    """Chemical buffer under concurrent producer/consumer sessions."""
    spec = load_builtin("buffer-pc")
    producer_table = derive_client_table(spec, "producer")
    consumer_table = derive_client_table(spec, "consumer")
    produce_iface = spec.interface_of("EMPTY")
    consume_iface = spec.interface_of("FULL")
    system = ActorSystem(config.seed)
    removed: list = []

    def empty() -> Behavior:
        def on_insert(ctx, msg):
            chem_become(ctx, full(msg.args[0]))
            resolve_continuation(ctx, ctx.reply, ProtRef(
                system, ctx.self_id, produce_iface, producer_table,
                affine=config.affine))
        return chem_react(Behavior("EMPTY", {"insert": on_insert}), spec.retained)

    def full(value) -> Behavior:
        def on_remove(ctx, msg):
            removed.append(value)
            chem_become(ctx, empty())
            resolve_continuation(ctx, ctx.reply, ProtRef(
                system, ctx.self_id, consume_iface, consumer_table,
                affine=config.affine))
        return chem_react(Behavior("FULL(%s)" % value, {"remove": on_remove}),
                          spec.retained)

    buffer_id = system.spawn(empty(), name="buffer",
                             chem_variant=config.chemical_variant)

    insert, remove = spec.kind("insert"), spec.kind("remove")
    drivers = []
    for i in range(config.producers):
        label = "producer-%d" % (i + 1)
        drivers.append(SessionDriver(
            system, label,
            [SessionStep(insert(10 * k)) for k in range(config.items)]))
    for i in range(config.consumers):
        label = "consumer-%d" % (i + 1)
        drivers.append(SessionDriver(
            system, label,
            [SessionStep(remove()) for _ in range(config.items - 1)]))

    for driver in drivers:
        iface = produce_iface if driver.label.startswith("producer") else consume_iface
        table = producer_table if driver.label.startswith("producer") else consumer_table
        driver.kickoff(ProtRef(system, buffer_id, iface, table,
                               affine=config.affine, session=driver.label))

    trace = _run(system, config)
    report = _base_report(config, system, trace)
    report.final_states = {"buffer": system.behavior_name(buffer_id)}
    report.removed_values = list(removed)
    _session_verdicts(report, drivers)
    report.verdicts["alternation"] = str(
        check_trace(spec, handled_events(trace, spec, actor="buffer")))
    lost = sorted(set(report.dead_letter_kinds) & spec.retained)
    still_enabled = sorted(set(system.stashed_kinds(buffer_id))
                           & system.enabled_kinds(buffer_id))
    if lost:
        report.verdicts["no-retained-loss"] = "FAIL: dead-lettered %s" % lost
    elif still_enabled:
        report.verdicts["no-retained-loss"] = ("FAIL: quiescent stash still holds "
                                               "enabled kinds %s" % still_enabled)
    else:
        report.verdicts["no-retained-loss"] = "OK"
    return report


# ---------------------------------------------------------------------------
# scenario: bookshop
# ---------------------------------------------------------------------------

def _shop_users(count: int) -> list[tuple[str, str, str, str, str]]:
    users = list(DEFAULT_USERS[:count])
    for i in range(len(users) + 1, count + 1):
        users.append(("user-%d" % i, "Title-%da" % i, "Title-%db" % i,
                      "%04d" % i, "City-%d" % i))
    return users


def run_bookshop(config: ScenarioConfig) -> TraceReport:
    """Several user sessions against one shop actor, under either policy."""
    spec = load_builtin("bookshop")
    table = derive_client_table(spec, "default")
    interleave = config.policy == "interleave-init"
    retained = spec.retained | {"checkout"} if interleave else spec.retained
    system = ActorSystem(config.seed)
    basket: dict[str, str] = {}

    init_iface = spec.interface_of("INIT")
    which_iface = spec.interface_of("WHICH")
    cinfo_iface = spec.interface_of("CINFO")
    addinfo_iface = spec.interface_of("ADDINFO")
    end_iface = spec.interface_of("END")

    def reply_at(ctx, iface):
        resolve_continuation(ctx, ctx.reply, ProtRef(
            system, ctx.self_id, iface, table, affine=config.affine))

    def init() -> Behavior:
        def on_add(ctx, msg):
            reply_at(ctx, which_iface)
            ctx.become(which())

        def on_checkout(ctx, msg):
            reply_at(ctx, cinfo_iface)
            ctx.become(cinfo())

        return chem_react(Behavior("INIT", {"add": on_add,
                                            "checkout": on_checkout}), retained)

    def which() -> Behavior:
        def on_book(ctx, msg):
            name, title = msg.args
            basket[name] = basket[name] + " " + title if name in basket else title
            reply_at(ctx, init_iface)
            if interleave:
                chem_become(ctx, init())
            else:
                ctx.become(init())

        return chem_react(Behavior("WHICH", {"book": on_book}), retained)

    def cinfo() -> Behavior:
        def on_card(ctx, msg):
            reply_at(ctx, addinfo_iface)
            ctx.become(addinfo())

        return chem_react(Behavior("CINFO", {"card": on_card}), retained)

    def addinfo() -> Behavior:
        def on_address(ctx, msg):
            name, _addr = msg.args
            basket.pop(name, None)
            reply_at(ctx, end_iface)
            chem_become(ctx, init())

        return chem_react(Behavior("ADDINFO", {"address": on_address}), retained)

    shop_id = system.spawn(init(), name="shop",
                           chem_variant=config.chemical_variant)

    add, book = spec.kind("add"), spec.kind("book")
    checkout, card, address = (spec.kind("checkout"), spec.kind("card"),
                               spec.kind("address"))
    drivers = []
    for index, (name, first, second, card_num, addr) in \
            enumerate(_shop_users(config.users)):
        steps = [SessionStep(add(name)), SessionStep(book(name, first)),
                 SessionStep(add(name)), SessionStep(book(name, second)),
                 SessionStep(checkout(name)), SessionStep(card(name, card_num)),
                 SessionStep(address(name, addr))]
        if config.corrupt == "skip-card" and index == 0:
            # Pretend the card step already happened and ship straight away.
            steps = steps[:5] + [SessionStep(address(name, addr),
                                             expect=addinfo_iface)]
        drivers.append(SessionDriver(system, name, steps))
    for driver in drivers:
        driver.kickoff(ProtRef(system, shop_id, init_iface, table,
                               affine=config.affine, session=driver.label))

    trace = _run(system, config)
    report = _base_report(config, system, trace)
    report.final_states = {"shop": system.behavior_name(shop_id)}
    report.basket = dict(basket)
    _session_verdicts(report, drivers)

    shop_events = handled_events(trace, spec, actor="shop")
    projections = split_by_client(shop_events)
    bad = {label: str(check_trace(spec, events))
           for label, events in projections.items()
           if not check_trace(spec, events).ok}
    report.verdicts["per-user-conformance"] = "OK" if not bad else \
        "FAIL: " + "; ".join("%s %s" % kv for kv in sorted(bad.items()))
    report.verdicts["all-users-complete"] = "OK" if all(
        report.completions.values()) else "FAIL: " + ", ".join(
        sorted(label for label, done in report.completions.items() if not done))
    report.verdicts["basket-empty"] = "OK" if not basket else \
        "FAIL: %s" % dict(sorted(basket.items()))
    if interleave:
        report.verdicts["switches-at-init"] = _verdict_switches_at_init(shop_events)
    else:
        report.verdicts["serialized-spans"] = _verdict_serialized_spans(shop_events)
    lost = sorted(set(report.dead_letter_kinds) & retained)
    report.verdicts["no-retained-loss"] = "OK" if not lost else \
        "FAIL: dead-lettered %s" % lost
    return report


def _verdict_serialized_spans(shop_events) -> str:
    """Each user's handled messages must form one contiguous block."""
    positions: dict[str, list[int]] = {}
    for i, event in enumerate(shop_events):
        positions.setdefault(event.client, []).append(i)
    broken = sorted(label for label, idx in positions.items()
                    if idx != list(range(idx[0], idx[-1] + 1)))
    if broken:
        return "FAIL: sessions interleaved for %s" % ", ".join(broken)
    return "OK"


def _verdict_switches_at_init(shop_events) -> str:
    """Whenever the served user changes, the shop must be at INIT."""
    for prev, cur in zip(shop_events, shop_events[1:]):
        if prev.client != cur.client and cur.state != "INIT":
            return ("FAIL: switched from %s to %s while at %s"
                    % (prev.client, cur.client, cur.state))
    return "OK"


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_RUNNERS = {
    "buffer-untyped": run_buffer_untyped,
    "buffer-single": run_buffer_single,
    "buffer-pc": run_buffer_pc,
    "bookshop": run_bookshop,
}


def run_scenario(config: ScenarioConfig) -> TraceReport:
    """Validate ``config`` and run the scenario it names."""
    config.validate()
    return _RUNNERS[config.scenario](config)
