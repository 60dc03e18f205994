"""Acceptance suite: one test (one pass/fail line under ``pytest -v``) per
shipped guarantee.  Everything here is checked against independently computed
expectations — raw JSON documents, a brute-force interleaving enumerator, and
hand-derived message sequences — not against the library's own verdicts."""

import json
import random
import time

import pytest

import pc_oracle
from chemactors import (ActorSystem, AffinityViolation, Behavior, Message,
                        MessageNotInInterface, ProtRef, ScenarioConfig,
                        SpecInvalid, check_trace, derive_client_table,
                        load_builtin, load_spec, resolve_continuation,
                        run_scenario, spec_path, write_trace)

SEED_SWEEP = range(20)


def run(scenario, **kwargs):
    return run_scenario(ScenarioConfig(scenario, **kwargs))


def handled(report, actor, kinds):
    return [s.kind for s in report.steps
            if s.outcome == "handled" and s.actor == actor and s.kind in kinds]


def test_c01_untyped_buffer_dead_letters_two_and_ends_full_ten():
    started = time.monotonic()
    report = run("buffer-untyped", seed=0)
    assert report.dead_letters == 2
    assert report.final_states["buffer"] == "FULL(10)"
    assert time.monotonic() - started < 1.0


def test_c02_illegal_sends_are_refused_before_delivery():
    spec = load_builtin("buffer-single")
    table = derive_client_table(spec, "default")
    system = ActorSystem(seed=0)
    target = system.spawn(Behavior("EMPTY", {"insert": lambda c, m: None}),
                          name="buffer")
    produce = ProtRef(system, target, spec.interface_of("EMPTY"), table)
    consume = ProtRef(system, target, spec.interface_of("FULL"), table)

    with pytest.raises(MessageNotInInterface):
        produce.tell(Message.raw("untyped payload"))
    with pytest.raises(MessageNotInInterface):
        consume.tell(spec.kind("insert")(1))

    affine = ProtRef(system, target, spec.interface_of("EMPTY"), table,
                     affine=True)
    affine.tell(spec.kind("insert")(1))  # legal first use
    with pytest.raises(AffinityViolation):
        affine.tell(spec.kind("insert")(2))

    # the refused sends never reached a mailbox, let alone the dead letters
    assert system.pending_messages() == 1  # only the legal insert
    assert len(system.dead_letters) == 0


def test_c03_single_session_alternates_to_the_end():
    report = run("buffer-single", seed=0)
    assert handled(report, "buffer", ("insert", "remove")) == \
        ["insert", "remove"] * 3
    spec = load_builtin("buffer-single")
    events = [s.kind for s in report.steps
              if s.outcome == "handled" and s.actor == "buffer"
              and s.kind in spec.kind_names]
    assert check_trace(spec, events).ok
    assert report.completions == {"user": True}  # session reached END


def test_c04_thousand_randomized_sends_zero_violations():
    """Generic table-following actors under random clients; every resolved
    continuation must land on the interface the raw JSON document promises."""
    total_sends = 0

    def raw_views(name):
        with open(spec_path(name), encoding="utf-8") as fh:
            document = json.load(fh)
        ifaces = {s["name"]: (s.get("interface_name", s["name"]),
                              frozenset(s["interface"]))
                  for s in document["states"]}
        return document, ifaces

    def spawn_following_actor(system, spec, table):
        def behavior_for(state_name):
            iface = spec.interface_of(state_name)
            handlers = {}
            for kind in sorted(iface.kinds):
                def on_kind(ctx, msg, _kind=kind):
                    ctx.become(behavior_for(spec.transitions[_kind]))
                    resolve_continuation(ctx, ctx.reply, ProtRef(
                        system, ctx.self_id, table.successor_of(_kind), table))
                handlers[kind] = on_kind
            return Behavior(state_name, handlers)
        return system.spawn(behavior_for(spec.initial), name=spec.name)

    rng = random.Random(0xACCE97)
    for name, walks, max_len in (("buffer-single", 60, 9),
                                 ("bookshop", 60, 11)):
        spec = load_builtin(name)
        table = derive_client_table(spec, "default")
        document, raw_ifaces = raw_views(name)
        for _ in range(walks):
            system = ActorSystem(seed=rng.randrange(1 << 30))
            target = spawn_following_actor(system, spec, table)
            ref = ProtRef(system, target, spec.interface_of(spec.initial),
                          table)
            state = document["initial"]
            for _ in range(max_len):
                enabled = sorted(raw_ifaces[state][1])
                if not enabled:
                    break
                kind = rng.choice(enabled)
                message = spec.kind(kind)
                continuation = ref.tell(message(*("v",) * len(message.fields)))
                system.run_until_quiescent()
                total_sends += 1
                resolved = continuation.cell.value
                expected_state = document["client_tables"]["default"][kind]
                expected_name, expected_kinds = raw_ifaces[expected_state]
                assert resolved.interface.name == expected_name
                assert resolved.interface.kinds == expected_kinds
                ref, state = resolved, expected_state

    # concurrent producer/consumer sessions on the chemical buffer
    for seed in range(8):
        report = run("buffer-pc", seed=seed, producers=2, consumers=2, items=6)
        assert report.all_ok()
        assert report.errors == []
        total_sends += sum(1 for s in report.steps
                           if s.kind in ("insert", "remove")
                           and s.outcome in ("handled", "stashed"))

    assert total_sends >= 1000, total_sends


def test_c05_pc_sweep_alternates_and_never_drops_retained_mail():
    spec = load_builtin("buffer-pc")
    started = time.monotonic()
    for seed in SEED_SWEEP:
        report = run("buffer-pc", seed=seed)  # 1 producer / 2 consumers
        kinds = handled(report, "buffer", ("insert", "remove"))
        assert kinds and kinds[0] == "insert"
        assert all(k == "insert" for k in kinds[0::2])
        assert all(k == "remove" for k in kinds[1::2])
        assert not set(report.dead_letter_kinds) & set(spec.retained)
        assert check_trace(spec, kinds).ok
    assert time.monotonic() - started < 5.0


def test_c06_pc_one_on_one_matches_brute_force_enumeration():
    enumerated = pc_oracle.enumerate_outcomes(values=(0, 10, 20, 30, 40),
                                              removes=4)
    assert enumerated == {((0, 10, 20, 30), "FULL(40)")}
    for seed in SEED_SWEEP:
        report = run("buffer-pc", seed=seed, producers=1, consumers=1, items=5)
        outcome = (tuple(report.removed_values),
                   report.final_states["buffer"])
        assert outcome in enumerated


def test_c07_flushed_stash_replays_before_later_arrivals():
    system = ActorSystem(seed=0)
    order = []

    def ready():
        return Behavior("READY", {k: (lambda c, m, _k=k: order.append(_k))
                                  for k in ("a", "b", "c")})

    def waiting():
        from chemactors import chem_become, chem_react
        return chem_react(Behavior("WAIT", {
            "go": lambda ctx, m: chem_become(ctx, ready())}), {"a", "b"})

    actor = system.spawn(waiting(), name="stage")
    for kind in ("a", "b", "go", "c"):
        system.tell(actor, Message(kind, ()))
    system.run_until_quiescent()
    assert order == ["a", "b", "c"]  # stash first, in arrival order, then c


def test_c08_bookshop_policies_serve_every_user_their_own_protocol():
    spec = load_builtin("bookshop")
    started = time.monotonic()
    for policy in ("serialize-users", "interleave-init"):
        for seed in range(10):
            report = run("bookshop", seed=seed, policy=policy)
            assert all(report.completions.values())
            assert report.basket == {}
            events = [(s.client, s.state, s.kind) for s in report.steps
                      if s.outcome == "handled" and s.actor == "shop"]
            by_client = {}
            for position, (client, _state, kind) in enumerate(events):
                by_client.setdefault(client, []).append((position, kind))
            for client, entries in by_client.items():
                positions = [p for p, _ in entries]
                kinds = [k for _, k in entries]
                assert check_trace(spec, kinds).ok, client
                if policy == "serialize-users":
                    assert positions == list(range(positions[0],
                                                   positions[-1] + 1)), client
            if policy == "interleave-init":
                for (prev, _, _), (client, state, _) in zip(events, events[1:]):
                    if prev != client:
                        assert state == "INIT"
    assert time.monotonic() - started < 5.0


def test_c09_documents_load_and_lose_validity_with_any_transition():
    for name in ("buffer-single", "buffer-pc", "bookshop"):
        with open(spec_path(name), encoding="utf-8") as fh:
            document = json.load(fh)
        assert load_spec(document).name  # loads cleanly as shipped
        for kind in document["transitions"]:
            broken = json.loads(json.dumps(document))
            del broken["transitions"][kind]
            with pytest.raises(SpecInvalid):
                load_spec(broken)
    verdict = check_trace(load_builtin("buffer-single"), ["insert", "insert"])
    assert (verdict.ok, verdict.index, verdict.state, verdict.kind) == \
        (False, 1, "FULL", "insert")


def test_c10_same_seed_reproduces_every_trace_byte_for_byte(tmp_path):
    for scenario in ("buffer-untyped", "buffer-single", "buffer-pc",
                     "bookshop"):
        paths = []
        for attempt in ("first", "second"):
            report = run(scenario, seed=11)
            path = tmp_path / ("%s-%s.tsv" % (scenario, attempt))
            write_trace(report.steps, str(path))
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes(), scenario
