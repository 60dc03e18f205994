"""Interface-typed references: membership, narrowing, affinity."""

import random

import pytest

from chemactors import (ActorSystem, AffinityViolation, Behavior,
                        EMPTY_INTERFACE, InterfaceId, Message,
                        MessageNotInInterface, MessageKind, SubstitutionUnsafe,
                        TypedRef, materialize_interfaces, narrow,
                        substitutable)

insert = MessageKind("insert", ("value",))
remove = MessageKind("remove", ())


def buffer_family():
    """Widening hierarchy: the root interface subsumes both halves."""
    return materialize_interfaces({
        "BufferInterf": ((), ()),
        "ProduceInt": (("insert",), ("BufferInterf",)),
        "ConsumeInt": (("remove",), ("BufferInterf",)),
    })


def counting_buffer(system):
    seen = []

    def any_state():
        return Behavior("any", {
            "insert": lambda ctx, msg: seen.append(("insert", msg.args[0])),
            "remove": lambda ctx, msg: seen.append(("remove",)),
        })

    return system.spawn(any_state(), name="buffer"), seen


def test_message_kind_builds_messages_and_checks_arity():
    assert insert(4) == Message("insert", (4,))
    assert remove() == Message("remove", ())
    with pytest.raises(TypeError):
        insert()
    with pytest.raises(TypeError):
        remove(1)


def test_hierarchy_materializes_descendant_kinds():
    family = buffer_family()
    assert family["ProduceInt"].kinds == {"insert"}
    assert family["ConsumeInt"].kinds == {"remove"}
    assert family["BufferInterf"].kinds == {"insert", "remove"}


def test_hierarchy_cycle_is_rejected():
    with pytest.raises(SubstitutionUnsafe):
        materialize_interfaces({"A": ((), ("B",)), "B": ((), ("A",))})
    with pytest.raises(SubstitutionUnsafe):
        materialize_interfaces({"A": ((), ("missing",))})


def test_substitutable_is_kind_set_inclusion():
    family = buffer_family()
    root, produce, consume = (family["BufferInterf"], family["ProduceInt"],
                              family["ConsumeInt"])
    assert substitutable(root, produce)       # wider serves narrower
    assert substitutable(root, consume)
    assert not substitutable(produce, root)   # narrower cannot serve wider
    assert not substitutable(produce, consume)
    assert substitutable(produce, produce)
    assert substitutable(produce, EMPTY_INTERFACE)
    assert not substitutable(EMPTY_INTERFACE, produce)


def test_substitutable_partial_order_properties():
    # Reflexive, transitive, antisymmetric up to equal kind sets; checked
    # over a few hundred random interfaces.
    rng = random.Random(0xBEEF)
    pool = "abcdefg"
    faces = [InterfaceId("I%d" % i,
                         frozenset(rng.sample(pool, rng.randrange(len(pool)))))
             for i in range(60)]
    for face in faces:
        assert substitutable(face, face)
    for _ in range(400):
        x, y, z = (rng.choice(faces) for _ in range(3))
        if substitutable(x, y) and substitutable(y, z):
            assert substitutable(x, z)
        if substitutable(x, y) and substitutable(y, x):
            assert x.kinds == y.kinds


def test_typed_tell_delivers_enabled_kind():
    system = ActorSystem(seed=0)
    target, seen = counting_buffer(system)
    family = buffer_family()
    ref = TypedRef(system, target, family["BufferInterf"])
    ref.tell(insert(4))
    ref.tell(remove())
    system.run_until_quiescent()
    assert seen == [("insert", 4), ("remove",)]


def test_typed_tell_refuses_raw_and_foreign_kinds_before_delivery():
    system = ActorSystem(seed=0)
    target, seen = counting_buffer(system)
    family = buffer_family()
    ref = TypedRef(system, target, family["ProduceInt"])
    with pytest.raises(MessageNotInInterface):
        ref.tell(Message.raw(4))
    with pytest.raises(MessageNotInInterface):
        ref.tell(remove())
    assert system.pending_messages() == 0  # nothing was enqueued
    system.run_until_quiescent()
    assert seen == [] and len(system.dead_letters) == 0


def test_empty_interface_refuses_everything():
    system = ActorSystem(seed=0)
    target, _ = counting_buffer(system)
    ref = TypedRef(system, target, EMPTY_INTERFACE)
    with pytest.raises(MessageNotInInterface):
        ref.tell(insert(1))


def test_narrow_produces_working_sub_capability():
    system = ActorSystem(seed=0)
    target, seen = counting_buffer(system)
    family = buffer_family()
    root = TypedRef(system, target, family["BufferInterf"])
    producer_view = narrow(root, family["ProduceInt"])
    producer_view.tell(insert(7))
    with pytest.raises(MessageNotInInterface):
        producer_view.tell(remove())
    system.run_until_quiescent()
    assert seen == [("insert", 7)]


def test_narrow_refuses_widening():
    system = ActorSystem(seed=0)
    target, _ = counting_buffer(system)
    family = buffer_family()
    producer_view = TypedRef(system, target, family["ProduceInt"])
    with pytest.raises(SubstitutionUnsafe):
        producer_view.narrow(family["BufferInterf"])


def test_affine_ref_allows_exactly_one_send():
    system = ActorSystem(seed=0)
    target, seen = counting_buffer(system)
    family = buffer_family()
    ref = TypedRef(system, target, family["BufferInterf"], affine=True)
    ref.tell(insert(1))
    with pytest.raises(AffinityViolation):
        ref.tell(remove())
    system.run_until_quiescent()
    assert seen == [("insert", 1)]
    assert ref.used


def test_refused_kind_does_not_consume_an_affine_ref():
    system = ActorSystem(seed=0)
    target, seen = counting_buffer(system)
    family = buffer_family()
    ref = TypedRef(system, target, family["ProduceInt"], affine=True)
    with pytest.raises(MessageNotInInterface):
        ref.tell(remove())
    assert not ref.used
    ref.tell(insert(2))  # the one allowed send still works
    system.run_until_quiescent()
    assert seen == [("insert", 2)]


def test_non_affine_ref_is_reusable():
    system = ActorSystem(seed=0)
    target, seen = counting_buffer(system)
    family = buffer_family()
    ref = TypedRef(system, target, family["BufferInterf"])
    for i in range(5):
        ref.tell(insert(i))
    system.run_until_quiescent()
    assert len(seen) == 5
