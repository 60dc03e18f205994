"""Interface-typed actor references.

A :class:`MessageKind` declares a named message shape; an
:class:`InterfaceId` is a named set of kinds an actor is willing to handle
in some abstract state.  A :class:`TypedRef` couples an actor id with one
interface and refuses, at send time, any message whose kind the interface
does not enable.  Capability flows the contravariant way: a reference can
always be narrowed to an interface with FEWER kinds (``narrow``), and
``substitutable(actual, expected)`` says whether a reference typed at
``actual`` can stand in where ``expected`` is required.

A reference may additionally be *affine*: it allows at most one successful
send, after which any further attempt raises
:class:`~chemactors.errors.AffinityViolation`.  The used flag flips
atomically with the send decision, so two racing senders cannot both pass
the gate.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import AffinityViolation, MessageNotInInterface, SubstitutionUnsafe
from .runtime import ActorId, ActorSystem, Message


@dataclass(frozen=True)
class MessageKind:
    """A declared message shape: kind name plus ordered payload field names.

    Instances are callable and build a :class:`~chemactors.runtime.Message`,
    checking arity: ``insert(4)`` for ``MessageKind("insert", ("value",))``.
    """

    name: str
    fields: tuple[str, ...] = ()

    def __call__(self, *args) -> Message:
        if len(args) != len(self.fields):
            raise TypeError("%s expects %d field(s) %r, got %d" %
                            (self.name, len(self.fields), self.fields, len(args)))
        return Message(self.name, args)


@dataclass(frozen=True)
class InterfaceId:
    """A named, materialized set of enabled kind names.

    ``parents`` records the declared widening hierarchy (a parent interface
    subsumes the kinds of all interfaces declaring it); it is informational
    and excluded from equality, which is name + kind set.
    """

    name: str
    kinds: frozenset[str] = frozenset()
    parents: tuple[str, ...] = field(default=(), compare=False)

    def enables(self, kind: str) -> bool:
        return kind in self.kinds

    def __str__(self) -> str:
        return self.name


#: The interface that enables nothing; references typed at it can only refuse.
EMPTY_INTERFACE = InterfaceId("EMPTY_INTERFACE", frozenset())


def materialize_interfaces(
    declarations: Mapping[str, tuple[Iterable[str], Iterable[str]]],
) -> dict[str, InterfaceId]:
    """Build interfaces from ``{name: (own_kinds, parent_names)}``.

    A parent accumulates every kind of every interface that (transitively)
    declares it as parent, so the widest interface of a hierarchy enables
    the union of its descendants' kinds.
    """
    for name, (_, parents) in declarations.items():
        for p in parents:
            if p not in declarations:
                raise SubstitutionUnsafe("unknown parent interface %r of %r" % (p, name))

    def ancestors(name: str, seen: frozenset[str] = frozenset()) -> set[str]:
        if name in seen:
            raise SubstitutionUnsafe("interface hierarchy cycle at %r" % name)
        found = set()
        for p in declarations[name][1]:
            found.add(p)
            found |= ancestors(p, seen | {name})
        return found

    kinds: dict[str, set[str]] = {name: set(own) for name, (own, _) in declarations.items()}
    for name in declarations:
        for anc in ancestors(name):
            kinds[anc] |= set(declarations[name][0])
    return {
        name: InterfaceId(name, frozenset(kinds[name]), tuple(declarations[name][1]))
        for name in declarations
    }


def substitutable(actual: InterfaceId, expected: InterfaceId) -> bool:
    """True iff a reference typed at ``actual`` can serve where ``expected``
    is required, i.e. ``expected`` demands no kind ``actual`` lacks."""
    return expected.kinds <= actual.kinds


class TypedRef:
    """An actor reference that only lets enabled kinds through."""

    def __init__(self, system: ActorSystem, target: ActorId,
                 interface: InterfaceId, affine: bool = False,
                 session: str | None = None):
        self._system = system
        self.target = target
        self.interface = interface
        self.affine = affine
        self.session = session
        self._used = False
        self._lock = threading.Lock()

    @property
    def used(self) -> bool:
        return self._used

    def tell(self, message: Message) -> None:
        """Send ``message`` if its kind is enabled; otherwise refuse without
        delivering anything."""
        self._gate(message)
        self._system.tell(self.target, message, client=self.session)

    def narrow(self, expected: InterfaceId) -> "TypedRef":
        """A fresh reference at the narrower interface ``expected``."""
        if not substitutable(self.interface, expected):
            raise SubstitutionUnsafe(
                "cannot narrow %s to %s: kinds %s are not offered" %
                (self.interface, expected,
                 sorted(expected.kinds - self.interface.kinds)))
        return TypedRef(self._system, self.target, expected,
                        affine=self.affine, session=self.session)

    def _gate(self, message: Message) -> None:
        # Membership first (a refused kind does not consume an affine ref),
        # then the affinity test-and-set, atomic with the send decision.
        if not self.interface.enables(message.kind):
            raise MessageNotInInterface(
                "kind %r not enabled by interface %s (enables %s)" %
                (message.kind, self.interface, sorted(self.interface.kinds)))
        if self.affine:
            with self._lock:
                if self._used:
                    raise AffinityViolation(
                        "affine reference to %s already used" % (self.target,))
                self._used = True

    def __repr__(self) -> str:
        flags = " affine" if self.affine else ""
        return "<TypedRef %s@%s%s>" % (self.target, self.interface, flags)


def narrow(ref: TypedRef, expected: InterfaceId) -> TypedRef:
    """Function form of :meth:`TypedRef.narrow`."""
    return ref.narrow(expected)
