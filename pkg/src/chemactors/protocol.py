"""Session-following references and continuation-passing sends.

A :class:`ProtocolTable` maps each message kind to the interface a client
holds *after* sending that kind.  A :class:`ProtRef` is a typed reference
paired with such a table: ``tell`` checks the kind as usual, then returns a
:class:`Continuation` that will resolve, once the target actor handles the
message, to a fresh ``ProtRef`` typed at the successor interface.  The
successor is fixed at send time from the table; the handling actor's
completion is verified against it (:func:`resolve_continuation`), so an
actor cannot move a client's session somewhere the table never promised.

Continuations compose like a small result monad: ``map`` transforms the
resolved reference into a plain deferred value, ``then`` chains another
protocol step, and ``filter`` turns a false predicate into a silent terminal
failure that skips everything downstream.  :func:`expect_state` is the
exact-state coercion used to pin a resolved reference to the state a client
believes the session is in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .errors import (MessageNotInInterface, ProtocolBreach, StateMismatch,
                     SubstitutionUnsafe)
from .runtime import ActorContext, ActorId, ActorSystem, DeferredCell, Message
from .typed_refs import InterfaceId, MessageKind, TypedRef, substitutable


@dataclass(frozen=True)
class ProtocolTable:
    """kind name -> interface the sender holds after that kind is handled."""

    name: str
    entries: Mapping[str, InterfaceId]

    def successor_of(self, kind: str) -> InterfaceId:
        try:
            return self.entries[kind]
        except KeyError:
            raise MessageNotInInterface(
                "table %r has no successor for kind %r" % (self.name, kind)) from None

    def total_on(self, interface: InterfaceId) -> bool:
        return interface.kinds <= set(self.entries)

    def __contains__(self, kind: str) -> bool:
        return kind in self.entries


class ContinuationCell(DeferredCell):
    """Reply cell of a protocol send; carries the successor interface the
    sender's table promised plus the sender's session label."""

    __slots__ = ("expected_interface", "client")

    def __init__(self, expected_interface: InterfaceId | None = None,
                 client: str | None = None):
        super().__init__()
        self.expected_interface = expected_interface
        self.client = client


class Continuation:
    """Handle on one protocol step: the promised next interface plus the
    cell that will hold the fresh reference."""

    def __init__(self, next_interface: InterfaceId | None, cell: ContinuationCell):
        self.next_interface = next_interface
        self.cell = cell

    def map(self, fn: Callable[["ProtRef"], Any]) -> DeferredCell:
        """Deferred value of ``fn`` applied to the resolved reference.
        Failures (including a filtered-out step) skip ``fn`` entirely."""
        out = DeferredCell()

        def on_ref(ref: "ProtRef") -> None:
            try:
                out.complete(fn(ref))
            except Exception as exc:
                out.fail(exc)

        self.cell.observe(on_ref, out.fail)
        return out

    def then(self, fn: Callable[["ProtRef"], "Continuation"]) -> "Continuation":
        """Chain another protocol step computed from the resolved reference.

        The composite resolves to the inner step's reference and reports the
        inner step's next interface; an exception raised by ``fn`` (a refused
        send, a failed coercion) becomes the composite's failure.
        """
        composite = Continuation(None, ContinuationCell(client=self.cell.client))

        def on_ref(ref: "ProtRef") -> None:
            try:
                inner = fn(ref)
                if not isinstance(inner, Continuation):
                    raise TypeError("then() callback must return a Continuation")
            except Exception as exc:
                composite.cell.fail(exc)
                return

            def inner_done(next_ref: "ProtRef") -> None:
                composite.next_interface = inner.next_interface
                composite.cell.expected_interface = inner.next_interface
                composite.cell.complete(next_ref)

            inner.cell.observe(inner_done, composite.cell.fail)

        self.cell.observe(on_ref, composite.cell.fail)
        return composite

    def filter(self, predicate: Callable[["ProtRef"], bool]) -> "Continuation":
        """Pass the resolved reference through iff ``predicate`` holds;
        otherwise the step fails silently and downstream steps are skipped."""
        filtered = Continuation(self.next_interface,
                                ContinuationCell(self.next_interface,
                                                 self.cell.client))

        def on_ref(ref: "ProtRef") -> None:
            try:
                keep = predicate(ref)
            except Exception as exc:
                filtered.cell.fail(exc)
                return
            if keep:
                filtered.cell.complete(ref)
            else:
                filtered.cell.fail(FilteredOut("continuation predicate rejected value"))

        self.cell.observe(on_ref, filtered.cell.fail)
        return filtered


class FilteredOut(Exception):
    """Failure reason carried by a continuation whose predicate said no.
    Never raised by the library; it travels inside the deferred."""


class ProtRef(TypedRef):
    """A typed reference that follows a protocol table.

    Sends return a :class:`Continuation`; each handled message yields a
    fresh reference at the successor interface, so a session is a chain of
    single-state references rather than one mutating handle.  The reference
    tracks the *client's* session view; the actor's own state advances
    independently and is only re-synchronized through resolutions.
    """

    def __init__(self, system: ActorSystem, target: ActorId,
                 interface: InterfaceId, table: ProtocolTable,
                 affine: bool = False, session: str | None = None):
        if not table.total_on(interface):
            missing = sorted(interface.kinds - set(table.entries))
            raise SubstitutionUnsafe(
                "table %r lacks successors for kinds %s of interface %s" %
                (table.name, missing, interface))
        super().__init__(system, target, interface, affine=affine, session=session)
        self.table = table

    def tell(self, message: Message) -> Continuation:
        """Send and hand back the continuation for the successor state."""
        self._gate(message)
        next_interface = self.table.successor_of(message.kind)
        cell = ContinuationCell(next_interface, self.session)
        self._system.tell(self.target, message, reply=cell, client=self.session)
        return Continuation(next_interface, cell)

    def narrow(self, expected: InterfaceId) -> "ProtRef":
        if not substitutable(self.interface, expected):
            raise SubstitutionUnsafe(
                "cannot narrow %s to %s: kinds %s are not offered" %
                (self.interface, expected,
                 sorted(expected.kinds - self.interface.kinds)))
        return ProtRef(self._system, self.target, expected, self.table,
                       affine=self.affine, session=self.session)

    def __repr__(self) -> str:
        flags = " affine" if self.affine else ""
        return "<ProtRef %s@%s%s>" % (self.target, self.interface, flags)


def resolve_continuation(ctx: ActorContext, cell: DeferredCell | None,
                         next_ref: ProtRef) -> None:
    """Actor-side completion of the envelope's continuation.

    Verifies that ``next_ref`` is typed exactly at the interface the sender's
    table promised (:class:`ProtocolBreach` otherwise) and stamps the
    sender's session label onto the fresh reference so per-client trace
    projections survive across steps.
    """
    if cell is None:
        raise ValueError("envelope carried no reply cell to resolve")
    expected = getattr(cell, "expected_interface", None)
    if expected is not None and next_ref.interface != expected:
        raise ProtocolBreach(
            "completion at %s but the sender's table promised %s" %
            (next_ref.interface, expected))
    if next_ref.session is None:
        next_ref.session = getattr(cell, "client", None) or ctx.client
    cell.complete(next_ref)


def expect_state(ref: ProtRef, expected: InterfaceId) -> ProtRef:
    """Certify that ``ref`` sits exactly at ``expected`` (no subsumption);
    returns the same reference unchanged or raises :class:`StateMismatch`."""
    if ref.interface != expected:
        raise StateMismatch(
            "reference is at %s, expected exactly %s" % (ref.interface, expected))
    return ref
