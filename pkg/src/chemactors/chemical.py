"""Chemical mailbox semantics: retain-unmatched-kinds, replay on become.

``chem_react`` wraps a behavior so that unmatched messages whose kind is in
the retained set are stashed (in arrival order) instead of dead-lettered.
``chem_become`` flushes the whole stash back into the mailbox and then
switches behavior, so every retained message gets re-matched against the new
state; whichever still does not match is simply stashed again and waits for
the next flush.  With the default ``stash`` variant the flushed envelopes
are prepended ahead of everything already queued, preserving their relative
arrival order; the ``resend`` variant (selected per actor at spawn time or
per call) appends them to the tail instead, which keeps no ordering promise
against newer mail.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable

from .runtime import ActorContext, Behavior

RetainedSet = frozenset


def chem_react(behavior: Behavior, retained: Iterable[str]) -> Behavior:
    """Behavior that stashes unmatched kinds from ``retained`` instead of
    dead-lettering them.  Wrapping an already-chemical behavior just replaces
    its retained set."""
    return replace(behavior, retained=frozenset(retained))


def chem_become(ctx: ActorContext, behavior: Behavior,
                variant: str | None = None) -> int:
    """Flush this actor's stash into its mailbox, then become ``behavior``.

    Returns the number of envelopes flushed (also recorded in the trace as a
    ``flush(n)`` event).  ``variant`` overrides the actor's spawn-time flush
    variant for this call only.
    """
    if variant is not None and variant not in ("stash", "resend"):
        raise ValueError(
            "variant must be 'stash' or 'resend', got %r" % (variant,))
    return ctx._chem_become(behavior, variant)
