"""Error identities raised across the library.

Every violation has its own class so callers (and tests) can match on the
exact identity rather than parsing messages.  ``ChemactorsError`` is the
common root; ``ProtocolError`` groups the send-time and resolution-time
violations, ``DocumentError`` groups protocol-document problems.
"""

from __future__ import annotations


class ChemactorsError(Exception):
    """Root of the library's error hierarchy."""


class ProtocolError(ChemactorsError):
    """A send, resolution or coercion violated a typestate rule."""


class MessageNotInInterface(ProtocolError):
    """Message kind is not enabled by the reference's interface."""


class AffinityViolation(ProtocolError):
    """Second send attempted through an affine (use-at-most-once) reference."""


class SubstitutionUnsafe(ProtocolError):
    """Requested narrowing is not backed by kind-set inclusion."""


class ProtocolBreach(ProtocolError):
    """A continuation was resolved at an interface other than the one
    the sender's table promised."""


class DoubleCompletion(ProtocolError):
    """A single-assignment cell was completed twice."""


class StateMismatch(ProtocolError):
    """An exact-state coercion met a reference typed at a different state."""


class DocumentError(ChemactorsError):
    """Problem with a protocol document."""


class SpecParseError(DocumentError):
    """Document is not well-formed (bad JSON, wrong shapes, missing keys)."""


class SpecInvalid(DocumentError):
    """Document parsed but violates a validity rule (totality, unknown
    names, duplicate declarations, disagreeing client table)."""


class KindNotEnabled(DocumentError):
    """successor() asked about a kind the given state does not enable."""


class UnknownRole(DocumentError):
    """derive_client_table() asked for a role the document does not declare."""


class BudgetExhausted(ChemactorsError):
    """A run hit its step budget with mail still pending."""
