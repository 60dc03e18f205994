"""Typestate-checked actor references over a deterministic actor runtime,
with chemical (stash-and-replay) mailbox semantics and declarative protocol
documents."""

from .chemical import RetainedSet, chem_become, chem_react
from .errors import (AffinityViolation, BudgetExhausted, ChemactorsError,
                     DocumentError, DoubleCompletion, KindNotEnabled,
                     MessageNotInInterface, ProtocolBreach, ProtocolError,
                     SpecInvalid, SpecParseError, StateMismatch,
                     SubstitutionUnsafe, UnknownRole)
from .protocol import (Continuation, ContinuationCell, FilteredOut, ProtRef,
                       ProtocolTable, expect_state, resolve_continuation)
from .protocol_spec import (ProtocolSpec, StateDecl, TraceEvent, Verdict,
                            check_trace, derive_client_table, handled_events,
                            load_spec, load_spec_file, serialize_spec,
                            split_by_client, successor)
from .runtime import (ActorContext, ActorId, ActorSystem, Behavior,
                      DeadLetterLog, DeferredCell, Envelope, Message,
                      RAW_KIND, TraceStep, format_trace, parse_trace,
                      parse_trace_line, write_trace)
from .scenarios import (DEFAULT_USERS, SCENARIOS, ScenarioConfig,
                        SessionDriver, SessionStep, TraceReport,
                        builtin_spec_names, load_builtin, run_bookshop,
                        run_buffer_pc, run_buffer_single, run_buffer_untyped,
                        run_scenario, spec_path)
from .typed_refs import (EMPTY_INTERFACE, InterfaceId, MessageKind, TypedRef,
                         materialize_interfaces, narrow, substitutable)

__version__ = "0.1.0"
