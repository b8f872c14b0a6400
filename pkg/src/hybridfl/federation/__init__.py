"""Protocol engine: aggregator and party state machines plus transports."""

from hybridfl.federation.aggregator import (
    ArityMismatchError,
    MixedQueryIdsError,
    Session,
    aggregate_encrypted,
    build_in_proc_session,
)
from hybridfl.federation.messages import (
    Query,
    QueryResponse,
    RoundTranscript,
    SessionConfig,
    decode_envelope,
    encode_envelope,
)
from hybridfl.federation.party import BudgetExhaustedError, Party, UnknownQueryKindError
from hybridfl.federation.transport import (
    AggregatorListener,
    ConnectionLostError,
    InProcChannel,
    RoundTimeoutError,
    in_proc_transport,
    run_party_client,
)

__all__ = [
    "AggregatorListener",
    "ArityMismatchError",
    "BudgetExhaustedError",
    "ConnectionLostError",
    "InProcChannel",
    "MixedQueryIdsError",
    "Party",
    "Query",
    "QueryResponse",
    "RoundTimeoutError",
    "RoundTranscript",
    "Session",
    "SessionConfig",
    "UnknownQueryKindError",
    "aggregate_encrypted",
    "build_in_proc_session",
    "decode_envelope",
    "encode_envelope",
    "in_proc_transport",
    "run_party_client",
]
