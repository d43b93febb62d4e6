"""Identification scheme over 2x2 matrices of truncated GF(2) polynomials,
plus a coefficient-tree attack on its keys and a framed wire format."""

from .f2poly import DimensionError, Endo, TruncPoly
from .matsemi import Mat2
from .protocol import (
    Challenge,
    Commitment,
    PrivateKey,
    PublicKey,
    Response,
    SessionConfig,
    Verdict,
    keygen,
    run_session,
)
from .attack import AttackConfig, OutcomeKind, planted_instance, tree_attack

__all__ = [
    "AttackConfig",
    "Challenge",
    "Commitment",
    "DimensionError",
    "Endo",
    "Mat2",
    "OutcomeKind",
    "PrivateKey",
    "PublicKey",
    "Response",
    "SessionConfig",
    "TruncPoly",
    "Verdict",
    "keygen",
    "planted_instance",
    "run_session",
    "tree_attack",
]
