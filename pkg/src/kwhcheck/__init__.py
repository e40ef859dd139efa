"""Verification and simulation of card-based AND protocols.

Protocols are written in the ``.cbp`` language (:mod:`kwhcheck.dsl`),
explored symbolically as KWH-trees (:mod:`kwhcheck.engine`), judged by
:mod:`kwhcheck.verifier` and played on concrete decks by
:mod:`kwhcheck.simulator`.
"""
from .cards import Card, Permutation, Sequence, ShuffleSpec, generated_group, is_closed, is_uniform
from .dsl import DslError, Mode, ProtocolAst, parse_protocol, render_protocol, validate
from .engine import KwhTree, SecurityLeak, build_kwh_tree
from .symbolic import ProbPoly
from .verifier import Metric, TerminationClass, VerificationReport, expected_runtime, full_report

__version__ = "0.1.0"

__all__ = [
    "Card", "DslError", "KwhTree", "Metric", "Mode", "Permutation", "ProbPoly", "ProtocolAst",
    "SecurityLeak", "Sequence", "ShuffleSpec", "TerminationClass", "VerificationReport",
    "build_kwh_tree", "expected_runtime", "full_report", "generated_group", "is_closed",
    "is_uniform", "parse_protocol", "render_protocol", "validate",
]
