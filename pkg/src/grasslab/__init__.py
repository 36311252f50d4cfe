"""Exact-rational toolkit for first-order two-component systems attached to
fourfolds in the Grassmannian Gr(3, 5)."""

from .classify import (
    Verdict, corpus, corpus_entry, derive_integrability_conditions,
    test_integrable, test_linearisable, test_linearly_degenerate, test_nondegenerate,
)
from .exprcore import Expr, Rat, VarTable, parse
from .jetspace import SystemEvol, SystemImplicit

__all__ = [
    "Expr", "Rat", "SystemEvol", "SystemImplicit", "VarTable", "Verdict", "corpus",
    "corpus_entry", "derive_integrability_conditions", "parse", "test_integrable",
    "test_linearisable", "test_linearly_degenerate", "test_nondegenerate",
]
