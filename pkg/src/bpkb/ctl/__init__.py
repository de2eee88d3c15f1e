from .checker import Checker, NFRejected, candidate_bindings, checker_for, eval, eval_open
from .nf import Disj, HoldsLit, Lit, NegGroup, NFReport, Reason, validate_nf

__all__ = [
    "Checker", "NFRejected", "candidate_bindings", "checker_for", "eval", "eval_open",
    "Disj", "HoldsLit", "Lit", "NegGroup", "NFReport", "Reason", "validate_nf",
]
