"""k-induction model checking and inductive validity cores for a Lustre subset."""

__version__ = "0.1.0"

from .engine import Counterexample, InductiveProof, Unknown, prove  # noqa: E402
from .ivc import IvcResult, check_ivc, compute_ivc, is_minimal, ivc_bf, ivc_uc, ivc_ucbf  # noqa: E402
from .smt import SolverConfig  # noqa: E402
from .transition import TransitionSystem, from_source, lower, restrict  # noqa: E402

__all__ = [
    "Counterexample", "InductiveProof", "Unknown", "prove", "IvcResult", "check_ivc",
    "compute_ivc", "is_minimal", "ivc_bf", "ivc_uc", "ivc_ucbf", "SolverConfig",
    "TransitionSystem", "from_source", "lower", "restrict",
]
