"""Numerical zero-calling and kernel extraction for pencil evaluations.

The first-numerical-zero rule turns a descending list of singular (or
absolute eigen-) values into a cut index: the first entry that is both
small in magnitude and separated from its predecessor by a large relative
gap.  Everything downstream that needs a rank decision goes through it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SpectrexError
from .tuples import SymTuple, eval_pencil


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances for kernel and extreme-equation decisions.

    lmi_mag/lmi_gap gate the nullspace of L_A(X) (tight, post-purification
    operating point); lmi_mag_loose/lmi_gap_loose are the pre-purification
    pair used to find the kernel that purification sharpens.  ee_mag/ee_gap
    gate the extreme-equation systems.  purify_eps bounds the entrywise
    perturbation of Nullspace Purification, psd_slack the final positivity
    check.
    """

    lmi_mag: float = 1e-11
    lmi_gap: float = 1e-11
    ee_mag: float = 1e-15
    ee_gap: float = 1e-15
    purify_eps: float = 1e-7
    psd_slack: float = 1e-11
    lmi_mag_loose: float = 1e-7
    lmi_gap_loose: float = 1e-2
    irr_mag: float = 1e-10
    irr_gap: float = 1e-4

    def __post_init__(self):
        for name in (
            "lmi_mag", "lmi_gap", "ee_mag", "ee_gap", "purify_eps",
            "psd_slack", "lmi_mag_loose", "lmi_gap_loose", "irr_mag", "irr_gap",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def with_updates(self, **kw):
        return replace(self, **kw)


DEFAULT_TOLERANCES = ToleranceConfig()


@dataclass(frozen=True)
class NumericalKernel:
    """Orthonormal basis of the numerical nullspace of a pencil evaluation.

    basis is dn x k column-orthonormal; first_zero_index is the 1-based
    index into the descending value list where the zero block starts;
    accuracy is the magnitude of that first numerical zero.
    """

    basis: np.ndarray
    k: int
    first_zero_index: int
    accuracy: float


def delta(singular_values, eps_mag: float, eps_gap: float):
    """Index (1-based) of the first numerical zero, or None.

    The input must be sorted descending.  The first numerical zero is the
    smallest index i >= 2 with value < eps_mag and ratio to its predecessor
    < eps_gap (strict inequalities; ties resolve as "not zero").
    """
    vals = [abs(float(v)) for v in singular_values]
    if len(vals) == 0:
        raise SpectrexError("delta needs at least one value")
    for i in range(1, len(vals)):
        if vals[i] > vals[i - 1] * (1 + 1e-12) + 1e-300:
            raise SpectrexError("delta input is not sorted descending")
        if vals[i] < eps_mag and (vals[i - 1] == 0.0 or vals[i] / vals[i - 1] < eps_gap):
            return i + 1  # 1-based
    return None


def lmi_kernel(A: SymTuple, X: SymTuple, cfg: ToleranceConfig = DEFAULT_TOLERANCES,
               loose: bool = False):
    """Numerical kernel of L_A(X), or None for an interior point.

    Eigenvalues are used instead of singular values (L_A(X) is symmetric
    and PSD on the domain); delta consumes their absolute values sorted
    descending.  ``loose`` selects the pre-purification tolerance pair.
    """
    L = eval_pencil(A.to_float(), X.to_float()).matrix
    try:
        w, V = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise SpectrexError(f"eigensolver failed on L_A(X): {exc}") from exc
    order = np.argsort(-np.abs(w))
    vals = np.abs(w[order])
    mag = cfg.lmi_mag_loose if loose else cfg.lmi_mag
    gap = cfg.lmi_gap_loose if loose else cfg.lmi_gap
    idx = delta(vals, mag, gap)
    if idx is None:
        return None
    dn = L.shape[0]
    k = dn - idx + 1
    basis = V[:, order[idx - 1 :]]
    return NumericalKernel(basis=basis, k=k, first_zero_index=idx,
                           accuracy=float(vals[idx - 1]))


def psd_within_slack(M: np.ndarray, slack: float) -> bool:
    """True iff min eigenvalue of symmetric M is >= -slack."""
    w = np.linalg.eigvalsh(np.asarray(M, dtype=float))
    return bool(w[0] >= -slack)
