"""Extreme-point equation systems, rank-nullity counts, and classification.

Each extremality notion corresponds to a homogeneous linear system in an
unknown tuple that must admit only the zero solution:

  arveson:        Lambda_A(beta^T) K = 0,   beta a g-tuple of n x 1 columns
  euclidean:      Lambda_A(beta) K = 0,     beta a symmetric g-tuple
  matrix_extreme: Lambda_{(I,A)}(b0,b) K = 0 and <(I,X),(b0,b)> = 0,
                  (b0,b) a symmetric (g+1)-tuple

with K an orthonormal basis of ker L_A(X).  Triviality of each nullspace is
decided by the first-numerical-zero rule at the extreme-equation tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutsideDomainError
from .kernel import DEFAULT_TOLERANCES, NumericalKernel, ToleranceConfig, delta, lmi_kernel
from .tuples import SymTuple, eval_pencil

YES, NO, INDETERMINATE = "yes", "no", "indeterminate"


def svec_indices(n):
    """Row-major upper-triangle enumeration (p, q), p <= q."""
    return [(p, q) for p in range(n) for q in range(p, n)]


def svec_layout(kind, g, n):
    """Human-readable description of the unknown ordering of a system."""
    if kind == "arveson":
        return f"beta[i][j] for i in 0..{g - 1}, j in 0..{n - 1} (column entries)"
    pairs = f"(p,q) row-major upper triangle of side {n}"
    if kind == "euclidean":
        return f"beta_i[p,q] for i in 0..{g - 1}, {pairs}; off-diagonals accumulated"
    return (
        f"beta_i[p,q] for i in 0..{g} (i=0 the inhomogeneous part), {pairs}; "
        "off-diagonals accumulated; final row is the trace constraint against (I,X)"
    )


@dataclass(frozen=True)
class EquationMatrix:
    """Materialized extreme-equation system."""

    kind: str  # arveson | euclidean | matrix_extreme
    rows: int
    cols: int
    data: np.ndarray
    unknown_layout: str

    def singular_values(self):
        if self.rows == 0 or self.cols == 0:
            return np.zeros(0)
        return np.linalg.svd(self.data, compute_uv=False)


@dataclass(frozen=True)
class DilationSubspace:
    """Orthonormal basis of the solutions of the Arveson system.

    Each basis element is a g-tuple of n x 1 columns flattened in the
    Arveson unknown layout.
    """

    basis: np.ndarray  # dim x (g*n), rows orthonormal
    dim: int
    g: int
    n: int

    def beta(self, idx):
        """The idx-th basis vector as a g-sequence of (n,) arrays."""
        v = self.basis[idx]
        return [v[i * self.n : (i + 1) * self.n] for i in range(self.g)]


@dataclass(frozen=True)
class ExtremeReport:
    k: int
    dil_dim: int
    counts: tuple  # (ArvCT, EucCT, MatCT)
    euclidean: str
    matrix: str
    arveson: str
    irreducible: str
    free: str
    evidence: dict  # kind -> (sigma_min, sigma_max)

    def to_dict(self):
        return {
            "k": self.k,
            "dil_dim": self.dil_dim,
            "counts": {"arveson": self.counts[0], "euclidean": self.counts[1],
                       "matrix": self.counts[2]},
            "flags": {"euclidean": self.euclidean, "matrix": self.matrix,
                      "arveson": self.arveson, "irreducible": self.irreducible,
                      "free": self.free},
            "evidence": {k: {"sigma_min": v[0], "sigma_max": v[1]}
                         for k, v in self.evidence.items()},
        }


def rank_nullity_counts(g: int, d: int, n: int):
    """(ArvCT, EucCT, MatCT): minimal kernel dimensions forced by counting."""
    arv = math.ceil(g * n / d)
    euc = math.ceil(g * (n + 1) / (2 * d))
    mat = math.ceil((n + 1) * (g + 1) / (2 * d) - 1.0 / (n * d))
    return arv, euc, mat


def arveson_system(A: SymTuple, X: SymTuple, K: NumericalKernel) -> EquationMatrix:
    """Matrix of beta -> Lambda_A(beta^T) K over the gn column unknowns."""
    d, n, g = A.n, X.n, A.g
    k = K.k if K is not None else 0
    cols = g * n
    if k == 0:
        return EquationMatrix("arveson", 0, cols, np.zeros((0, cols)),
                              svec_layout("arveson", g, n))
    Af = A.to_float()
    M = np.zeros((d * k, cols))
    # (Lambda_A(beta^T) K)[r, c] = sum_i sum_{s,j} A_i[r,s] beta_i[j] K[s*n+j, c]
    for i in range(g):
        Ai = Af.mats[i]
        for j in range(n):
            col = i * n + j
            block = Ai @ K.basis[j::n, :]  # rows s of K at index s*n+j
            M[:, col] = block.flatten(order="C")
    return EquationMatrix("arveson", d * k, cols, M, svec_layout("arveson", g, n))


def _sym_unknown_columns(Alist, K, n, trace_against=None):
    """Columns of (b_i) -> sum_i A_i (x) b_i K over svec unknowns.

    Alist is the list of coefficient matrices paired with each symmetric
    unknown b_i.  When trace_against is given (a list of matrices T_i), an
    extra final row tr(sum_i T_i^T b_i) is appended.
    """
    d = Alist[0].shape[0]
    k = K.k
    idx = svec_indices(n)
    cols = len(Alist) * len(idx)
    extra = 1 if trace_against is not None else 0
    M = np.zeros((d * n * k + extra, cols))
    for i, Ai in enumerate(Alist):
        for ui, (p, q) in enumerate(idx):
            col = i * len(idx) + ui
            # E has 1 at (p,q) and (q,p): duplicated off-diagonal unknowns
            # are represented once with accumulated coefficients.
            contrib = np.zeros((d * n, k))
            Kq = K.basis[q::n, :]  # K rows s*n+q
            Kp = K.basis[p::n, :]
            # (A_i (x) E) K rows (r, a): A_i[r, s] E[a, b] K[s n + b]
            blk_p = Ai @ Kq  # for a = p (E[p,q] = 1)
            contrib[p::n, :] += blk_p
            if p != q:
                contrib[q::n, :] += Ai @ Kp
            M[: d * n * k, col] = contrib.flatten(order="F")
            if trace_against is not None:
                Ti = trace_against[i]
                M[d * n * k, col] = Ti[p, q] + (Ti[q, p] if p != q else 0.0)
    return M


def euclidean_system(A: SymTuple, X: SymTuple, K: NumericalKernel) -> EquationMatrix:
    """Matrix of symmetric beta -> Lambda_A(beta) K; g n(n+1)/2 unknowns."""
    d, n, g = A.n, X.n, A.g
    cols = g * n * (n + 1) // 2
    if K is None or K.k == 0:
        return EquationMatrix("euclidean", 0, cols, np.zeros((0, cols)),
                              svec_layout("euclidean", g, n))
    Af = A.to_float()
    M = _sym_unknown_columns(list(Af.mats), K, n)
    return EquationMatrix("euclidean", M.shape[0], cols, M,
                          svec_layout("euclidean", g, n))


def matrix_extreme_system(A: SymTuple, X: SymTuple, K: NumericalKernel) -> EquationMatrix:
    """System for (b0, b): dnk pencil rows plus the trace-orthogonality row."""
    d, n, g = A.n, X.n, A.g
    cols = (g + 1) * n * (n + 1) // 2
    if K is None or K.k == 0:
        return EquationMatrix("matrix_extreme", 0, cols, np.zeros((0, cols)),
                              svec_layout("matrix_extreme", g, n))
    Af = A.to_float()
    Xf = X.to_float()
    Alist = [np.eye(d)] + list(Af.mats)
    Tlist = [np.eye(n)] + list(Xf.mats)
    M = _sym_unknown_columns(Alist, K, n, trace_against=Tlist)
    return EquationMatrix("matrix_extreme", M.shape[0], cols, M,
                          svec_layout("matrix_extreme", g, n))


def _nullspace_verdict(system: EquationMatrix, cfg: ToleranceConfig):
    """(flag, sigma_min, sigma_max): is the nullspace trivial?

    yes   -> only the zero solution (the extremality holds)
    no    -> a nontrivial solution exists
    indeterminate -> smallest singular value in the [ee_mag, 10 ee_mag) band
    """
    if system.rows == 0:
        return NO, 0.0, 0.0  # empty system: everything solves
    if system.cols > system.rows:
        sv = system.singular_values()
        return NO, float(sv[-1]), float(sv[0])  # nullity forced by counting
    sv = system.singular_values()
    smin, smax = float(sv[-1]), float(sv[0])
    if delta(sv, cfg.ee_mag, cfg.ee_gap) is not None:
        return NO, smin, smax
    if smin < cfg.ee_mag:
        # all-tiny spectrum without a gap: treat lead value as the decider
        return (NO if smax < cfg.ee_mag else INDETERMINATE), smin, smax
    if smin < 10.0 * cfg.ee_mag:
        return INDETERMINATE, smin, smax
    return YES, smin, smax


def dilation_subspace(A: SymTuple, X: SymTuple,
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                      kernel: NumericalKernel | None = None) -> DilationSubspace:
    """Orthonormal basis of the Arveson-system nullspace.

    Interior points (no pencil kernel) yield the full space R^{gn}.
    """
    g, n = A.g, X.n
    if kernel is None:
        kernel = lmi_kernel(A, X, cfg)
    cols = g * n
    if kernel is None or kernel.k == 0:
        return DilationSubspace(np.eye(cols), cols, g, n)
    system = arveson_system(A, X, kernel)
    _, _, Vt = np.linalg.svd(system.data, full_matrices=True)
    sv = np.linalg.svd(system.data, compute_uv=False)
    idx = delta(sv, cfg.ee_mag, cfg.ee_gap)
    rank = (idx - 1) if idx is not None else int(np.sum(sv > cfg.ee_mag))
    rank = min(rank, cols)
    basis = Vt[rank:, :]
    return DilationSubspace(basis, cols - rank, g, n)


def is_irreducible(X: SymTuple, mag: float | None = None,
                   gap: float | None = None) -> bool:
    """No common reducing subspace over R.

    Decided through the symmetric commutant: X is irreducible iff the space
    of symmetric S with X_i S = S X_i for all i has dimension 1 (spanned by
    the identity).  The commutator map is stacked over svec unknowns and its
    nullity read off with the first-numerical-zero rule.
    """
    cfg = DEFAULT_TOLERANCES
    mag = cfg.irr_mag if mag is None else mag
    gap = cfg.irr_gap if gap is None else gap
    Xf = X.to_float()
    n = Xf.n
    if n == 1:
        return True
    idx = svec_indices(n)
    cols = len(idx)
    M = np.zeros((Xf.g * n * n, cols))
    for ui, (p, q) in enumerate(idx):
        E = np.zeros((n, n))
        E[p, q] = 1.0
        E[q, p] = 1.0
        rows = []
        for Xi in Xf.mats:
            rows.append((Xi @ E - E @ Xi).ravel())
        M[:, ui] = np.concatenate(rows)
    sv = np.linalg.svd(M, compute_uv=False)
    i = delta(sv, mag, gap)
    nullity = (cols - (i - 1)) if i is not None else cols - int(np.sum(sv > mag))
    return nullity <= 1


def kriel_matrix_extreme_oracle(A: SymTuple, X: SymTuple,
                                kernel: NumericalKernel,
                                rank_tol: float = 1e-9) -> bool:
    """Independent matrix-extremality test via kernel containment.

    X is matrix extreme iff every symmetric (g+1)-tuple (b0, b) whose
    homogeneous pencil annihilates ker L_A(X) lies in span((I, X)): the
    solution space of the plain pencil rows (no trace row) must have
    dimension exactly 1.  Rank is measured directly from singular values,
    independently of the delta rule and the trace-row construction.
    """
    d, n, g = A.n, X.n, A.g
    Af, Xf = A.to_float(), X.to_float()
    Alist = [np.eye(d)] + list(Af.mats)
    M = _sym_unknown_columns(Alist, kernel, n)
    sv = np.linalg.svd(M, compute_uv=False)
    cols = M.shape[1]
    rank = int(np.sum(sv > rank_tol * max(1.0, sv[0])))
    return (cols - rank) == 1


def classify(A: SymTuple, X: SymTuple,
             cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ExtremeReport:
    """Full extremality report for X in D_A.

    Rejects points outside D_A beyond psd_slack.  Count gates (kernel too
    small for the rank-nullity count) force a "no" without consulting the
    equation spectrum.
    """
    Af, Xf = A.to_float(), X.to_float()
    L = eval_pencil(Af, Xf).matrix
    w = np.linalg.eigvalsh(L)
    if w[0] < -cfg.psd_slack:
        raise OutsideDomainError(float(w[0]), cfg.psd_slack)

    g, d, n = A.g, A.n, X.n
    counts = rank_nullity_counts(g, d, n)
    kernel = lmi_kernel(Af, Xf, cfg)
    k = kernel.k if kernel is not None else 0

    evidence = {}
    if k == 0:
        dil = g * n  # interior: every beta dilates
        irr = YES if is_irreducible(Xf, cfg.irr_mag, cfg.irr_gap) else NO
        return ExtremeReport(0, dil, counts, NO, NO, NO, irr, NO, evidence)

    arv_sys = arveson_system(Af, Xf, kernel)
    euc_sys = euclidean_system(Af, Xf, kernel)
    mat_sys = matrix_extreme_system(Af, Xf, kernel)

    arv, smin, smax = _nullspace_verdict(arv_sys, cfg)
    evidence["arveson"] = (smin, smax)
    euc, smin, smax = _nullspace_verdict(euc_sys, cfg)
    evidence["euclidean"] = (smin, smax)
    mat, smin, smax = _nullspace_verdict(mat_sys, cfg)
    evidence["matrix_extreme"] = (smin, smax)

    # count gates (Corollary-level necessities)
    if k < counts[0]:
        arv = NO
    if k < counts[1]:
        euc = NO
    if k < counts[2]:
        mat = NO

    sub = dilation_subspace(Af, Xf, cfg, kernel=kernel)
    irr = YES if is_irreducible(Xf, cfg.irr_mag, cfg.irr_gap) else NO

    if arv == YES and irr == YES:
        free = YES
    elif arv == NO or irr == NO:
        free = NO
    else:
        free = INDETERMINATE
    return ExtremeReport(k, sub.dim, counts, euc, mat, arv, irr, free, evidence)
