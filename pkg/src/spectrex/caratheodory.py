"""Free Caratheodory expansions and dilation-growth statistics.

An interior point X0 is dilated (with the X0 block frozen) to an Arveson
extreme point Y, which is then decomposed into irreducible summands by
eigen-splitting along a non-scalar element of the symmetric commutant.
Compressing the accumulated basis back to the original coordinates yields
X0 = sum_i V_i^T X^i V_i with sum_i V_i^T V_i = I.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .dilation import DilateOptions, DilationTrace, dilate_to_extreme
from .errors import SpectrexError
from .extremality import YES, classify, is_irreducible, svec_indices
from .kernel import DEFAULT_TOLERANCES, delta
from .tuples import SymTuple, conjugate

CLUSTER_GAP = 1e-8
DROP_TERM_NORM = 1e-12


class ExpansionFailure(SpectrexError):
    """Dilation to Arveson extreme failed; the trace is attached."""

    def __init__(self, message, trace: DilationTrace | None = None):
        self.trace = trace
        super().__init__(message)


@dataclass(frozen=True)
class CarathTerm:
    point: SymTuple
    V: np.ndarray  # n_i x n0 compression
    irreducible: bool
    arveson: bool


@dataclass
class CarathExpansion:
    terms: list
    residual_point: float
    residual_isometry: float
    trace: DilationTrace

    @property
    def n_terms(self):
        return len(self.terms)

    def to_dict(self):
        return {
            "n_terms": self.n_terms,
            "levels": [t.point.n for t in self.terms],
            "residual_point": self.residual_point,
            "residual_isometry": self.residual_isometry,
            "terms_irreducible": [t.irreducible for t in self.terms],
            "terms_arveson": [t.arveson for t in self.terms],
            "trace": self.trace.to_dict(),
        }


def commutant_basis(X: SymTuple, mag=None, gap=None):
    """Orthonormal basis (svec coords) of symmetric S with [S, X_i] = 0."""
    cfg = DEFAULT_TOLERANCES
    mag = cfg.irr_mag if mag is None else mag
    gap = cfg.irr_gap if gap is None else gap
    Xf = X.to_float()
    n = Xf.n
    idx = svec_indices(n)
    cols = len(idx)
    M = np.zeros((Xf.g * n * n, cols))
    for ui, (p, q) in enumerate(idx):
        E = np.zeros((n, n))
        E[p, q] = 1.0
        E[q, p] = 1.0
        rows = [(Xi @ E - E @ Xi).ravel() for Xi in Xf.mats]
        M[:, ui] = np.concatenate(rows)
    _, sv, Vt = np.linalg.svd(M)
    i = delta(sv, mag, gap)
    rank = (i - 1) if i is not None else int(np.sum(sv > mag))
    return Vt[rank:, :], idx


def _unsvec(v, idx, n):
    S = np.zeros((n, n))
    for ui, (p, q) in enumerate(idx):
        S[p, q] = v[ui]
        S[q, p] = v[ui]
    return S


def _cluster(eigs):
    """Split sorted eigenvalues into groups separated by a relative gap."""
    span = max(float(eigs[-1] - eigs[0]), 1e-300)
    groups = [[0]]
    for i in range(1, len(eigs)):
        if eigs[i] - eigs[i - 1] > CLUSTER_GAP * max(span, 1.0):
            groups.append([])
        groups[-1].append(i)
    return groups


def split_irreducible(Y: SymTuple, rng, max_splits=None):
    """Orthonormal column blocks decomposing Y into irreducible summands.

    Returns a list of n x n_i matrices whose concatenation is orthogonal
    and block-diagonalizes every Y_i.  Splitting walks eigenspaces of a
    non-scalar commutant element and recurses.
    """
    Yf = Y.to_float()
    n = Yf.n
    cap = n if max_splits is None else max_splits
    done = []
    work = [np.eye(n)]
    splits = 0
    while work:
        basis = work.pop()
        sub = conjugate(basis, Yf)
        comm, idx = commutant_basis(sub)
        if comm.shape[0] <= 1 or sub.n == 1:
            done.append(basis)
            continue
        if splits >= cap:
            raise SpectrexError(
                f"irreducible decomposition exceeded {cap} splits"
            )
        m = sub.n
        S = None
        for _ in range(8):
            w = rng.standard_normal(comm.shape[0])
            cand = _unsvec(w @ comm, idx, m)
            cand = cand - (np.trace(cand) / m) * np.eye(m)
            if np.linalg.norm(cand) > 1e-10:
                S = cand / np.linalg.norm(cand)
                break
        if S is None:  # commutant numerically scalar after all
            done.append(basis)
            continue
        w_eig, V = np.linalg.eigh(S)
        groups = _cluster(w_eig)
        if len(groups) == 1:
            done.append(basis)
            continue
        splits += 1
        for grp in groups:
            work.append(basis @ V[:, grp])
    return done


def carath_expand(A: SymTuple, X0: SymTuple, seed=None,
                  cfg=DEFAULT_TOLERANCES, opts: DilateOptions | None = None
                  ) -> CarathExpansion:
    """Free Caratheodory expansion of X0 in D_A.

    Runs the frozen-purification dilation to an Arveson extreme point,
    decomposes into irreducible summands, and verifies the matrix convex
    reconstruction.  Terms whose compression does not touch the original
    coordinates are dropped.
    """
    base = opts or DilateOptions(target="arveson_only", purify="frozen", seed=seed)
    if base.target != "arveson_only" or base.purify != "frozen":
        base = DilateOptions(target="arveson_only", purify="frozen",
                             max_fails=base.max_fails, mode=base.mode,
                             seed=base.seed, sdp_tol=base.sdp_tol)
    trace = dilate_to_extreme(A, X0, base, cfg)
    if trace.verdict != "arveson":
        raise ExpansionFailure(
            f"dilation ended with verdict {trace.verdict!r}", trace=trace
        )
    Y = trace.final
    n0 = X0.n
    rng = np.random.default_rng(seed if seed is not None else 0)
    blocks = split_irreducible(Y, rng)

    terms = []
    for basis in blocks:
        Vi = basis[:n0, :].T  # n_i x n0
        if np.linalg.norm(Vi) <= DROP_TERM_NORM:
            continue
        Xi = conjugate(basis, Y)
        rep = classify(A, Xi, cfg)
        terms.append(CarathTerm(
            point=Xi, V=Vi,
            irreducible=is_irreducible(Xi, cfg.irr_mag, cfg.irr_gap),
            arveson=rep.arveson == YES,
        ))

    X0f = X0.to_float()
    recon = [np.zeros((n0, n0)) for _ in range(A.g)]
    iso = np.zeros((n0, n0))
    for t in terms:
        iso += t.V.T @ t.V
        for i in range(A.g):
            recon[i] += t.V.T @ t.point.mats[i] @ t.V
    residual_point = float(np.sqrt(sum(
        np.linalg.norm(recon[i] - X0f.mats[i]) ** 2 for i in range(A.g))))
    residual_isometry = float(np.linalg.norm(iso - np.eye(n0)))
    return CarathExpansion(terms, residual_point, residual_isometry, trace)


@dataclass
class MuStats:
    g: int
    d: int
    n0: int
    mus: list = field(default_factory=list)
    step_counts: list = field(default_factory=list)
    fails: int = 0
    mat_not_arv: int = 0

    @property
    def mean(self):
        return float(np.mean(self.mus)) if self.mus else float("nan")

    @property
    def std(self):
        return float(np.std(self.mus)) if self.mus else float("nan")

    @property
    def mu_est(self):
        return ceil(self.g * self.n0 / self.d) / (self.g * self.n0)

    def to_dict(self):
        return {
            "g": self.g, "d": self.d, "n0": self.n0,
            "trials": len(self.mus) + self.fails + self.mat_not_arv,
            "mean_mu": self.mean, "std_mu": self.std, "mu_est": self.mu_est,
            "fails": self.fails, "mat_not_arv": self.mat_not_arv,
            "min_steps": min(self.step_counts) if self.step_counts else None,
            "max_steps": max(self.step_counts) if self.step_counts else None,
        }


def mu_statistics(traces, g=None, d=None, n0=None) -> MuStats:
    """Aggregate mu over successful traces only.

    Failed runs and matrix-extreme-but-not-Arveson terminations are counted
    separately and excluded from every statistic.
    """
    traces = list(traces)
    if not traces and (g is None or d is None or n0 is None):
        raise SpectrexError("empty trace set needs explicit g, d, n0")
    if g is None:
        g = traces[0].g
    if n0 is None:
        n0 = traces[0].start_level
    if d is None:
        raise SpectrexError("d must be given (not recoverable from traces)")
    stats = MuStats(g=g, d=d, n0=n0)
    for tr in traces:
        if tr.verdict == "arveson":
            stats.mus.append(tr.mu)
            stats.step_counts.append(tr.n_steps)
        elif tr.verdict == "matrix_not_arveson":
            stats.mat_not_arv += 1
        else:
            stats.fails += 1
    if not stats.mus:
        raise SpectrexError("no successful traces: statistics undefined")
    return stats
