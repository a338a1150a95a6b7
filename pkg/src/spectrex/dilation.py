"""Maximal 1-dilations, the extremal dilation loop, and Nullspace
Purification (full and frozen variants).

A dilation step appends one row/column to the current point:

    Y' = [[Y, c b], [c b^T, gamma]]

with b drawn from the dilation subspace and (c, gamma) solving the
c-maximization program over the dilated pencil.  Because b annihilates the
pencil kernel, the dilated pencil is singular on a fixed subspace for every
(c, gamma); the program is compressed onto the orthogonal complement of
that subspace before the barrier solver sees it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpectrexError
from .extremality import YES, classify, dilation_subspace
from .kernel import DEFAULT_TOLERANCES, ToleranceConfig, delta, lmi_kernel, psd_within_slack
from .solvers import LinearProgram, LmiProgram, solve_lmi_max, solve_lp
from .tuples import SymTuple, dilate_point, eval_pencil, lambda_raw

DEGENERATE_C = 1e-10


@dataclass(frozen=True)
class DilationStep:
    beta: list  # g-sequence of (n,) arrays, unit norm
    c: float
    gamma: np.ndarray  # length-g vector
    retries: int
    purified: bool
    accuracy_before: float
    accuracy_after: float


@dataclass
class DilationTrace:
    start_level: int
    g: int
    steps: list = field(default_factory=list)
    final: SymTuple | None = None
    verdict: str = "failed"  # arveson | matrix_not_arveson | failed
    reports: list = field(default_factory=list)
    initial_dil_dim: int | None = None

    @property
    def mu(self):
        if self.final is None:
            return None
        n0 = self.start_level
        return (self.final.n - n0) / (self.g * n0)

    @property
    def n_steps(self):
        return len(self.steps)

    def to_dict(self):
        return {
            "start_level": self.start_level,
            "g": self.g,
            "verdict": self.verdict,
            "steps": [
                {
                    "c": s.c,
                    "gamma": [float(x) for x in s.gamma],
                    "retries": s.retries,
                    "purified": s.purified,
                    "accuracy_before": s.accuracy_before,
                    "accuracy_after": s.accuracy_after,
                }
                for s in self.steps
            ],
            "final_level": self.final.n if self.final is not None else None,
            "mu": self.mu,
            "initial_dil_dim": self.initial_dil_dim,
        }


def to_boundary(A: SymTuple, X: SymTuple, rng=None, max_attempts: int = 6) -> SymTuple:
    """Scale X along its ray to the boundary of D_A.

    Y = X / (1 - lambda) with lambda the smallest eigenvalue of L_A(X).
    The degenerate lambda ~ 1 case (essentially X = 0 for a bounded domain)
    is handled by a delta = 1/2 rescale and, failing that, a small ray
    perturbation.
    """
    Af = A.to_float()
    X = X.to_float()
    if rng is None:
        rng = np.random.default_rng(0)
    for _ in range(max_attempts):
        lam = float(np.linalg.eigvalsh(eval_pencil(Af, X).matrix)[0])
        if abs(1.0 - lam) >= 1e-9:
            Y = SymTuple([Xi / (1.0 - lam) for Xi in X.mats])
            return Y
        X = SymTuple([Xi / 2.0 for Xi in X.mats])
        lam = float(np.linalg.eigvalsh(eval_pencil(Af, X).matrix)[0])
        if abs(1.0 - lam) >= 1e-9:
            continue
        # X is (numerically) the origin: perturb the ray
        bump = []
        for _i in range(X.g):
            B = rng.standard_normal((X.n, X.n))
            bump.append((B + B.T) / 2.0)
        nrm = max(np.linalg.norm(np.stack(bump)), 1e-300)
        X = SymTuple([Xi + 1e-3 * Bi / nrm for Xi, Bi in zip(X.mats, bump)])
    raise SpectrexError("to_boundary failed to leave the degenerate ray")


def random_beta(subspace, rng):
    """Random convex combination of the subspace basis, unit normalized."""
    if subspace.dim < 1:
        raise SpectrexError("dilation subspace is trivial: no dilation exists")
    w = rng.random(subspace.dim)
    w = w / np.sum(w)
    v = w @ subspace.basis
    nrm = np.linalg.norm(v)
    if nrm < 1e-14:  # pragma: no cover - convex combo of orthonormal rows
        v = subspace.basis[0]
        nrm = 1.0
    v = v / nrm
    n = subspace.n
    return [v[i * n : (i + 1) * n] for i in range(subspace.g)]


def _embed_kernel(K: np.ndarray, d: int, n: int) -> np.ndarray:
    """Lift a dn x k kernel basis into the d(n+1)-dimensional dilated space."""
    k = K.shape[1]
    out = np.zeros((d * (n + 1), k))
    for s in range(d):
        out[s * (n + 1) : s * (n + 1) + n, :] = K[s * n : (s + 1) * n, :]
    return out


def _dilation_program(A: SymTuple, Y: SymTuple, beta, kernel):
    """Compressed LMI data for max c over the 2x2 block dilation."""
    Af, Yf = A.to_float(), Y.to_float()
    d, n, g = Af.n, Yf.n, Af.g
    side = d * (n + 1)
    pad = []
    for Yi in Yf.mats:
        m = np.zeros((n + 1, n + 1))
        m[:n, :n] = Yi
        pad.append(m)
    F0 = np.eye(side) + lambda_raw(Af, pad)
    Bmats = []
    for bi in beta:
        m = np.zeros((n + 1, n + 1))
        m[:n, n] = bi
        m[n, :n] = bi
        Bmats.append(m)
    Fc = lambda_raw(Af, Bmats)
    E = np.zeros((n + 1, n + 1))
    E[n, n] = 1.0
    Fgam = [np.kron(Af.mats[j], E) for j in range(g)]

    if kernel is not None and kernel.k > 0:
        Kp = _embed_kernel(kernel.basis, d, n)
        # orthonormal complement of the structurally-null subspace
        _, _, Vt = np.linalg.svd(Kp.T, full_matrices=True)
        Q = Vt[kernel.k :, :].T
        F0 = Q.T @ F0 @ Q
        Fc = Q.T @ Fc @ Q
        Fgam = [Q.T @ Fj @ Q for Fj in Fgam]
    return F0, Fc, Fgam


def maximal_one_dilation(A: SymTuple, Y: SymTuple, beta, mode: str = "keep_gamma",
                         kernel=None, rng=None,
                         cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                         sdp_tol: float = 1e-9):
    """Solve the c-maximization over (c, gamma) and assemble the dilation.

    Returns (step, new_point) or None for a failed try (non-optimal solve
    or degenerate c).  mode "keep_gamma" keeps the gamma produced by the
    c-solve; "two_stage" re-maximizes a random linear functional of gamma
    at (slightly backed off) optimal c.
    """
    Af, Yf = A.to_float(), Y.to_float()
    g = Af.g
    if kernel is None:
        kernel = lmi_kernel(Af, Yf, cfg)
    if kernel is not None and kernel.k > 0:
        resid = np.linalg.norm(lambda_raw(Af, [np.asarray(b).reshape(1, -1) for b in beta])
                               @ kernel.basis)
        if resid > 1e-6:
            raise SpectrexError(
                f"beta violates the dilation-subspace equations (residual {resid:.2e})"
            )
    F0, Fc, Fgam = _dilation_program(Af, Yf, beta, kernel)
    obj = np.zeros(1 + g)
    obj[0] = 1.0
    prog = LmiProgram(F0, [Fc] + Fgam, obj)
    res = solve_lmi_max(prog, tol=sdp_tol)
    if res.status != "optimal":
        return None
    c = float(res.y[0])
    gamma = np.array(res.y[1:], dtype=float)
    if c <= DEGENERATE_C:
        return None

    if mode == "two_stage":
        if rng is None:
            rng = np.random.default_rng(0)
        ell = rng.standard_normal(g)
        ell /= np.linalg.norm(ell)
        c_fixed = c * (1.0 - 1e-9)  # restore strict feasibility in gamma
        prog2 = LmiProgram(F0 + c_fixed * Fc, Fgam, ell)
        res2 = solve_lmi_max(prog2, tol=sdp_tol)
        if res2.status == "optimal":
            gamma = np.array(res2.y, dtype=float)
            c = c_fixed
    elif mode != "keep_gamma":
        raise ValueError(f"unknown dilation mode {mode!r}")

    new_point = dilate_point(Yf, [c * np.asarray(b) for b in beta], gamma)
    acc = kernel.accuracy if kernel is not None else 0.0
    step = DilationStep(beta=[np.asarray(b).copy() for b in beta], c=c,
                        gamma=gamma, retries=0, purified=False,
                        accuracy_before=float(acc), accuracy_after=float("nan"))
    return step, new_point


def _purify_lp(A: SymTuple, X: SymTuple, kernel, cfg, frozen_n0=None):
    """Build and solve the purification LP; returns the perturbation tuple.

    Unknowns are the svec entries of the symmetric perturbation Y (entries
    touching the frozen top-left n0 block are excluded in the frozen
    variant), plus the objective variable eta.  Every entry of the
    compressed block K^T L_A(X+Y) K is bounded by eta, not only the
    diagonal: the kernel basis diagonalizes the block at Y = 0, and
    controlling the off-diagonal terms keeps the sharpened eigenvalues at
    the eta level no matter which optimal vertex the simplex returns.
    """
    Af, Xf = A.to_float(), X.to_float()
    d, n, g = Af.n, Xf.n, Af.g
    K = kernel.basis
    k = kernel.k
    unknowns = []
    for j in range(g):
        for p in range(n):
            for q in range(p, n):
                if frozen_n0 is not None and p < frozen_n0 and q < frozen_n0:
                    continue
                unknowns.append((j, p, q))
    nu = len(unknowns)
    if nu == 0:
        return SymTuple.zeros(g, n), 0.0

    L = eval_pencil(Af, Xf).matrix
    KLK = K.T @ L @ K
    pairs = [(i, j) for i in range(k) for j in range(i, k)]
    b = np.array([KLK[i, j] for (i, j) in pairs])

    coef = np.zeros((len(pairs), nu))
    for u, (j, p, q) in enumerate(unknowns):
        Kq = K[q::n, :]
        Kp = K[p::n, :]
        AKq = Af.mats[j] @ Kq
        AKp = Af.mats[j] @ Kp
        # [K^T (A_j (x) E_pq) K]_{rc} with E symmetric at (p,q)
        blk = Kp.T @ AKq
        if p != q:
            blk = blk + Kq.T @ AKp
        blk = (blk + blk.T) / 2.0
        for t, (r, c) in enumerate(pairs):
            coef[t, u] = blk[r, c]

    eps = cfg.purify_eps
    # variables: z (nu) then eta
    G_rows, h_rows = [], []
    for t in range(len(pairs)):
        row = np.zeros(nu + 1)
        row[:nu] = coef[t]
        row[nu] = -1.0
        G_rows.append(row.copy())
        h_rows.append(-b[t])
        row2 = np.zeros(nu + 1)
        row2[:nu] = -coef[t]
        row2[nu] = -1.0
        G_rows.append(row2)
        h_rows.append(b[t])
    for u in range(nu):
        row = np.zeros(nu + 1)
        row[u] = 1.0
        G_rows.append(row.copy())
        h_rows.append(eps)
        row2 = np.zeros(nu + 1)
        row2[u] = -1.0
        G_rows.append(row2)
        h_rows.append(eps)
    c_obj = np.zeros(nu + 1)
    c_obj[nu] = 1.0
    res = solve_lp(LinearProgram(c_obj, G=np.array(G_rows), h=np.array(h_rows)))
    if res.status != "optimal":  # Y = 0 is always feasible
        raise SpectrexError(f"purification LP unexpectedly {res.status}")
    eta0 = float(np.max(np.abs(b)))
    if res.objective >= eta0 * (1.0 - 1e-12):
        return SymTuple.zeros(g, n), eta0  # no improvement possible
    z = res.x[:nu]
    mats = [np.zeros((n, n)) for _ in range(g)]
    for u, (j, p, q) in enumerate(unknowns):
        mats[j][p, q] = z[u]
        mats[j][q, p] = z[u]
    return SymTuple(mats), float(res.objective)


def purify_full(A: SymTuple, X: SymTuple,
                cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SymTuple:
    """Full Nullspace Purification: entrywise LP sharpening of the kernel."""
    kernel = lmi_kernel(A, X, cfg, loose=True)
    if kernel is None:
        raise SpectrexError("purification requires a numerical boundary point")
    Y, _ = _purify_lp(A, X, kernel, cfg)
    if all(np.all(m == 0.0) for m in Y.mats):
        return X.to_float()
    return SymTuple([Xi + Yi for Xi, Yi in zip(X.to_float().mats, Y.mats)])


def purify_frozen(A: SymTuple, X: SymTuple, n0: int,
                  cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SymTuple:
    """Frozen Nullspace Purification: the top-left n0 block is untouchable.

    The returned tuple's frozen block equals the input's bitwise.
    """
    if not (0 < n0 <= X.n):
        raise SpectrexError(f"frozen block size {n0} out of range for level {X.n}")
    kernel = lmi_kernel(A, X, cfg, loose=True)
    if kernel is None:
        raise SpectrexError("purification requires a numerical boundary point")
    if n0 == X.n:
        return X.to_float()  # trivial partition: identity
    Y, _ = _purify_lp(A, X, kernel, cfg, frozen_n0=n0)
    Xf = X.to_float()
    if all(np.all(m == 0.0) for m in Y.mats):
        return Xf
    return SymTuple([Xi + Yi for Xi, Yi in zip(Xf.mats, Y.mats)])


@dataclass(frozen=True)
class DilateOptions:
    target: str = "matrix_or_arveson"  # or "arveson_only"
    max_fails: int = 10
    purify: str = "full"  # full | frozen | off
    mode: str = "keep_gamma"  # or two_stage
    seed: int | None = None
    sdp_tol: float = 1e-9


def dilate_to_extreme(A: SymTuple, X: SymTuple,
                      opts: DilateOptions = DilateOptions(),
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> DilationTrace:
    """Dilate X until the target extremality is reached.

    Loop: classify; stop when the target is met; otherwise draw a random
    direction from the dilation subspace, take a maximal 1-dilation, purify,
    and repeat.  Failed tries (non-optimal solve, degenerate c, or no kernel
    growth) are retried with fresh directions up to max_fails per level;
    exhaustion, or exceeding the theoretical level budget, yields a failed
    verdict with the trace retained.
    """
    if opts.target not in ("matrix_or_arveson", "arveson_only"):
        raise ValueError(f"unknown target {opts.target!r}")
    rng = np.random.default_rng(opts.seed)
    Af = A.to_float()
    Y = X.to_float()
    n0 = Y.n
    trace = DilationTrace(start_level=n0, g=Af.g)
    max_level = n0 + Af.g * n0 + 2  # convergence bound plus slack

    while True:
        report = classify(Af, Y, cfg)
        trace.reports.append(report)
        if report.arveson == YES:
            trace.final = Y
            trace.verdict = "arveson"
            break
        if opts.target == "matrix_or_arveson" and report.matrix == YES:
            trace.final = Y
            trace.verdict = "matrix_not_arveson"
            break
        if Y.n >= max_level:
            trace.final = Y
            trace.verdict = "failed"
            break

        kernel = lmi_kernel(Af, Y, cfg)
        if kernel is None:
            kernel = lmi_kernel(Af, Y, cfg, loose=True)
        k_before = kernel.k if kernel is not None else 0
        sub = dilation_subspace(Af, Y, cfg, kernel=kernel)
        if trace.initial_dil_dim is None:
            trace.initial_dil_dim = sub.dim
        if sub.dim == 0:
            trace.final = Y
            trace.verdict = "failed"  # no dilation available, target unmet
            break

        retries = 0
        accepted = None
        while retries < opts.max_fails:
            beta = random_beta(sub, rng)
            out = maximal_one_dilation(Af, Y, beta, opts.mode, kernel, rng, cfg,
                                       sdp_tol=opts.sdp_tol)
            if out is None:
                retries += 1
                continue
            step, Ynew = out
            purified = False
            if opts.purify == "full":
                try:
                    Ynew = purify_full(Af, Ynew, cfg)
                    purified = True
                except SpectrexError:
                    pass
            elif opts.purify == "frozen":
                try:
                    Ynew = purify_frozen(Af, Ynew, n0, cfg)
                    purified = True
                except SpectrexError:
                    pass
            knew = lmi_kernel(Af, Ynew, cfg)
            if knew is None:
                knew = lmi_kernel(Af, Ynew, cfg, loose=True)
            if knew is None or knew.k < k_before + 1:
                retries += 1  # no kernel growth: failed try
                continue
            accepted = DilationStep(
                beta=step.beta, c=step.c, gamma=step.gamma, retries=retries,
                purified=purified, accuracy_before=step.accuracy_before,
                accuracy_after=float(knew.accuracy),
            )
            Y = Ynew
            break
        if accepted is None:
            trace.final = Y
            trace.verdict = "failed"
            break
        trace.steps.append(accepted)

    if trace.verdict != "failed" and trace.final is not None:
        L = eval_pencil(Af, trace.final).matrix
        if not psd_within_slack(L, cfg.psd_slack):
            trace.verdict = "failed"
    return trace
