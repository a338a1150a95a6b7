"""Small dense solvers: linear programs and single-LMI semidefinite programs.

Problem sizes here are tiny (a handful of scalar variables against one
matrix inequality of side <= ~80, or LPs with a few hundred columns), so
everything is dense and deterministic: a log-det barrier with damped Newton
steps for the SDP, and a two-phase tableau simplex for the LP.  No external
solver is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

NEWTON_BUDGET = 200


# ---------------------------------------------------------------------------
# Linear programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearProgram:
    """minimize c.x  subject to  G x <= h,  E x = f  (x free)."""

    objective: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    E: np.ndarray | None = None
    f: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        object.__setattr__(self, "objective", c)
        for mat, vec, mname, vname in (
            (self.G, self.h, "G", "h"),
            (self.E, self.f, "E", "f"),
        ):
            if (mat is None) != (vec is None):
                raise DimensionError(f"{mname} and {vname} must be given together")
            if mat is not None:
                m = np.atleast_2d(np.asarray(mat, dtype=float))
                v = np.asarray(vec, dtype=float).ravel()
                if m.shape[1] != c.size or m.shape[0] != v.size:
                    raise DimensionError(f"{mname}/{vname} shapes inconsistent")
                object.__setattr__(self, mname, m)
                object.__setattr__(self, vname, v)


@dataclass(frozen=True)
class LpResult:
    x: np.ndarray | None
    objective: float | None
    status: str  # optimal | infeasible | unbounded | max_iter
    iterations: int = 0


def _simplex(T, basis, n_total, cost_row, max_iter):
    """Tableau simplex, Dantzig rule with Bland fallback for anti-cycling.

    T is the (m+1) x (n_total+1) tableau with the cost row last and the
    rhs in the final column.  Mutates T and basis in place.
    """
    m = T.shape[0] - 1
    bland_after = 12 * (m + n_total) + 50
    for it in range(max_iter):
        costs = T[-1, :n_total]
        if it < bland_after:
            j = int(np.argmin(costs))
            if costs[j] >= -1e-11:
                return "optimal", it
        else:  # Bland: first negative
            neg = np.nonzero(costs < -1e-11)[0]
            if neg.size == 0:
                return "optimal", it
            j = int(neg[0])
        col = T[:m, j]
        pos = col > 1e-11
        if not np.any(pos):
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        r = int(np.argmin(ratios))
        if it >= bland_after:
            # Bland tie-break: smallest basis index among minimal ratios
            best = ratios[r]
            cands = np.nonzero(ratios <= best + 1e-13)[0]
            r = int(min(cands, key=lambda q: basis[q]))
        piv = T[r, j]
        T[r, :] /= piv
        for q in range(m + 1):
            if q != r and T[q, j] != 0.0:
                T[q, :] -= T[q, j] * T[r, :]
        basis[r] = j
    return "max_iter", max_iter


def solve_lp(prog: LinearProgram, tol: float = 1e-9, max_iter: int = 20000) -> LpResult:
    """Two-phase dense simplex.

    Free variables are split as x = u - v; inequality rows get slacks and
    every row gets an artificial for phase 1.
    """
    c = prog.objective
    nvar = c.size
    G = prog.G if prog.G is not None else np.zeros((0, nvar))
    h = prog.h if prog.h is not None else np.zeros(0)
    E = prog.E if prog.E is not None else np.zeros((0, nvar))
    f = prog.f if prog.f is not None else np.zeros(0)
    mg, me = G.shape[0], E.shape[0]
    m = mg + me

    # columns: u (nvar) | v (nvar) | slacks (mg) | artificials (m)
    A = np.zeros((m, 2 * nvar + mg + m))
    b = np.concatenate([h, f])
    A[:mg, :nvar] = G
    A[:mg, nvar : 2 * nvar] = -G
    A[mg:, :nvar] = E
    A[mg:, nvar : 2 * nvar] = -E
    A[:mg, 2 * nvar : 2 * nvar + mg] = np.eye(mg)
    neg = b < 0
    A[neg, :] *= -1
    b = np.abs(b)
    art0 = 2 * nvar + mg
    A[:, art0:] = np.eye(m)
    n_core = art0

    # phase 1: minimize the sum of artificials
    T = np.zeros((m + 1, A.shape[1] + 1))
    T[:m, :-1] = A
    T[:m, -1] = b
    T[-1, art0:-1] = 1.0
    basis = [art0 + i for i in range(m)]
    for i in range(m):  # price out artificials from the cost row
        T[-1, :] -= T[i, :]
    status, it1 = _simplex(T, basis, A.shape[1], -1, max_iter)
    if status == "max_iter":
        return LpResult(None, None, "max_iter", it1)
    if T[-1, -1] < -max(tol, 1e-8):
        return LpResult(None, None, "infeasible", it1)

    # pivot residual artificials out of the basis where possible
    for r in range(m):
        if basis[r] >= art0:
            row = T[r, :n_core]
            cand = np.nonzero(np.abs(row) > 1e-9)[0]
            if cand.size:
                j = int(cand[0])
                piv = T[r, j]
                T[r, :] /= piv
                for q in range(m + 1):
                    if q != r and T[q, j] != 0.0:
                        T[q, :] -= T[q, j] * T[r, :]
                basis[r] = j

    # phase 2 on the core columns only
    keep = [r for r in range(m) if basis[r] < n_core or T[r, -1] > 1e-9]
    live = [r for r in range(m) if basis[r] < n_core]
    # redundant rows whose artificial stayed basic at zero level are dropped
    T2 = np.zeros((len(live) + 1, n_core + 1))
    for qi, r in enumerate(live):
        T2[qi, :n_core] = T[r, :n_core]
        T2[qi, -1] = T[r, -1]
    basis2 = [basis[r] for r in live]
    cost = np.concatenate([c, -c, np.zeros(mg)])
    T2[-1, :n_core] = cost
    for qi in range(len(live)):
        j = basis2[qi]
        if cost[j] != 0.0:
            T2[-1, :] -= cost[j] * T2[qi, :]
    status, it2 = _simplex(T2, basis2, n_core, -1, max_iter)
    if status != "optimal":
        return LpResult(None, None, status, it1 + it2)
    x_full = np.zeros(n_core)
    for qi, r in enumerate(basis2):
        x_full[r] = T2[qi, -1]
    x = x_full[:nvar] - x_full[nvar : 2 * nvar]
    return LpResult(x, float(c @ x), "optimal", it1 + it2)


# ---------------------------------------------------------------------------
# Linear matrix inequality programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LmiProgram:
    """maximize objective.y  subject to  F0 + sum_i y_i F_i >= 0, y in box."""

    F0: np.ndarray
    F: tuple
    objective: np.ndarray
    box: tuple | None = None  # per-variable (lo, hi), entries may be None

    def __post_init__(self):
        F0 = np.asarray(self.F0, dtype=float)
        Fs = tuple(np.asarray(Fi, dtype=float) for Fi in self.F)
        obj = np.asarray(self.objective, dtype=float).ravel()
        if len(Fs) != obj.size:
            raise DimensionError("objective length must equal number of F matrices")
        for Fi in Fs:
            if Fi.shape != F0.shape:
                raise DimensionError("all F_i must match F0 in shape")
        object.__setattr__(self, "F0", F0)
        object.__setattr__(self, "F", Fs)
        object.__setattr__(self, "objective", obj)
        if self.box is not None:
            box = tuple(self.box)
            if len(box) != obj.size:
                raise DimensionError("box length must equal number of variables")
            object.__setattr__(self, "box", box)

    @property
    def m(self):
        return self.objective.size


@dataclass
class SdpResult:
    y: np.ndarray | None
    objective: float | None
    status: str  # optimal | infeasible | unbounded | max_iter
    newton_steps: int = 0
    gap_bound: float = np.inf
    info: dict = field(default_factory=dict)


class _BarrierProblem:
    """max c.y with one matrix block F(y) >= 0 and scalar rows a.y + b >= 0."""

    def __init__(self, c, F0, Fs, rows_a, rows_b):
        self.c = np.asarray(c, dtype=float)
        self.F0 = F0
        self.Fs = [np.asarray(Fi, dtype=float) for Fi in Fs]
        self.rows_a = np.asarray(rows_a, dtype=float).reshape(len(rows_b), -1) \
            if len(rows_b) else np.zeros((0, self.c.size))
        self.rows_b = np.asarray(rows_b, dtype=float)
        self.m = self.c.size
        self.nu = (F0.shape[0] if F0.size else 0) + len(rows_b)

    def F_of(self, y):
        F = self.F0.copy()
        for yi, Fi in zip(y, self.Fs):
            F += yi * Fi
        return F

    def strictly_feasible(self, y, margin=0.0):
        if self.F0.size:
            try:
                np.linalg.cholesky(self.F_of(y) - margin * np.eye(self.F0.shape[0]))
            except np.linalg.LinAlgError:
                return False
        if len(self.rows_b):
            if np.min(self.rows_a @ y + self.rows_b) <= margin:
                return False
        return True

    def barrier_value(self, y, t):
        val = -t * float(self.c @ y)
        if self.F0.size:
            sign, logdet = np.linalg.slogdet(self.F_of(y))
            if sign <= 0:
                return np.inf
            val -= logdet
        if len(self.rows_b):
            s = self.rows_a @ y + self.rows_b
            if np.min(s) <= 0:
                return np.inf
            val -= float(np.sum(np.log(s)))
        return val

    def grad_hess(self, y, t):
        g = -t * self.c.copy()
        H = np.zeros((self.m, self.m))
        if self.F0.size:
            F = self.F_of(y)
            Lc = np.linalg.cholesky(F)
            Ws = []
            for Fi in self.Fs:
                W = np.linalg.solve(Lc, np.linalg.solve(Lc, Fi).T).T
                # W = Lc^{-1} Fi Lc^{-T}
                Ws.append(W)
            for i, W in enumerate(Ws):
                g[i] -= np.trace(W)
            for i in range(self.m):
                for j in range(i, self.m):
                    hij = float(np.sum(Ws[i] * Ws[j].T))
                    H[i, j] = H[j, i] = H[i, j] + hij
        if len(self.rows_b):
            s = self.rows_a @ y + self.rows_b
            g -= self.rows_a.T @ (1.0 / s)
            H += (self.rows_a / (s**2)[:, None]).T @ self.rows_a
        return g, H


def _newton_center(prob, y, t, budget, tol_decrement=1e-10):
    """Damped Newton to the analytic center for parameter t."""
    steps = 0
    while steps < budget:
        g, H = prob.grad_hess(y, t)
        try:
            dy = np.linalg.solve(H + 1e-14 * np.eye(prob.m), -g)
        except np.linalg.LinAlgError:
            dy = -g
        lam2 = float(-g @ dy)
        if lam2 < 0:  # indefinite Hessian from roundoff: steepest descent
            dy = -g
            lam2 = float(g @ g)
        steps += 1
        if lam2 / 2.0 < tol_decrement:
            return y, steps, True
        val0 = prob.barrier_value(y, t)
        alpha = 1.0
        for _ in range(60):
            y_try = y + alpha * dy
            if prob.strictly_feasible(y_try):
                val = prob.barrier_value(y_try, t)
                if val < val0 - 0.01 * alpha * lam2:
                    break
            alpha *= 0.5
        else:
            # line search stalled; accept as centered only if nearly there
            return y, steps, lam2 / 2.0 < 1e-6
        y = y_try
    return y, steps, False


def _barrier_maximize(prob, y0, gap_tol, budget=NEWTON_BUDGET, mu=20.0,
                      stop_when=None):
    """Path-following loop; returns (y, gap_bound, steps, hit_budget).

    ``stop_when(y)`` may end the loop early (used by phase 1, which only
    needs a point with positive margin, not the exact maximizer).
    """
    y = np.asarray(y0, dtype=float).copy()
    nu = max(prob.nu, 1)
    t = 1.0
    steps = 0
    centered = False
    while steps < budget:
        y, used, centered = _newton_center(prob, y, t, budget - steps)
        steps += used
        if stop_when is not None and stop_when(y):
            return y, nu / t, steps, False
        if centered and nu / t <= gap_tol:
            return y, nu / t, steps, False
        t *= mu
    return y, nu / t, steps, True


def _box_rows(box, m, extra=0):
    rows_a, rows_b = [], []
    if box is None:
        return rows_a, rows_b
    for i, bounds in enumerate(box):
        if bounds is None:
            continue
        lo, hi = bounds
        if lo is not None:
            a = np.zeros(m + extra)
            a[i] = 1.0
            rows_a.append(a)
            rows_b.append(-float(lo))
        if hi is not None:
            a = np.zeros(m + extra)
            a[i] = -1.0
            rows_a.append(a)
            rows_b.append(float(hi))
    return rows_a, rows_b


def _phase1(prog: LmiProgram, gap_tol=1e-11, budget=NEWTON_BUDGET,
            early_margin=None):
    """Maximize slack s with F(y) - s I >= 0, y in box, s capped.

    Returns (s*, y, steps).  s* > 0 certifies a strictly feasible y.
    ``early_margin`` stops the search as soon as the slack clears it.
    """
    m = prog.m
    side = prog.F0.shape[0]
    scale = float(np.linalg.norm(prog.F0, 2)) if prog.F0.size else 1.0
    for Fi in prog.F:
        scale += float(np.linalg.norm(Fi, 2))
    cap = 10.0 * scale + 10.0

    if prog.box is not None:
        y0 = np.zeros(m)
        for i, bounds in enumerate(prog.box):
            if bounds is None:
                continue
            lo, hi = bounds
            lo = -cap if lo is None else lo
            hi = cap if hi is None else hi
            y0[i] = (lo + hi) / 2.0
    else:
        y0 = np.zeros(m)

    w0 = float(np.linalg.eigvalsh(prog.F0 + sum(
        yi * Fi for yi, Fi in zip(y0, prog.F)))[0]) if side else 0.0
    s0 = w0 - 1.0 - 0.1 * scale
    Fs_aug = list(prog.F) + [-np.eye(side)]
    rows_a, rows_b = _box_rows(prog.box, m, extra=1)
    a_cap = np.zeros(m + 1)
    a_cap[m] = -1.0
    rows_a.append(a_cap)
    rows_b.append(cap)
    c_aug = np.zeros(m + 1)
    c_aug[m] = 1.0
    prob = _BarrierProblem(c_aug, prog.F0, Fs_aug, rows_a, rows_b)
    y_aug0 = np.concatenate([y0, [s0]])
    if not prob.strictly_feasible(y_aug0):  # pragma: no cover - defensive
        y_aug0[m] = s0 - 10.0 * abs(s0) - 1.0
    stop = None
    if early_margin is not None:
        stop = lambda ya: ya[m] >= early_margin  # noqa: E731
    y_aug, gap, steps, _ = _barrier_maximize(prob, y_aug0, gap_tol * scale, budget,
                                             stop_when=stop)
    return float(y_aug[m]), y_aug[:m], steps


def solve_lmi_max(prog: LmiProgram, tol: float = 1e-9,
                  budget: int = NEWTON_BUDGET) -> SdpResult:
    """Maximize a linear objective under a single LMI plus box bounds.

    Phase 1 restores strict feasibility from y = 0 (or the box center); a
    log-det barrier with damped Newton steps then follows the central path
    until the duality-gap bound drops below ``tol``.  A feasible set with
    (numerically) empty interior is reported as max_iter: the caller treats
    it as a failed try.
    """
    m = prog.m
    scale = 1.0 + float(np.linalg.norm(prog.F0, 2)) if prog.F0.size else 1.0
    margin = 1e-8 * scale

    s_star, y_feas, steps1 = _phase1(prog, budget=budget, early_margin=margin * 10)
    if s_star < -1e-9 * scale:
        return SdpResult(None, None, "infeasible", steps1)
    if s_star < margin:
        # feasible but no usable interior: soft failure
        obj = float(prog.objective @ y_feas)
        return SdpResult(y_feas, obj, "max_iter", steps1,
                         info={"thin_interior": True, "phase1_slack": s_star})

    rows_a, rows_b = _box_rows(prog.box, m)
    prob = _BarrierProblem(prog.objective, prog.F0, list(prog.F), rows_a, rows_b)
    if not prob.strictly_feasible(y_feas):
        return SdpResult(y_feas, float(prog.objective @ y_feas), "max_iter", steps1,
                         info={"phase1_slack": s_star})

    # crude unboundedness screen: objective direction with Lambda(dir) >= 0
    # cannot occur for the bounded spectrahedra this package targets, but a
    # runaway objective is caught during path following below.
    y, gap, steps2, hit = _barrier_maximize(prob, y_feas, tol, budget)
    obj = float(prog.objective @ y)
    if abs(obj) > 1e12 * scale:
        return SdpResult(None, None, "unbounded", steps1 + steps2)
    status = "max_iter" if hit else "optimal"
    return SdpResult(y, obj, status, steps1 + steps2, gap_bound=gap)


def lmi_feasible(F0, F, box=None, slack_tol: float = 1e-9) -> bool:
    """Does some y in the box satisfy F0 + sum y_i F_i >= 0 (within slack)?"""
    F0 = np.asarray(F0, dtype=float)
    Fs = tuple(np.asarray(Fi, dtype=float) for Fi in F)
    if len(Fs) == 0:
        return bool(np.linalg.eigvalsh(F0)[0] >= -slack_tol)
    prog = LmiProgram(F0, Fs, np.zeros(len(Fs)), box=box)
    scale = 1.0 + float(np.linalg.norm(F0, 2))
    s_star, _, _ = _phase1(prog, early_margin=1e-6 * scale)
    return bool(s_star >= -slack_tol * scale)
