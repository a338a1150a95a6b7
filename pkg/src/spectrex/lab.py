"""Random instance generation, boundedness checking, and batch experiments.

The experiment harness reproduces the structure of the dilation and
expansion studies at desk scale: seeded generation of bounded irreducible
defining tuples, per-trial dilation pipelines, and aggregation into rows
keyed the same way the published tables are.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .caratheodory import mu_statistics
from .dilation import DilateOptions, dilate_to_extreme, to_boundary
from .errors import SpectrexError, UnboundedDomainError
from .extremality import NO, YES, classify, rank_nullity_counts
from .kernel import DEFAULT_TOLERANCES, ToleranceConfig
from .projective import degenerate_classify
from .solvers import LmiProgram, lmi_feasible, solve_lmi_max
from .tuples import SymTuple, eval_linear

MAX_REJECTIONS = 1000


def random_symmetric_tuple(g, d, rng) -> SymTuple:
    mats = []
    for _ in range(g):
        M = rng.standard_normal((d, d))
        mats.append((M + M.T) / 2.0)
    return SymTuple(mats)


def boundedness_check(A: SymTuple) -> bool:
    """D_A is bounded iff the cone {x : Lambda_A(x) >= 0} is trivial.

    Any nonzero cone direction scales so its largest coordinate is +-1 with
    the rest in [-1, 1]; the 2g pinned feasibility problems sweep exactly
    those normalizations.
    """
    Af = A.to_float()
    g = Af.g
    for i in range(g):
        for sign in (1.0, -1.0):
            F0 = sign * Af.mats[i]
            F = [Af.mats[j] for j in range(g) if j != i]
            box = [(-1.0, 1.0)] * (g - 1)
            if len(F) == 0:
                if float(np.linalg.eigvalsh(F0)[0]) >= -1e-9:
                    return False
            elif lmi_feasible(F0, F, box):
                return False
    return True


def random_defining_tuple(g, d, rng) -> SymTuple:
    """Standard-normal symmetrized tuple, resampled until it is an
    irreducible bounded pencil.  Parameter ranges where boundedness is
    impossible fail fast through the degenerate classification."""
    from .extremality import is_irreducible  # local: avoids cycle at import

    for _ in range(MAX_REJECTIONS):
        A = random_symmetric_tuple(g, d, rng)
        verdict, _ = degenerate_classify(A)
        if verdict != "nondegenerate":
            continue
        if not is_irreducible(A):
            continue
        if not boundedness_check(A):
            continue
        return A
    raise UnboundedDomainError(
        f"no bounded irreducible tuple found in {MAX_REJECTIONS} draws "
        f"(g={g}, d={d}; boundedness requires g < d(d+1)/2)"
    )


def random_interior_point(A: SymTuple, n, rng) -> SymTuple:
    """Random direction scaled to half its boundary distance."""
    D = random_symmetric_tuple(A.g, n, rng)
    nrm = np.sqrt(sum(np.linalg.norm(m) ** 2 for m in D.mats))
    D = SymTuple([m / nrm for m in D.mats])
    lam = eval_linear(A.to_float(), D).matrix
    prog = LmiProgram(np.eye(lam.shape[0]), [lam], [1.0])
    res = solve_lmi_max(prog, tol=1e-9)
    if res.status != "optimal":
        raise SpectrexError(f"interior scaling solve came back {res.status}")
    s = float(res.objective)
    return SymTuple([0.5 * s * m for m in D.mats])


# ---------------------------------------------------------------------------
# Experiment harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    g: int
    d_values: tuple
    n0_values: tuple
    tuples_per_d: int = 10
    points_per_tuple: int = 10
    seed: int = 0
    mode: str = "classify_sweep"  # classify_sweep | carath_sweep | estimate_sweep
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES
    max_fails: int = 10
    lmi_grid: tuple = (1e-10, 1e-11, 1e-12, 1e-13)
    ee_grid: tuple = (1e-10, 1e-15)

    @staticmethod
    def from_json(text: str) -> "ExperimentSpec":
        doc = json.loads(text)
        tol_doc = doc.pop("tolerances", None)
        tol = ToleranceConfig(**tol_doc) if tol_doc else DEFAULT_TOLERANCES
        doc["d_values"] = tuple(doc["d_values"])
        doc["n0_values"] = tuple(doc["n0_values"])
        if "lmi_grid" in doc:
            doc["lmi_grid"] = tuple(doc["lmi_grid"])
        if "ee_grid" in doc:
            doc["ee_grid"] = tuple(doc["ee_grid"])
        return ExperimentSpec(tolerances=tol, **doc)

    def effective_seed(self):
        env = os.environ.get("SPECTREX_SEED")
        return int(env) if env else self.seed


@dataclass
class ClassifyRow:
    g: int
    d: int
    n: int
    n0: int
    mat_not_arv: int = 0
    euc: int = 0
    arv: int = 0
    arv_ct: int = 0
    mat_ct: int = 0
    k_hist: dict = field(default_factory=dict)  # k -> [count, set of dil dims]
    fail: int = 0

    def key(self):
        return (self.g, self.d, self.n, self.n0)

    def k_hist_text(self):
        parts = []
        for k in sorted(self.k_hist):
            count, dils = self.k_hist[k]
            dtxt = ",".join(str(x) for x in sorted(dils))
            parts.append(f"k={k}:{count};{dtxt}")
        return "|".join(parts)

    def to_dict(self):
        return {
            "g": self.g, "d": self.d, "n": self.n, "n0": self.n0,
            "mat_not_arv": self.mat_not_arv, "euc": self.euc, "arv": self.arv,
            "arv_ct": self.arv_ct, "mat_ct": self.mat_ct,
            "k_hist": self.k_hist_text(), "fail": self.fail,
        }


@dataclass
class CarathRow:
    g: int
    d: int
    n0: int
    steps: list = field(default_factory=list)
    mus: list = field(default_factory=list)
    fails: int = 0
    mat_not_arv: int = 0
    dil_dim_drops: list = field(default_factory=list)  # per-trace step drops

    def to_dict(self):
        ok = len(self.steps) > 0
        return {
            "g": self.g, "d": self.d, "n0": self.n0,
            "min_steps": min(self.steps) if ok else None,
            "max_steps": max(self.steps) if ok else None,
            "mean_steps": float(np.mean(self.steps)) if ok else None,
            "mean_mu": float(np.mean(self.mus)) if ok else None,
            "std_mu": float(np.std(self.mus)) if ok else None,
            "fails": self.fails, "mat_not_arv": self.mat_not_arv,
        }


def _trial_seeds(master_seed, count):
    ss = np.random.SeedSequence(master_seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(count)]


def run_experiment(spec: ExperimentSpec, progress=None):
    """Run the per-trial pipeline and aggregate rows.

    classify_sweep: interior point -> boundary -> dilate until matrix or
    Arveson extreme (full purification); rows keyed by terminal (g, d, n).
    carath_sweep / estimate_sweep: interior point dilated directly with the
    start block frozen, target Arveson; rows keyed by (g, d, n0).
    Individual trial failures are counted, never raised.
    """
    if spec.mode not in ("classify_sweep", "carath_sweep", "estimate_sweep"):
        raise ValueError(f"unknown experiment mode {spec.mode!r}")
    g = spec.g
    cfg = spec.tolerances
    rows = {}
    master = spec.effective_seed()
    cells = [(d, n0) for d in spec.d_values for n0 in spec.n0_values]
    cell_seeds = _trial_seeds(master, len(cells))

    for (d, n0), cell_seed in zip(cells, cell_seeds):
        tuple_seeds = _trial_seeds(cell_seed, spec.tuples_per_d)
        for t_i, tseed in enumerate(tuple_seeds):
            rng = np.random.default_rng(tseed)
            try:
                A = random_defining_tuple(g, d, rng)
            except UnboundedDomainError:
                raise
            point_seeds = _trial_seeds(tseed + 1, spec.points_per_tuple)
            for pseed in point_seeds:
                prng = np.random.default_rng(pseed)
                X = random_interior_point(A, n0, prng)
                if spec.mode == "classify_sweep":
                    Y0 = to_boundary(A, X, prng)
                    opts = DilateOptions(target="matrix_or_arveson",
                                         purify="full", seed=pseed,
                                         max_fails=spec.max_fails)
                    trace = dilate_to_extreme(A, Y0, opts, cfg)
                    _tally_classify(rows, g, d, n0, trace, cfg)
                else:
                    opts = DilateOptions(target="arveson_only",
                                         purify="frozen", seed=pseed,
                                         max_fails=spec.max_fails)
                    trace = dilate_to_extreme(A, X, opts, cfg)
                    _tally_carath(rows, g, d, n0, trace)
                if progress is not None:
                    progress()
    ordered = [rows[k] for k in sorted(rows)]
    return ordered


def _tally_classify(rows, g, d, n0, trace, cfg):
    n = trace.final.n if trace.final is not None else n0
    key = (g, d, n, n0)
    if key not in rows:
        arv_ct, _, mat_ct = rank_nullity_counts(g, d, n)
        rows[key] = ClassifyRow(g=g, d=d, n=n, n0=n0, arv_ct=arv_ct, mat_ct=mat_ct)
    row = rows[key]
    if trace.verdict == "failed":
        row.fail += 1
        return
    report = trace.reports[-1]
    if report.euclidean == YES:
        row.euc += 1
    if report.arveson == YES:
        row.arv += 1
    if report.matrix == YES and report.arveson != YES:
        row.mat_not_arv += 1
    hist = row.k_hist.setdefault(report.k, [0, set()])
    hist[0] += 1
    if trace.initial_dil_dim is not None:
        hist[1].add(trace.initial_dil_dim)


def _tally_carath(rows, g, d, n0, trace):
    key = (g, d, n0)
    if key not in rows:
        rows[key] = CarathRow(g=g, d=d, n0=n0)
    row = rows[key]
    if trace.verdict == "arveson":
        row.steps.append(trace.n_steps)
        row.mus.append(trace.mu)
        dims = [r.dil_dim for r in trace.reports]
        drops = [dims[i] - dims[i + 1] for i in range(len(dims) - 1)]
        row.dil_dim_drops.append(drops)
    elif trace.verdict == "matrix_not_arveson":
        row.mat_not_arv += 1
    else:
        # a run stuck on a matrix-extreme point still counts as MnotA
        if trace.reports and trace.reports[-1].matrix == YES:
            row.mat_not_arv += 1
        else:
            row.fails += 1


def estimate_rows(rows):
    """Table-7-style estimate columns from carath_sweep rows."""
    out = []
    for row in rows:
        if not row.mus:
            continue
        from math import ceil
        mu_est = ceil(row.g * row.n0 / row.d) / (row.g * row.n0)
        mean_mu = float(np.mean(row.mus))
        err = mean_mu - mu_est
        pct = 100.0 * err / mean_mu if mean_mu else float("nan")
        all_drops = [dr for drops in row.dil_dim_drops for dr in drops]
        past1 = [dr for drops in row.dil_dim_drops for dr in drops[1:]]
        first = [drops[0] for drops in row.dil_dim_drops if drops]
        out.append({
            "g": row.g, "d": row.d, "n0": row.n0,
            "err_mu_est": err, "err_pct": pct,
            "mean_dildim_drop": float(np.mean(all_drops)) if all_drops else None,
            "mean_dildim_drop_past1": float(np.mean(past1)) if past1 else None,
            "mean_first_dildim_drop": float(np.mean(first)) if first else None,
        })
    return out


def tolerance_sweep(spec: ExperimentSpec, n_points: int = 20):
    """Reclassify a fixed dilation-generated point set on a tolerance grid.

    Returns one summary row per (lmi, ee) pair with flag-flip counts
    against the default operating point.
    """
    g = spec.g
    cfg = spec.tolerances
    master = spec.effective_seed()
    seeds = _trial_seeds(master, n_points)
    points = []
    d = spec.d_values[0]
    n0 = spec.n0_values[0]
    for s in seeds:
        rng = np.random.default_rng(s)
        A = random_defining_tuple(g, d, rng)
        X = random_interior_point(A, n0, rng)
        Y0 = to_boundary(A, X, rng)
        trace = dilate_to_extreme(
            A, Y0, DilateOptions(target="matrix_or_arveson", purify="full",
                                 seed=s, max_fails=spec.max_fails), cfg)
        if trace.final is not None and trace.verdict != "failed":
            points.append((A, trace.final))
    base_flags = [
        (r.matrix, r.arveson, r.euclidean)
        for r in (classify(A, Y, cfg) for A, Y in points)
    ]
    out = []
    for lmi in spec.lmi_grid:
        for ee in spec.ee_grid:
            sweep_cfg = cfg.with_updates(lmi_mag=lmi, lmi_gap=lmi,
                                         ee_mag=ee, ee_gap=ee)
            flips_mat = flips_arv = flips_euc = 0
            mat_yes = arv_yes = 0
            for (A, Y), base in zip(points, base_flags):
                r = classify(A, Y, sweep_cfg)
                flips_mat += int(r.matrix != base[0])
                flips_arv += int(r.arveson != base[1])
                flips_euc += int(r.euclidean != base[2])
                mat_yes += int(r.matrix == YES and r.arveson != YES)
                arv_yes += int(r.arveson == YES)
            out.append({
                "lmi": lmi, "ee": ee, "n_points": len(points),
                "flips_matrix": flips_mat, "flips_arveson": flips_arv,
                "flips_euclidean": flips_euc,
                "mat_not_arv": mat_yes, "arveson": arv_yes,
            })
    return out
