"""Homogenization, linear transforms of homogeneous tuples, projective maps,
the g=d=2 canonical form, and the degenerate-parameter classification.

A (g+1)x(g+1) matrix W acts on homogeneous tuples by mixing coordinates:

    T_W(X_0, ..., X_g)_i = sum_j W[i, j] X_{j-1}

Projective maps of points are the conjugation-by-homogenization sandwich
P_W(X) = dehomogenize(T_W(homogenize(X))).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, OutsideDomainError, UnboundedDomainError
from .tuples import HomTuple, SymTuple

PSD_FLOOR = -1e-10


@dataclass(frozen=True)
class ProjectiveMap:
    W: np.ndarray
    invertible: bool
    condition: float

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        object.__setattr__(self, "W", W)


def make_projective_map(W) -> ProjectiveMap:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError("W must be square")
    det = float(np.linalg.det(W))
    norm = float(np.linalg.norm(W, 2))
    gp1 = W.shape[0]
    invertible = abs(det) > 1e-12 * max(norm, 1.0) ** gp1
    cond = float(np.linalg.cond(W)) if invertible else np.inf
    return ProjectiveMap(W, invertible, cond)


def homogenize(X: SymTuple) -> HomTuple:
    return HomTuple(np.eye(X.n), X.to_float())


def pinv_sqrt(M: np.ndarray, rel_cut: float = 1e-12) -> np.ndarray:
    """PSD square root of the Moore-Penrose pseudoinverse.

    Eigenvalues below rel_cut * lambda_max are treated as zero.
    """
    w, V = np.linalg.eigh(np.asarray(M, dtype=float))
    lmax = max(float(w[-1]), 0.0)
    cut = rel_cut * max(lmax, 1e-300)
    inv_sqrt = np.where(w > cut, 1.0 / np.sqrt(np.clip(w, cut, None)), 0.0)
    return (V * inv_sqrt) @ V.T


def dehomogenize(XH: HomTuple) -> SymTuple:
    """X0^{+/2} X X0^{+/2}; requires X0 PSD within a small floor."""
    X0 = XH.inhomogeneous
    w = np.linalg.eigvalsh(X0)
    if w[0] < PSD_FLOOR:
        raise OutsideDomainError(float(w[0]), -PSD_FLOOR)
    R = pinv_sqrt(X0)
    return SymTuple([R @ Xi @ R for Xi in XH.rest.mats])


def transform_T(W, XH: HomTuple) -> HomTuple:
    """Coordinate mixing of a homogeneous tuple by W."""
    W = np.asarray(W, dtype=float)
    mats = XH.as_mats()
    if W.shape != (len(mats), len(mats)):
        raise DimensionError(
            f"W is {W.shape}, expected {(len(mats), len(mats))} for g={XH.g}"
        )
    out = []
    for i in range(len(mats)):
        acc = np.zeros_like(np.asarray(mats[0], dtype=float))
        for j, Mj in enumerate(mats):
            if W[i, j] != 0.0:
                acc = acc + W[i, j] * np.asarray(Mj, dtype=float)
        out.append(acc)
    return HomTuple(out[0], SymTuple(out[1:]))


def projective_P(W, A: SymTuple, X: SymTuple) -> SymTuple:
    """P_W(X) = dehomogenize(T_W(homogenize(X))).

    The caller asserts that T_W is a positive linear transformation of the
    homogenization of D_A with sectionally bounded image; a non-PSD
    inhomogeneous component surfaces as a precondition violation.
    """
    return dehomogenize(transform_T(W, homogenize(X)))


def spin_disk_tuple() -> SymTuple:
    return SymTuple([np.array([[1.0, 0.0], [0.0, -1.0]]),
                     np.array([[0.0, 1.0], [1.0, 0.0]])])


def spin_disk_W(A: SymTuple) -> ProjectiveMap:
    """Canonicalizing map for a bounded g=2, d=2 pencil onto the spin disk.

    W is built from the entries of A; its determinant has the closed form
    (a111 a122 - a121 a112 + a121 a222 - a221 a122)/2 and vanishing of that
    determinant certifies unboundedness, with witness direction
    (a122, -a121).
    """
    if A.g != 2 or A.n != 2:
        raise DimensionError(f"spin-disk form needs g=2, d=2; got g={A.g}, d={A.n}")
    Af = A.to_float()
    A1, A2 = Af.mats
    a111, a121, a221 = A1[0, 0], A1[0, 1], A1[1, 1]
    a112, a122, a222 = A2[0, 0], A2[0, 1], A2[1, 1]
    W = np.array([
        [1.0, (a111 + a221) / 2.0, (a112 + a222) / 2.0],
        [0.0, (a111 - a221) / 2.0, (a112 - a222) / 2.0],
        [0.0, a121, a122],
    ])
    det_closed = (a111 * a122 - a121 * a112 + a121 * a222 - a221 * a122) / 2.0
    scale = max(float(np.linalg.norm(W, 2)), 1.0)
    if abs(det_closed) <= 1e-12 * scale**3:
        raise UnboundedDomainError(
            "singular canonicalizing map: the spectrahedron is unbounded",
            witness=(float(a122), float(-a121)),
        )
    return make_projective_map(W)


def spin_disk_det_formula(A: SymTuple) -> float:
    Af = A.to_float()
    A1, A2 = Af.mats
    return (A1[0, 0] * A2[0, 1] - A1[0, 1] * A2[0, 0]
            + A1[0, 1] * A2[1, 1] - A1[1, 1] * A2[0, 1]) / 2.0


def degenerate_classify(A: SymTuple):
    """Classification forced by parameter counting alone.

    Returns one of
      ("no_extreme_points", alpha)  with sum alpha_i A_i = 0, alpha != 0
      ("unique_extreme", alpha)     with sum alpha_i A_i = -I
      ("nondegenerate", None)
    """
    Af = A.to_float()
    g, d = Af.g, Af.n
    cols = np.stack([m.ravel() for m in Af.mats], axis=1)  # d^2 x g
    u, s, vt = np.linalg.svd(cols)
    tol = max(d, g) * (s[0] if s.size else 0.0) * 1e-12
    rank = int(np.sum(s > tol))
    if rank < g:
        alpha = vt[-1, :]
        return "no_extreme_points", alpha / np.linalg.norm(alpha)
    if g == d * (d + 1) // 2:
        target = (-np.eye(d)).ravel()
        alpha, *_ = np.linalg.lstsq(cols, target, rcond=None)
        return "unique_extreme", alpha
    if g > d * (d + 1) // 2:  # pragma: no cover - implied dependent above
        alpha = vt[-1, :]
        return "no_extreme_points", alpha / np.linalg.norm(alpha)
    return "nondegenerate", None
