"""Symmetric matrix tuples and monic linear pencil evaluation.

The central object is a g-tuple of real symmetric n x n matrices.  A tuple
may carry 64-bit floating entries or exact rational (``fractions.Fraction``)
entries; the mode is fixed at construction.  Pencils are evaluated through
Kronecker products:

    pencil(A, X)  = I + sum_i A_i (x) X_i
    linear(A, X)  =     sum_i A_i (x) X_i
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import AsymmetryError, DimensionError

SYMMETRY_TOL = 1e-12


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, float):
        return Fraction(x)  # exact binary value
    raise TypeError(f"cannot interpret {x!r} as a rational number")


def _rational_matrix(rows, n=None):
    """Build an n x n object array of Fractions from nested data."""
    m = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        if n is not None and len(row) != n:
            raise DimensionError(f"ragged row {i}: expected {n} entries, got {len(row)}")
        for j, x in enumerate(row):
            m[i, j] = _as_fraction(x)
    return m


def _symmetrize(mat, index, mode):
    """Return the symmetric part of ``mat`` or reject it.

    Float mode tolerates entrywise asymmetry up to SYMMETRY_TOL and repairs
    it with (M + M^T)/2; rational mode demands exact symmetry.
    """
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"matrix {index} is {mat.shape}, expected square")
    if mode == "rational":
        for i in range(mat.shape[0]):
            for j in range(i + 1, mat.shape[1]):
                if mat[i, j] != mat[j, i]:
                    raise AsymmetryError(index, i, j, mat[i, j] - mat[j, i])
        return mat
    diff = np.abs(mat - mat.T)
    worst = np.unravel_index(np.argmax(diff), diff.shape)
    if diff[worst] > SYMMETRY_TOL:
        raise AsymmetryError(index, int(worst[0]), int(worst[1]), float(diff[worst]))
    out = (mat + mat.T) / 2.0
    out.setflags(write=False)
    return out


class SymTuple:
    """A g-tuple of real symmetric n x n matrices (immutable).

    ``mode`` is "float" (numpy float64) or "rational" (object arrays of
    Fraction).  Matrices are symmetrized at construction; asymmetry beyond
    1e-12 (float) or any asymmetry (rational) is rejected.
    """

    __slots__ = ("g", "n", "mode", "mats")

    def __init__(self, mats, mode="float"):
        if len(mats) == 0:
            raise DimensionError("a tuple needs at least one matrix")
        if mode not in ("float", "rational"):
            raise ValueError(f"unknown mode {mode!r}")
        fixed = []
        n = None
        for idx, m in enumerate(mats):
            if mode == "rational":
                if isinstance(m, np.ndarray) and m.dtype == object:
                    mm = m.copy()
                else:
                    mm = _rational_matrix(m if not isinstance(m, np.ndarray) else m.tolist())
            else:
                mm = np.array(m, dtype=float)
            if n is None:
                n = mm.shape[0]
            elif mm.shape[0] != n:
                raise DimensionError(
                    f"matrix {idx} has side {mm.shape[0]}, expected {n}"
                )
            fixed.append(_symmetrize(mm, idx, mode))
        object.__setattr__(self, "g", len(fixed))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "mats", tuple(fixed))

    def __setattr__(self, *a):  # immutability
        raise AttributeError("SymTuple is immutable")

    def __iter__(self):
        return iter(self.mats)

    def __getitem__(self, i):
        return self.mats[i]

    def __len__(self):
        return self.g

    def __repr__(self):
        return f"SymTuple(g={self.g}, n={self.n}, mode={self.mode})"

    def __eq__(self, other):
        if not isinstance(other, SymTuple):
            return NotImplemented
        return (
            self.g == other.g
            and self.n == other.n
            and self.mode == other.mode
            and all(np.array_equal(a, b) for a, b in zip(self.mats, other.mats))
        )

    def to_float(self):
        if self.mode == "float":
            return self
        return SymTuple([m.astype(float) for m in self.mats], mode="float")

    def to_rational(self):
        if self.mode == "rational":
            return self
        return SymTuple(
            [_rational_matrix([[Fraction(x) for x in row] for row in m]) for m in self.mats],
            mode="rational",
        )

    @staticmethod
    def zeros(g, n, mode="float"):
        if mode == "rational":
            z = np.empty((n, n), dtype=object)
            z[:] = Fraction(0)
            return SymTuple([z.copy() for _ in range(g)], mode="rational")
        return SymTuple([np.zeros((n, n)) for _ in range(g)])


@dataclass(frozen=True)
class HomTuple:
    """A (g+1)-tuple (X0, X) with X0 the inhomogeneous component."""

    inhomogeneous: np.ndarray
    rest: SymTuple

    def __post_init__(self):
        x0 = np.array(self.inhomogeneous, dtype=float)
        x0 = _symmetrize(x0, -1, "float")
        object.__setattr__(self, "inhomogeneous", x0)
        if x0.shape[0] != self.rest.n:
            raise DimensionError(
                f"inhomogeneous side {x0.shape[0]} != tuple level {self.rest.n}"
            )

    @property
    def g(self):
        return self.rest.g

    @property
    def n(self):
        return self.rest.n

    def as_mats(self):
        return (self.inhomogeneous,) + self.rest.mats


@dataclass(frozen=True)
class PencilEvaluation:
    """A symmetric d*n x d*n pencil value with its factor dimensions."""

    matrix: np.ndarray
    d: int
    n: int

    def __post_init__(self):
        if self.matrix.shape != (self.d * self.n, self.d * self.n):
            raise DimensionError(
                f"matrix is {self.matrix.shape}, expected side {self.d * self.n}"
            )


def _identity_like(side, mode):
    if mode == "rational":
        m = np.empty((side, side), dtype=object)
        m[:] = Fraction(0)
        for i in range(side):
            m[i, i] = Fraction(1)
        return m
    return np.eye(side)


def lambda_raw(A: SymTuple, mats) -> np.ndarray:
    """sum_i A_i (x) B_i for an arbitrary (possibly rectangular) tuple B."""
    if len(mats) != A.g:
        raise DimensionError(f"tuple length {len(mats)} != pencil variables {A.g}")
    acc = None
    for Ai, Bi in zip(A.mats, mats):
        term = np.kron(Ai, np.asarray(Bi))
        acc = term if acc is None else acc + term
    return acc


def eval_linear(A: SymTuple, X: SymTuple) -> PencilEvaluation:
    """Homogeneous part Lambda_A(X) = sum_i A_i (x) X_i."""
    if A.g != X.g:
        raise DimensionError(f"pencil has g={A.g} but point has g={X.g}")
    return PencilEvaluation(lambda_raw(A, X.mats), A.n, X.n)


def eval_pencil(A: SymTuple, X: SymTuple) -> PencilEvaluation:
    """Monic pencil L_A(X) = I + sum_i A_i (x) X_i."""
    lam = eval_linear(A, X)
    mode = "rational" if (A.mode == "rational" and X.mode == "rational") else "float"
    ident = _identity_like(A.n * X.n, mode)
    return PencilEvaluation(ident + lam.matrix, A.n, X.n)


def eval_hom_linear(AH: HomTuple, XH: HomTuple) -> PencilEvaluation:
    """Lambda_{(A0,A)}((X0,X)) = A0 (x) X0 + sum_i A_i (x) X_i."""
    if AH.g != XH.g:
        raise DimensionError(f"pencil has g={AH.g} but point has g={XH.g}")
    acc = np.kron(AH.inhomogeneous, XH.inhomogeneous)
    acc = acc + lambda_raw(AH.rest, XH.rest.mats)
    return PencilEvaluation(acc, AH.n, XH.n)


def canonical_shuffle(d: int, n: int, k: int) -> np.ndarray:
    """Permutation matrix aligning a dilated pencil into 2x2 block form.

    For Y = [[X, beta], [beta^T, gamma]] with X at level n and gamma at
    level k, conjugation satisfies

        P^T L_A(Y) P = [[L_A(X),           Lambda_A(beta)],
                        [Lambda_A(beta^T), L_A(gamma)    ]].

    Row index (a, u) of A_i (x) Y_i (a < d, u < n+k) is sent to block 1 when
    u < n and block 2 otherwise, preserving lexicographic order inside each
    block.
    """
    if d < 1 or n < 1 or k < 1:
        raise DimensionError("d, n, k must all be >= 1")
    src = []
    for a in range(d):
        for u in range(n):
            src.append(a * (n + k) + u)
    for a in range(d):
        for u in range(n, n + k):
            src.append(a * (n + k) + u)
    side = d * (n + k)
    P = np.zeros((side, side))
    for new, old in enumerate(src):
        P[old, new] = 1.0
    return P


def direct_sum(X: SymTuple, Z: SymTuple) -> SymTuple:
    """Coordinatewise block-diagonal sum; level is n_X + n_Z."""
    if X.g != Z.g:
        raise DimensionError(f"tuples have g={X.g} and g={Z.g}")
    out = []
    for Xi, Zi in zip(X.mats, Z.mats):
        m = np.zeros((X.n + Z.n, X.n + Z.n))
        m[: X.n, : X.n] = Xi
        m[X.n :, X.n :] = Zi
        out.append(m)
    return SymTuple(out)


def conjugate(V: np.ndarray, X: SymTuple) -> SymTuple:
    """(V^T X_i V)_i for V with X.n rows."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != X.n:
        raise DimensionError(f"V is {V.shape}, needs {X.n} rows")
    return SymTuple([V.T @ Xi @ V for Xi in X.mats])


def scale(c, X: SymTuple) -> SymTuple:
    if X.mode == "rational":
        c = _as_fraction(c)
        return SymTuple([m * c for m in X.mats], mode="rational")
    return SymTuple([float(c) * m for m in X.mats])


def add(X: SymTuple, Z: SymTuple) -> SymTuple:
    if X.g != Z.g or X.n != Z.n:
        raise DimensionError("tuple shapes differ")
    if X.mode == "rational" and Z.mode == "rational":
        return SymTuple([a + b for a, b in zip(X.mats, Z.mats)], mode="rational")
    Xf, Zf = X.to_float(), Z.to_float()
    return SymTuple([a + b for a, b in zip(Xf.mats, Zf.mats)])


def dilate_point(Y: SymTuple, beta, gamma) -> SymTuple:
    """Assemble [[Y_i, b_i], [b_i^T, gamma_i]] per coordinate.

    beta is a g-sequence of n x k blocks; gamma a g-sequence of k x k
    symmetric blocks (scalars allowed for k = 1).
    """
    n = Y.n
    out = []
    for Yi, bi, gi in zip(Y.mats, beta, gamma):
        bi = np.atleast_2d(np.asarray(bi, dtype=float))
        if bi.shape[0] != n:
            bi = bi.T
        k = bi.shape[1]
        gi = np.atleast_2d(np.asarray(gi, dtype=float))
        m = np.zeros((n + k, n + k))
        m[:n, :n] = Yi
        m[:n, n:] = bi
        m[n:, :n] = bi.T
        m[n:, n:] = gi
        out.append(m)
    return SymTuple(out)


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def _entry_to_json(x, mode):
    if mode == "rational":
        f = _as_fraction(x)
        return f"{f.numerator}/{f.denominator}"
    return float(x)


def tuple_to_json(X: SymTuple | HomTuple) -> str:
    """Serialize to the interchange schema used by every CLI command."""
    if isinstance(X, HomTuple):
        doc = {
            "g": X.g,
            "n": X.n,
            "mode": "float",
            "inhomogeneous": [[float(v) for v in row] for row in X.inhomogeneous],
            "mats": [
                [[_entry_to_json(v, X.rest.mode) for v in row] for row in m]
                for m in X.rest.mats
            ],
        }
        return json.dumps(doc, indent=1)
    doc = {
        "g": X.g,
        "n": X.n,
        "mode": X.mode,
        "mats": [
            [[_entry_to_json(v, X.mode) for v in row] for row in m] for m in X.mats
        ],
    }
    return json.dumps(doc, indent=1)


def tuple_from_json(text: str):
    """Parse the interchange schema; returns SymTuple or HomTuple."""
    doc = json.loads(text)
    for key in ("g", "n", "mats"):
        if key not in doc:
            raise DimensionError(f"missing field {key!r}")
    mode = doc.get("mode", "float")
    mats = doc["mats"]
    if len(mats) != doc["g"]:
        raise DimensionError(f"expected {doc['g']} matrices, found {len(mats)}")
    for m in mats:
        if len(m) != doc["n"]:
            raise DimensionError(f"expected side {doc['n']}, found {len(m)} rows")
        for row in m:
            if len(row) != doc["n"]:
                raise DimensionError("ragged rows in matrix data")
    rest = SymTuple(mats, mode=mode)
    if "inhomogeneous" in doc:
        return HomTuple(np.array(doc["inhomogeneous"], dtype=float), rest)
    return rest
