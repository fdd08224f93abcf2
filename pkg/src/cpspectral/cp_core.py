"""Third-order CP algebra.

Conventions
-----------
* Modes are numbered 1, 2, 3.
* ``mode_n_unfold`` puts the mode-n fibers in the columns, with the remaining
  indices ordered lower-mode-fastest (Kolda & Bader). With that ordering::

      unfold(X, 1) == A @ khatri_rao(C, B).T
      unfold(X, 2) == B @ khatri_rao(C, A).T
      unfold(X, 3) == C @ khatri_rao(B, A).T

* ``khatri_rao(x, y)[:, k] == np.kron(x[:, k], y[:, k])``.
* Component weights are absorbed into the factor columns; there is no
  separate weight vector.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

KRANK_MAX_COLUMNS = 20


@dataclass
class CpFactors:
    """Three complex factor matrices sharing ``rank`` columns."""

    factor_a: np.ndarray
    factor_b: np.ndarray
    factor_c: np.ndarray

    def __post_init__(self):
        mats = []
        for name in ("factor_a", "factor_b", "factor_c"):
            mat = np.asarray(getattr(self, name), dtype=complex)
            if mat.ndim != 2:
                raise ValueError(f"{name} must be a matrix, got shape {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} has NaN or Inf entries")
            setattr(self, name, mat)
            mats.append(mat)
        if len({m.shape[1] for m in mats}) != 1:
            raise ValueError(
                "factor matrices must share a column count, got "
                f"{[m.shape[1] for m in mats]}"
            )

    @property
    def rank(self) -> int:
        return self.factor_a.shape[1]

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.factor_a.shape[0], self.factor_b.shape[0], self.factor_c.shape[0])

    @property
    def factors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.factor_a, self.factor_b, self.factor_c)

    def __getitem__(self, mode: int) -> np.ndarray:
        return self.factors[mode - 1]

    def select(self, columns) -> "CpFactors":
        """Factors restricted to ``columns`` (index array or boolean mask)."""
        return CpFactors(*(f[:, columns] for f in self.factors))

    def copy(self) -> "CpFactors":
        return CpFactors(*(f.copy() for f in self.factors))

    @classmethod
    def zeros(cls, dims: Sequence[int], rank: int = 0) -> "CpFactors":
        return cls(*(np.zeros((d, rank), dtype=complex) for d in dims))


def khatri_rao(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; ``x`` is ``I x K``, ``y`` is ``J x K``."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValueError(f"khatri_rao needs equal column counts, got {x.shape} and {y.shape}")
    return (x[:, None, :] * y[None, :, :]).reshape(x.shape[0] * y.shape[0], x.shape[1])


def reconstruct(factors: CpFactors) -> np.ndarray:
    """Full tensor ``sum_k a_k o b_k o c_k``."""
    a, b, c = factors.factors
    i1, i2, i3 = factors.dims
    if factors.rank == 0:
        return np.zeros((i1, i2, i3), dtype=complex)
    return mode_n_fold(a @ khatri_rao(c, b).T, 1, (i1, i2, i3))


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    return mode - 1


def mode_n_unfold(tensor: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding, remaining indices lower-mode-fastest."""
    axis = _check_mode(mode)
    tensor = np.asarray(tensor)
    return np.moveaxis(tensor, axis, 0).reshape(tensor.shape[axis], -1, order="F")


def mode_n_fold(matrix: np.ndarray, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`mode_n_unfold`."""
    axis = _check_mode(mode)
    shape = list(shape)
    moved = [shape[axis]] + shape[:axis] + shape[axis + 1:]
    return np.moveaxis(np.reshape(matrix, moved, order="F"), 0, axis)


def unfolding_khatri_rao(factors: CpFactors, mode: int) -> np.ndarray:
    """Khatri-Rao product of the other two factors matching ``mode_n_unfold``."""
    a, b, c = factors.factors
    return {1: lambda: khatri_rao(c, b), 2: lambda: khatri_rao(c, a),
            3: lambda: khatri_rao(b, a)}[_check_mode(mode) + 1]()


def component_energies(factors: CpFactors) -> np.ndarray:
    """Frobenius norm of each rank-one term, ``|a_k| |b_k| |c_k|``."""
    norms = [np.linalg.norm(f, axis=0) for f in factors.factors]
    return norms[0] * norms[1] * norms[2]


def krank(matrix: np.ndarray, tol: float = 1e-8, max_columns: int = KRANK_MAX_COLUMNS) -> int:
    """Kruskal rank by exhaustive search over column subsets.

    A subset counts as independent when its smallest singular value exceeds
    ``tol`` times its largest. Refuses matrices with more than ``max_columns``
    columns since the search is combinatorial.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    matrix = np.asarray(matrix)
    n_rows, n_cols = matrix.shape
    if n_cols > max_columns:
        raise ValueError(f"krank limited to {max_columns} columns, got {n_cols}")
    best = 0
    for size in range(1, min(n_rows, n_cols) + 1):
        for subset in itertools.combinations(range(n_cols), size):
            s = np.linalg.svd(matrix[:, subset], compute_uv=False)
            if not s[0] > 0 or s[-1] <= tol * s[0]:
                return best
        best = size
    return best


def kruskal_check(k_a: int, k_b: int, k_c: int, rank_r: int) -> bool:
    """``k_a + k_b + k_c >= 2 R + 2``."""
    if min(k_a, k_b, k_c, rank_r) < 0:
        raise ValueError("k-ranks and rank must be nonnegative")
    return k_a + k_b + k_c >= 2 * rank_r + 2


@dataclass(frozen=True)
class AlignmentReport:
    """How ``f2`` maps onto ``f1``.

    ``permutation[k]`` is the column of ``f2`` matched to column ``k`` of
    ``f1``; ``scalings[n][k]`` is the complex factor with
    ``f2[n][:, permutation[k]] ~= scalings[n][k] * f1[n][:, k]``.
    ``residual`` is the worst relative column discrepancy and
    ``gauge_error`` is ``max |prod_n scalings[n] - 1|``.
    """

    success: bool
    permutation: np.ndarray
    scalings: Tuple[np.ndarray, np.ndarray, np.ndarray]
    residual: float
    gauge_error: float


def _unit_columns(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=0)
    return mat / np.where(norms > 0, norms, 1.0)


def align_solutions(f1: CpFactors, f2: CpFactors, tol: float = 1e-4) -> AlignmentReport:
    """Match the components of two CP solutions up to permutation and scaling.

    Greedy matching on ``|cos|`` between mode-1 columns (mode-2 breaks ties),
    then per-pair least-squares scalings in each mode.
    """
    if f1.dims != f2.dims or f1.rank != f2.rank:
        raise ValueError(
            f"cannot align solutions of dims/rank {f1.dims}/{f1.rank} and {f2.dims}/{f2.rank}"
        )
    rank = f1.rank
    if rank == 0:
        empty = np.zeros(0, dtype=complex)
        return AlignmentReport(True, np.zeros(0, dtype=int), (empty, empty, empty), 0.0, 0.0)

    sim_a = np.abs(_unit_columns(f1.factor_a).conj().T @ _unit_columns(f2.factor_a))
    sim_b = np.abs(_unit_columns(f1.factor_b).conj().T @ _unit_columns(f2.factor_b))
    permutation = np.full(rank, -1)
    free1 = set(range(rank))
    free2 = set(range(rank))
    # lexicographic order on (mode-1 similarity, mode-2 similarity)
    order = sorted(
        ((sim_a[p, q], sim_b[p, q], p, q) for p in range(rank) for q in range(rank)),
        key=lambda t: (-t[0], -t[1], t[2], t[3]),
    )
    for _, _, p, q in order:
        if p in free1 and q in free2:
            permutation[p] = q
            free1.discard(p)
            free2.discard(q)

    scalings = []
    residual = 0.0
    for m1, m2 in zip(f1.factors, f2.factors):
        matched = m2[:, permutation]
        denom = np.einsum("ik,ik->k", m1.conj(), m1).real
        scale = np.einsum("ik,ik->k", m1.conj(), matched) / np.where(denom > 0, denom, 1.0)
        diff = np.linalg.norm(matched - m1 * scale, axis=0)
        ref = np.linalg.norm(matched, axis=0)
        rel = np.where(ref > 0, diff / np.where(ref > 0, ref, 1.0), np.where(diff > 0, np.inf, 0.0))
        residual = max(residual, float(rel.max()))
        scalings.append(scale)
    gauge_error = float(np.max(np.abs(scalings[0] * scalings[1] * scalings[2] - 1.0)))
    success = residual < tol and gauge_error < tol
    return AlignmentReport(success, permutation, tuple(scalings), residual, gauge_error)
