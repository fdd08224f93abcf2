"""Folding a sample sequence into the structured third-order tensor.

For parameters ``(N, L, P)`` the tensor has shape ``(N-L-P+2, L, P)`` and its
slice ``i`` is ``[x_{L+i-1}, x_{L+i-2}, ..., x_i]`` where ``x_t`` is the
length ``N-L-P+2`` window of the signal starting at sample ``t``. Cell
``(m, j, i)`` (1-based) therefore holds sample ``m + L + i - j - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .signal_model import SampleSet


@dataclass(frozen=True)
class FoldParams:
    n_total: int
    l_dim: int
    p_dim: int = 2

    def __post_init__(self):
        if self.l_dim < 1 or self.p_dim < 1:
            raise ValueError("L and P must be at least 1")
        if self.n_total - self.l_dim - self.p_dim + 2 < 1:
            raise ValueError(
                f"N - L - P + 2 must be at least 1 (N={self.n_total}, "
                f"L={self.l_dim}, P={self.p_dim})"
            )

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.n_total - self.l_dim - self.p_dim + 2, self.l_dim, self.p_dim)

    @classmethod
    def default(cls, n_total: int, p_dim: int = 2) -> "FoldParams":
        """Balanced folding: ``L`` chosen so that ``N-L-P+2`` and ``L`` differ
        by at most one, with the extra row going to the first mode.

        ``default(127)`` gives ``L = 63`` and a 64 x 63 x 2 tensor.
        """
        l_dim = max(1, (n_total - p_dim + 2) // 2)
        return cls(n_total, l_dim, p_dim)


def sample_index_grid(params: FoldParams) -> np.ndarray:
    """Array of shape ``params.dims`` holding the 1-based sample index of
    every cell."""
    i1, i2, i3 = params.dims
    m = np.arange(1, i1 + 1)[:, None, None]
    j = np.arange(1, i2 + 1)[None, :, None]
    i = np.arange(1, i3 + 1)[None, None, :]
    return m + params.l_dim + i - j - 1


def cell_to_sample_index(m: int, j: int, i: int, params: FoldParams) -> int:
    """Sample index (1-based) stored in cell ``(m, j, i)`` (1-based)."""
    i1, i2, i3 = params.dims
    if not (1 <= m <= i1 and 1 <= j <= i2 and 1 <= i <= i3):
        raise ValueError(f"cell ({m}, {j}, {i}) outside tensor of dims {params.dims}")
    return m + params.l_dim + i - j - 1


@dataclass
class MaskedTensor:
    """A complex tensor with a congruent boolean observation mask.

    Unobserved cells hold zero.
    """

    values: np.ndarray
    mask: np.ndarray
    params: Optional[FoldParams] = field(default=None, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.ndim != 3 or self.values.shape != self.mask.shape:
            raise ValueError(
                f"values {self.values.shape} and mask {self.mask.shape} must be "
                "congruent third-order arrays"
            )
        if min(self.values.shape) < 1:
            raise ValueError("all tensor dimensions must be at least 1")

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.values.shape

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def observed_norm(self) -> float:
        return float(np.linalg.norm(self.values[self.mask]))

    def is_structurally_consistent(self, atol: float = 0.0) -> bool:
        """True if observed cells sharing a sample index hold equal values."""
        if self.params is None:
            raise ValueError("structural consistency needs fold parameters")
        grid = sample_index_grid(self.params)[self.mask]
        vals = self.values[self.mask]
        if grid.size == 0:
            return True
        _, first, inverse = np.unique(grid, return_index=True, return_inverse=True)
        reference = vals[first][inverse]
        return bool(np.all(np.abs(vals - reference) <= atol))


def fold(samples: SampleSet, params: FoldParams) -> MaskedTensor:
    """Place each observed sample on every cell of its constant-index surface."""
    if samples.n_total != params.n_total:
        raise ValueError(
            f"sample set has N={samples.n_total} but fold params have N={params.n_total}"
        )
    full = np.zeros(params.n_total, dtype=complex)
    seen = np.zeros(params.n_total, dtype=bool)
    full[samples.indices - 1] = samples.values
    seen[samples.indices - 1] = True
    grid = sample_index_grid(params) - 1
    return MaskedTensor(full[grid], seen[grid], params)


def unfold_to_signal(tensor: np.ndarray, params: FoldParams) -> np.ndarray:
    """Average every cell sharing a sample index back into a length-N signal."""
    tensor = np.asarray(tensor)
    if tensor.shape != params.dims:
        raise ValueError(f"tensor shape {tensor.shape} does not match dims {params.dims}")
    grid = (sample_index_grid(params) - 1).ravel()
    flat = tensor.ravel().astype(complex)
    # averaging deviations from one representative cell keeps agreeing cells exact
    _, first = np.unique(grid, return_index=True)
    ref = flat[first]
    dev = flat - ref[grid]
    counts = np.bincount(grid, minlength=params.n_total)
    real = np.bincount(grid, dev.real, minlength=params.n_total)
    imag = np.bincount(grid, dev.imag, minlength=params.n_total)
    return ref + (real + 1j * imag) / counts


def surface_size(n: int, params: FoldParams) -> int:
    """Number of cells holding sample ``n``."""
    return int(np.count_nonzero(sample_index_grid(params) == n))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking fold parameters against the uniqueness condition.

    ``k_ranks`` are the Vandermonde k-ranks ``min(dim, K)`` of the three
    factor matrices. ``acceptable`` is True when Kruskal's condition holds
    or when ``K = 1``, where the decomposition is unique as long as no
    two-dimensional slice of the tensor vanishes.
    """

    dims: Tuple[int, int, int]
    k_expected: Optional[int]
    k_ranks: Optional[Tuple[int, int, int]]
    kruskal_satisfied: Optional[bool]
    rank_one_exception: bool
    acceptable: bool
    messages: Tuple[str, ...] = ()


def validate_params(n_total: int, k_expected: Optional[int], params: FoldParams) -> ValidationReport:
    msgs = []
    if n_total != params.n_total:
        msgs.append(f"N={n_total} differs from fold params N={params.n_total}")
    dims = params.dims
    if k_expected is None:
        return ValidationReport(dims, None, None, None, False, not msgs, tuple(msgs))
    k = int(k_expected)
    ranks = tuple(min(d, k) for d in dims)
    satisfied = sum(ranks) >= 2 * k + 2
    rank_one = k == 1 and not satisfied
    if not satisfied:
        msgs.append(
            f"Kruskal condition fails: {ranks[0]}+{ranks[1]}+{ranks[2]} < {2 * k + 2}"
        )
    if rank_one:
        msgs.append("K=1: unique whenever no slice of the tensor is identically zero")
    acceptable = (satisfied or rank_one) and n_total == params.n_total
    return ValidationReport(dims, k, ranks, satisfied, rank_one, acceptable, tuple(msgs))
