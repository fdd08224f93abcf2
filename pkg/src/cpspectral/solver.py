"""Masked CP completion by group-regularized alternating least squares.

The solver minimizes

    ||O * (Y - [[A, B, C]])||_F^2 + lam * sum_k (|a_k|^2 + |b_k|^2 + |c_k|^2)

over an overparameterized set of components. At balanced scalings the
penalty equals ``3 * lam * sum_k z_k**(2/3)`` with ``z_k`` the component
energies, so it drives whole components to zero; those are pruned and the
surviving count is the rank estimate. ``lam`` follows a geometric
continuation path that ends at a small floor, or earlier once the masked
residual drops below a noise tolerance ``epsilon``.

Each sweep updates A, B and C in turn by the exact row-wise ridge solution.
Two extra moves are taken only when they lower the objective, so the
recorded objective trace never increases:

* extrapolation along the last sweep's direction (classic ALS line search);
* at the end of a stage, dropping the weakest component and refitting.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .cp_core import CpFactors, component_energies, reconstruct
from .tensorization import MaskedTensor

ZERO_LAMBDA_FLOOR = 1e-12
_TRACE_SLACK = 1e-12


@dataclass(frozen=True)
class LambdaSchedule:
    """Geometric continuation for the regularization weight.

    ``start=None`` uses ``0.1 * ||O*Y||_F / sqrt(#observed cells)``.
    ``floor`` is relative to the starting value.
    """

    start: Optional[float] = None
    factor: float = 0.5
    floor: float = 1e-6

    def __post_init__(self):
        if not 0 < self.factor < 1:
            raise ValueError("schedule factor must lie in (0, 1)")
        if not 0 < self.floor <= 1:
            raise ValueError("schedule floor must lie in (0, 1]")
        if self.start is not None and self.start < 0:
            raise ValueError("schedule start must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    """Settings for :func:`solve`.

    ``k_init=None`` means ``min(20, I1, I2 * I3)``. ``lam`` is only used
    when ``lambda_schedule`` is None (a single stage at fixed weight).
    ``epsilon`` is the tolerated squared masked residual; when set, the
    continuation stops as soon as the residual gets below it.
    """

    k_init: Optional[int] = None
    lam: float = 0.0
    lambda_schedule: Optional[LambdaSchedule] = field(default_factory=LambdaSchedule)
    prune_ratio: float = 1e-2
    max_iters: int = 500
    rel_tol: float = 1e-8
    seed: int = 0
    epsilon: Optional[float] = None
    extrapolate: bool = True
    probe_pruning: bool = True

    def __post_init__(self):
        if self.k_init is not None and self.k_init < 1:
            raise ValueError("k_init must be at least 1")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not 0 < self.prune_ratio < 1:
            raise ValueError("prune_ratio must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


@dataclass
class SolveResult:
    factors: CpFactors
    rank_estimate: int
    objective_trace: List[float]
    masked_residual: float
    iterations: int
    converged: bool
    lambda_path: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


class _Problem:
    """Observed data split into contiguous per-slice arrays.

    Mode-3 slices are tiny in number (``P``) and each row-wise Gram matrix
    reduces to ``P`` dense matrix products, which is far cheaper than
    forming a Khatri-Rao design per row.
    """

    def __init__(self, observed: MaskedTensor):
        mask = observed.mask.astype(float)
        data = np.where(observed.mask, observed.values, 0)
        p = mask.shape[2]
        self.dims = mask.shape
        self.mask = mask
        self.data = data
        self.w = [np.ascontiguousarray(mask[:, :, i]) for i in range(p)]
        self.wt = [np.ascontiguousarray(mask[:, :, i].T) for i in range(p)]
        self.wy = [np.ascontiguousarray(data[:, :, i]) for i in range(p)]
        self.wyt = [np.ascontiguousarray(data[:, :, i].T) for i in range(p)]
        self.warnings: List[str] = []

    def fit(self, factors: CpFactors) -> float:
        resid = self.mask * (self.data - reconstruct(factors))
        return float(np.vdot(resid, resid).real)

    def objective(self, factors: CpFactors, lam: float) -> float:
        penalty = sum(np.vdot(f, f).real for f in factors.factors)
        return self.fit(factors) + lam * float(penalty)

    def normal_equations(self, factors: CpFactors, mode: int):
        a, b, c = factors.factors
        p = len(self.w)
        if mode == 1:
            bb, cc = _row_outer(b), _row_outer(c)
            gram = sum((self.w[i] @ bb) * cc[i] for i in range(p))
            rhs = sum((self.wy[i] @ b.conj()) * c[i].conj() for i in range(p))
        elif mode == 2:
            aa, cc = _row_outer(a), _row_outer(c)
            gram = sum((self.wt[i] @ aa) * cc[i] for i in range(p))
            rhs = sum((self.wyt[i] @ a.conj()) * c[i].conj() for i in range(p))
        elif mode == 3:
            aa, bb = _row_outer(a), _row_outer(b)
            gram = np.stack([((self.w[i] @ bb) * aa).sum(axis=0) for i in range(p)])
            rhs = np.stack([((self.wy[i] @ b.conj()) * a.conj()).sum(axis=0) for i in range(p)])
        else:
            raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
        rank = factors.rank
        return gram.reshape(-1, rank, rank), rhs

    def update(self, factors: CpFactors, mode: int, lam: float) -> np.ndarray:
        gram, rhs = self.normal_equations(factors, mode)
        rank = factors.rank
        ridge = lam if lam > 0 else ZERO_LAMBDA_FLOOR
        eye = np.eye(rank)
        try:
            return np.linalg.solve(gram + ridge * eye, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            scale = max(float(np.abs(gram).max()), 1.0)
            self.warnings.append(
                f"singular mode-{mode} system at lam={lam:.3g}; regularization floor "
                f"{1e-10 * scale:.3g} applied"
            )
            return np.linalg.solve(gram + (ridge + 1e-10 * scale) * eye, rhs[..., None])[..., 0]

    def sweep(self, factors: CpFactors, lam: float) -> CpFactors:
        mats = list(factors.factors)
        for mode in (1, 2, 3):
            mats[mode - 1] = self.update(CpFactors(*mats), mode, lam)
        return CpFactors(*mats)


def _row_outer(x: np.ndarray) -> np.ndarray:
    # row r holds conj(x_r) x_r^T flattened
    return (x.conj()[:, :, None] * x[:, None, :]).reshape(x.shape[0], -1)


def objective(observed: MaskedTensor, factors: CpFactors, lam: float) -> float:
    """Regularized objective value."""
    _check_dims(observed, factors)
    return _Problem(observed).objective(factors, lam)


def masked_residual(observed: MaskedTensor, factors: CpFactors) -> float:
    """``||O * (Y - reconstruct(factors))||_F``."""
    _check_dims(observed, factors)
    return float(np.sqrt(_Problem(observed).fit(factors)))


def factor_update(observed: MaskedTensor, factors: CpFactors, mode: int, lam: float) -> np.ndarray:
    """Exact minimizer of the objective over one factor, the others fixed.

    Each row solves its own ridge system built from the Khatri-Rao rows of
    the observed cells in that row; ``lam = 0`` uses a 1e-12 ridge floor.
    """
    _check_dims(observed, factors)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return _Problem(observed).update(factors, mode, lam)


def prune_components(factors: CpFactors, prune_ratio: float) -> CpFactors:
    """Drop components whose energy is below ``prune_ratio`` times the largest."""
    if not 0 < prune_ratio < 1:
        raise ValueError("prune_ratio must lie in (0, 1)")
    z = component_energies(factors)
    if z.size == 0 or z.max() <= 0:
        return factors.select(np.zeros(z.size, dtype=bool))
    return factors.select(z >= prune_ratio * z.max())


def _check_dims(observed: MaskedTensor, factors: CpFactors) -> None:
    if tuple(observed.dims) != tuple(factors.dims):
        raise ValueError(f"tensor dims {observed.dims} differ from factor dims {factors.dims}")


def default_k_init(dims) -> int:
    i1, i2, i3 = dims
    return max(1, min(20, i1, i2 * i3))


def initial_factors(observed: MaskedTensor, k_init: int, seed: int) -> CpFactors:
    """Seeded complex Gaussian factors scaled so the initial reconstruction
    norm equals ``||O*Y||_F / sqrt(observed fraction)``."""
    rng = np.random.default_rng(seed)
    mats = [
        (rng.standard_normal((d, k_init)) + 1j * rng.standard_normal((d, k_init))) / np.sqrt(2)
        for d in observed.dims
    ]
    factors = CpFactors(*mats)
    frac = observed.n_observed / observed.mask.size
    target = observed.observed_norm() / np.sqrt(frac)
    current = np.linalg.norm(reconstruct(factors))
    if current > 0 and target > 0:
        scale = (target / current) ** (1.0 / 3.0)
        factors = CpFactors(*(f * scale for f in factors.factors))
    return factors


class _Run:
    """Mutable state of one solve: current factors, trace, sweep count."""

    def __init__(self, problem: _Problem, config: SolverConfig):
        self.problem = problem
        self.config = config
        self.trace: List[float] = []
        self.iterations = 0

    def stage(self, factors: CpFactors, lam: float, record: bool = True):
        """Sweep until the relative decrease drops below ``rel_tol``.

        Returns ``(factors, objective, converged)``.
        """
        cfg = self.config
        problem = self.problem
        obj = problem.objective(factors, lam)
        step = 1.0
        for it in range(cfg.max_iters):
            previous = factors
            factors = problem.sweep(factors, lam)
            new_obj = problem.objective(factors, lam)
            if cfg.extrapolate and it > 0:
                trial = CpFactors(*(
                    f + step * (f - g) for f, g in zip(factors.factors, previous.factors)
                ))
                trial_obj = problem.objective(trial, lam)
                if trial_obj < new_obj:
                    factors, new_obj = trial, trial_obj
                    step = min(step * 1.5, 50.0)
                else:
                    step = max(step * 0.5, 0.5)
            self.iterations += 1
            if record:
                self.trace.append(new_obj)
            done = obj - new_obj < cfg.rel_tol * obj
            obj = new_obj
            if done:
                return factors, obj, True
        return factors, obj, False


def solve(
    observed: MaskedTensor,
    config: Optional[SolverConfig] = None,
    init: Optional[CpFactors] = None,
) -> SolveResult:
    """Recover low-rank CP factors from a partially observed tensor.

    ``init`` replaces the random initialization (its rank overrides
    ``k_init``).
    """
    config = config or SolverConfig()
    if observed.n_observed == 0:
        raise ValueError("observation mask is empty")
    problem = _Problem(observed)
    y_norm = observed.observed_norm()
    if y_norm == 0:
        zero = CpFactors.zeros(observed.dims, 0)
        return SolveResult(zero, 0, [0.0], 0.0, 0, True, [], [])

    if init is not None:
        _check_dims(observed, init)
        factors = init.copy()
    else:
        k_init = config.k_init or default_k_init(observed.dims)
        factors = initial_factors(observed, k_init, config.seed)

    schedule = config.lambda_schedule
    if schedule is None:
        lam0 = config.lam
        lam_floor = lam0
    else:
        lam0 = schedule.start
        if lam0 is None:
            lam0 = 0.1 * y_norm / np.sqrt(observed.n_observed)
        lam_floor = schedule.floor * lam0

    run = _Run(problem, config)
    lam = lam0
    lambda_path = [lam]
    run.trace.append(problem.objective(factors, lam))
    probed_ranks = set()
    converged = False
    while True:
        if factors.rank == 0:
            converged = True
            break
        factors, obj, converged = run.stage(factors, lam)

        pruned = prune_components(factors, config.prune_ratio)
        if pruned.rank < factors.rank:
            pruned_obj = problem.objective(pruned, lam)
            if pruned_obj <= obj * (1 + _TRACE_SLACK):
                factors, obj = pruned, pruned_obj
                run.trace.append(obj)

        if config.probe_pruning and factors.rank > 1 and factors.rank not in probed_ranks:
            weakest = int(np.argmin(component_energies(factors)))
            keep = np.arange(factors.rank) != weakest
            candidate, cand_obj, cand_conv = run.stage(factors.select(keep), lam, record=False)
            if cand_obj < obj:
                factors, obj, converged = candidate, cand_obj, cand_conv
                run.trace.append(obj)
            else:
                probed_ranks.add(factors.rank)

        if config.epsilon is not None and problem.fit(factors) <= config.epsilon:
            break
        if schedule is None or lam <= lam_floor * (1 + 1e-12):
            break
        lam = max(lam * schedule.factor, lam_floor)
        lambda_path.append(lam)
        run.trace.append(problem.objective(factors, lam))

    factors = prune_components(factors, config.prune_ratio)
    residual = float(np.sqrt(problem.fit(factors)))
    for msg in dict.fromkeys(problem.warnings):
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return SolveResult(
        factors=factors,
        rank_estimate=factors.rank,
        objective_trace=run.trace,
        masked_residual=residual,
        iterations=run.iterations,
        converged=converged,
        lambda_path=lambda_path,
        warnings=list(dict.fromkeys(problem.warnings)),
    )
