"""Line spectral estimation by CP decomposition of an incomplete folded tensor."""
from .cp_core import (
    AlignmentReport, CpFactors, align_solutions, component_energies, khatri_rao,
    krank, kruskal_check, mode_n_fold, mode_n_unfold, reconstruct,
)
from .errors import DegenerateColumnError, EmptyModelError, InvalidModelError, UnderdeterminedError
from .experiments import (
    ExperimentConfig, TrialRecord, rsnr, run_phase_transition, run_sweep, success,
)
from .frequency import (
    FrequencyEstimate, column_frequency, estimate_amplitudes, estimate_model,
    extract_frequencies, reconstruct_signal,
)
from .signal_model import (
    SampleSet, SpectralModel, random_model, sample_observations, synthesize_signal,
)
from .solver import (
    LambdaSchedule, SolveResult, SolverConfig, factor_update, masked_residual,
    prune_components, solve,
)
from .tensorization import (
    FoldParams, MaskedTensor, ValidationReport, cell_to_sample_index, fold,
    unfold_to_signal, validate_params,
)

__version__ = "0.1.0"
