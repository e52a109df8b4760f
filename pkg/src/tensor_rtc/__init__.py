"""Robust low-tubal-rank tensor recovery in the t-SVD framework."""

__version__ = "0.1.0"

from .estimators import RobustTensorCompletion, TubalRankTruncation
from .exceptions import *  # noqa: F403
from .experiments import (
    PhaseGrid,
    SyntheticSpec,
    TrialResult,
    gen_instance,
    lemma1_check,
    lemma4_check,
    psnr,
    rel_error,
    rmse,
    run_phase_grid,
    run_recovery_table,
    run_trial,
)
from .sampling import (
    IncoherenceReport,
    ObservationMask,
    TangentSpace,
    incoherence,
    project_omega,
    project_tangent,
    sample_mask,
    soft_threshold,
)
from .solver import AdmmConfig, RecoveryResult, default_lambda, solve_rtc, solve_tc, solve_trpca
from .tensor_core import (
    BasisSpec,
    basis,
    column_basis,
    conj_transpose,
    dft_mode3,
    identity_tensor,
    idft_mode3,
    inner_product,
    is_f_diagonal,
    is_orthogonal,
    norm,
    spectral_norm,
    t_product,
    tube_basis,
    unit_tensor,
)
from .tsvd import RankReport, TSvdFactors, prox_tnn, tnn, truncate_tubal, tsvd, tsvd_skinny, tubal_ranks
