"""Simulation lab for recovering a linear bandit environment's parameter from
reward-free interaction logs via burn-in truncation and suffix imitation."""

__version__ = "0.1.0"

from .environment import (
    ContextSet,
    ProblemInstance,
    RngStream,
    make_instance,
    minimum_gap,
    optimal_arm,
    realize_reward,
    sample_context,
    sample_theta_star,
)
from .learners import (
    InteractionRecord,
    LearnerConfig,
    LearnerState,
    init_state,
    learner_update,
    lints_select,
    linucb_select,
    run_episode,
    run_episode_with_state,
)
from .linalg import (
    argmax_arm,
    cholesky,
    sherman_morrison_update,
    softmax_nll_and_grad,
    spearman_rho,
)
from .metrics import (
    DiagnosticsReport,
    EvaluationSet,
    MassartInstance,
    clean_risk,
    cumulative_regret,
    direction_error,
    late_policy_generalization,
    make_evaluation_set,
    massart_transfer_check,
    mean_ci,
    predictability_diagnostic,
    predictive_regret,
    windowed_error_rate,
)
from .observer import (
    BurnInSchedule,
    FitConfig,
    ObserverPolicy,
    ObserverRecord,
    burn_in_length,
    empirical_imitation_risk,
    fit_observer,
    oracle_sweep,
    project_observer_view,
)

# harness imports `__version__` from here, so it must come after that binding
from .harness import (  # noqa: E402
    ExperimentConfig,
    ResultRow,
    RunManifest,
    emit_results,
    read_results,
    run_burnin_sweep,
    run_diagnostics,
    run_learner_vs_observer,
    run_rate_study,
    run_transfer_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
