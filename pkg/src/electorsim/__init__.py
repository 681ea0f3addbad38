"""electorsim: district-election simulation and likelihood-free inference.

Three stochastic models place a fixed population of party supporters into
districts (polarization, community, and concentration dynamics); rejection
sampling and regression estimators recover model parameters from observed
seat counts and winning margins.
"""

from .core import (
    ElectionConfig,
    ElectionOutcome,
    IOFailure,
    ValidationError,
    VoteMatrix,
    apportion,
    read_votes_csv,
    tally,
    uniform_capacities,
    write_votes_csv,
)
from .generators import (
    DpmParams,
    EcmParams,
    MODEL_TAGS,
    PcmParams,
    params_from_values,
    simulate,
    simulate_dpm,
    simulate_ecm,
    simulate_pcm,
    task_seed_sequence,
)
from .inference import (
    AbcResult,
    ParamVector,
    PriorSpec,
    abc_explore_exploit,
    abc_rejection,
    map_estimate,
)
from .regression import (
    ConfigRanges,
    MlpModel,
    TrainingSet,
    bisection_estimate,
    features_from_stats,
    generate_training_set,
    hybrid_estimate,
    mlp_predict,
    mlp_train,
)
from .summaries import SummaryStats, distance, estimate_scale, summarize
from .experiments import (
    ExperimentSpec,
    ObservedElection,
    extrapolate,
    fit,
    fit_from_provenance,
    ingest_observed,
    load_delhi,
    resolve_observed,
    run_sweep,
)

__version__ = "0.1.0"
