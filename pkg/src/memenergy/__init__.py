"""Energy accounting for memory-augmented LLM pipelines."""

__version__ = "0.1.0"

from .energy_model import (  # noqa: E402
    PUBLISHED_COEFFICIENTS,
    EnergyModelCoefficients,
    EnergySample,
    fit_energy_model,
    published_model,
    predict_energy,
    r_squared_of,
)
from .metrics import (  # noqa: E402
    EffectivenessScores,
    FormationStats,
    GenerationMetricTriple,
    GenerationStats,
    cost_multiple,
    ear,
    energy_per_memory_token,
    energy_per_response_token,
    generation_ratios,
    per_token_times,
    rerr,
)
from .pipeline import (  # noqa: E402
    EnergyBreakdown,
    PipelineConfig,
    QueryWorkload,
    geor,
    optimal_energy,
    simulate_pipeline,
)
from .sweep import SweepRow, SweepSpec, emit_report, run_sweep  # noqa: E402
from .trace import (  # noqa: E402
    CumulativeEnergyTrace,
    InferenceInterval,
    PowerTrace,
    baseline_subtract,
    build_samples,
    counter_energy,
    integrate_power,
)
