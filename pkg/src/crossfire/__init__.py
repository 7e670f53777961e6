"""crossfire: multi-agent traffic-signal control on an analytic delay model.

Autonomous agents (one per intersection) schedule their green phase with
coordinated fuzzy Q-learning and are benchmarked against fixed-time, fuzzy,
tabular Q-learning, and plain fuzzy Q-learning controllers.
"""

from .agents import (
    CONTROLLER_KINDS,
    Controller,
    CoordinatedFuzzyQController,
    FixedTimeController,
    FuzzyController,
    FuzzyQController,
    LearningParams,
    NeighborExchange,
    QLearningController,
    build_controller,
)
from .config import ConfigError, ExperimentConfig, load_config, validate_config
from .fuzzy import (
    FuzzyDefinitionError,
    FuzzyInferenceSystem,
    FuzzyRule,
    LinguisticVariable,
    MembershipFunction,
    NoRuleFiredError,
    centroid,
    fire_strength,
)
from .learning import (
    FqlRuleBase,
    FqlStepRecord,
    NeighborReward,
    QTable,
    choose_index,
    combine_rewards,
    fuzzy_reward,
    fuzzy_weight,
)
from .presets import DEFAULT_CONFIG, FuzzySystems, build_systems, default_config
from .simulation import (
    CycleRecord,
    NetworkTopology,
    RunResult,
    SimConfig,
    generate_volumes,
    run_simulation,
    step_cycle,
)
from .traffic import (
    ApproachState,
    DelayResult,
    PhaseSchedule,
    green_ratio,
    hcm_delay,
    intersection_delay,
    saturation,
)

__version__ = "0.1.0"
