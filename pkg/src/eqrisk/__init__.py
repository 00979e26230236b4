"""Equal-risk pricing of European options via deep hedging.

Simulates market scenarios under several P-measure dynamics, trains
long/short hedging policies that minimise a convex risk measure of the
hedging error, and solves for the premium that equates the two residual
risks.
"""

from .models import (
    BSMParams,
    FilterUnderflowError,
    GarchParams,
    IVParams,
    MJDParams,
    PathBatch,
    RSParams,
    TimeGrid,
    attach_iv,
    filter_step,
    simulate,
    simulate_bsm,
    simulate_garch,
    simulate_iv,
    simulate_mjd,
    simulate_rs,
    stationary_distribution,
)
from .pricing import (
    QuotedOption,
    RnPrice,
    bs_call,
    bs_price,
    bs_put,
    norm_cdf,
    q_simulate,
    rn_price_bsm_put,
    rn_price_garch_put,
    rn_price_mjd_put,
    rn_price_put,
    rn_price_rs_put,
)
from .risk_measures import (
    TAIL_LEVELS,
    HedgeStatistics,
    RiskMeasureSpec,
    cvar_hat,
    cvar_spec,
    semi_lp,
    semi_lp_spec,
    stats_suite,
    var_hat,
)
from .neural import (
    AdamState,
    Network,
    NonFiniteLossError,
    adam_step,
    forward,
    glorot_init,
    grad_loss,
)
from .hedging import (
    FeatureSpec,
    HedgeSetup,
    InstrumentSet,
    PayoffSpec,
    hedging_statistics,
    rollout,
)
from .erp import (
    BisectionConfig,
    ErpSolution,
    MarketSpec,
    NoRootInIntervalError,
    Seeds,
    TrainConfig,
    ValidationRow,
    bisection_solve,
    delta_gap_profile,
    erp_convex_shortcut,
    residual_risk,
    train,
    validate_modified_training,
)
from .io import (
    batch_to_csv,
    load_batch,
    load_network,
    save_batch,
    save_network,
)
from . import presets

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
