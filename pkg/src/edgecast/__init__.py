"""Joint caching, computing and service-route design for multicast mobile edge computing."""

__version__ = "0.1.0"

from .bandwidth import (  # noqa: E402
    BandwidthBreakdown,
    exact_average_bandwidth,
    route_rate,
    route_rates,
    saa_objective,
    sample_bandwidth,
    unicast_bandwidth,
)
from .cccp_admm import SolverConfig, solve_cccp_admm  # noqa: E402
from .heuristics import (  # noqa: E402
    alpha_le1_greedy,
    greedy_caching_computing_policy,
    greedy_caching_policy,
    mec_computing_policy,
    submodularity_check,
)
from .instance import (  # noqa: E402
    Instance,
    ServicePolicy,
    is_feasible,
    load_instance,
    make_instance,
    policy_to_decision,
    validate_instance,
)
from .oracle import enumerate_optimal, single_user_knapsack_items, solve_single_user  # noqa: E402
from .sampling import draw_samples, zipf_popularity  # noqa: E402
from .symmetric import (  # noqa: E402
    SymmetricInstance,
    closed_form_bandwidth,
    gain_vs_mec,
    gain_vs_unicast,
    optimal_counts,
    symmetric_lp,
)

__all__ = [
    "BandwidthBreakdown", "Instance", "ServicePolicy", "SolverConfig", "SymmetricInstance",
    "alpha_le1_greedy", "closed_form_bandwidth", "draw_samples", "enumerate_optimal",
    "exact_average_bandwidth", "gain_vs_mec", "gain_vs_unicast", "greedy_caching_computing_policy",
    "greedy_caching_policy", "is_feasible", "load_instance", "make_instance", "mec_computing_policy",
    "optimal_counts", "policy_to_decision", "route_rate", "route_rates", "saa_objective",
    "sample_bandwidth", "single_user_knapsack_items", "solve_cccp_admm", "solve_single_user",
    "submodularity_check", "symmetric_lp", "unicast_bandwidth", "validate_instance", "zipf_popularity",
]
