"""Rate-distortion theory for deductive sources over function-free Datalog."""
from .consequences import (
    ChannelModel,
    blocklength_benchmarks,
    closure_converse,
    depth_thresholds,
    fano_bound,
    message_converse,
    separation_check,
)
from .datalog import (
    Fact,
    Program,
    Reasoner,
    active_universe,
    bounded_closure,
    closure,
    derivation_depth,
    derives,
    immediate_consequence,
    parse_facts,
    parse_program,
)
from .distortion import (
    check_core_coverage,
    check_core_disjoint,
    check_delta_disjoint,
    check_pairwise_realisability,
    closure_distortion,
    closure_fidelity,
    delta_distortion,
    distortion_matrix,
    hamming_distortion,
    recon_sets,
)
from .generators import (
    GeneratorSpec,
    gen_example,
    gen_supply_chain,
    gen_tag_seeded,
    materialization_sweep,
)
from .info import (
    ba_capacity,
    ba_rate_distortion,
    binary_entropy,
    brute_force_min_information,
    entropy,
    min_information_constrained,
    mutual_information,
)
from .instance import dump, dumps, load, loads
from .rates import (
    RateReport,
    build_gamma0,
    direct_zero_rate,
    rate_depth_distortion,
    rate_depth_sweep,
    rate_depth_zero,
    rd_curve,
    rd_function,
    restricted_zero_rate,
    zero_rate_disjoint,
    zero_rate_general,
    zero_rate_graph,
)
from .source import (
    DeductiveSource,
    delta_core,
    depth_profile,
    essential_set,
    extract_core,
    is_order_robust,
)

__version__ = "0.1.0"
