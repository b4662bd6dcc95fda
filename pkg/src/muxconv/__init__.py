"""MUXConv blocks, MUXNet search space and reference-guided PBI search in NumPy."""

from .blocks import (
    ChannelMultiplexer,
    ChannelMuxConfig,
    InvertedBottleneck,
    InvertedBottleneckConfig,
    SpatialMultiplexer,
    SpatialMuxConfig,
    block_flops,
    block_params,
    channel_mux_forward,
    complexity_ratio,
    count_actual_params,
    init_weights,
    mobilenet_block_forward,
    spatial_mux_forward,
)
from .exceptions import (
    BenchmarkFormatError,
    ConfigError,
    EvaluationError,
    GenotypeError,
    KeyNotFoundError,
    ShapeError,
)
from .moead import (
    DecompositionSearch,
    IdealPoint,
    PbiParams,
    RegularizedEvolution,
    SearchResult,
    pbi,
    reference_direction,
    regularized_evolution,
    search,
    update_ideal,
)
from .network import MUXNet, NetworkSkeleton, complexity_table, network_complexity
from .objectives import (
    AnalyticEvaluator,
    NormalizationBounds,
    ObjectiveNormalizer,
    SyntheticEvaluator,
    TabularBenchmark,
    TabularEvaluator,
    generate_benchmark,
    load_tabular,
    normalize,
    write_tabular,
)
from .search_space import (
    Blueprint,
    MuxNetSpace,
    SpaceBounds,
    canonical_key,
    decode,
    encode,
    parse_genotype,
    random_genotype,
    space_volume,
)
from .tensor_ops import GroupedKernel, grouped_conv, interleave, subpixel, superpixel, swish

__version__ = "0.1.0"
