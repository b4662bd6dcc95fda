"""MUXConv building blocks, their forward passes and the analytic complexity model.

Three block families are provided:

* spatial multiplexing: split channels into (subpixel, identity, superpixel)
  groups, run a grouped convolution per group at its own resolution and map
  the results back;
* channel multiplexing (the MUXConv block): pass ``L*C`` channels through
  untouched, process the rest with ``1x1 expand -> KxK grouped conv (or spatial
  multiplexing) -> 1x1 compress`` and interleave both groups;
* the inverted bottleneck (MobileNet) block, used as baseline and as the
  stride-2 reduction block, optionally with parallel depth-wise kernels.

Complexity is reported as named terms so that per-layer tables and totals come
from the same numbers. Normalization and activation layers are not counted.
"""

from dataclasses import dataclass, fields, is_dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_batch, check_feature_map, check_positive_int, check_rng
from .exceptions import ShapeError
from .tensor_ops import (
    GroupedKernel,
    concat_channels,
    grouped_conv,
    interleave,
    relu,
    split_channels,
    subpixel,
    superpixel,
    swish,
)

__all__ = [
    "SPATIAL_OPTIONS",
    "SpatialMuxConfig",
    "ChannelMuxConfig",
    "InvertedBottleneckConfig",
    "ComplexityTerm",
    "ComplexityReport",
    "SpatialMuxWeights",
    "ChannelMuxWeights",
    "InvertedBottleneckWeights",
    "spatial_mux_forward",
    "channel_mux_forward",
    "mobilenet_block_forward",
    "init_weights",
    "complexity_terms",
    "complexity_report",
    "block_params",
    "block_flops",
    "complexity_ratio",
    "count_actual_params",
    "SpatialMultiplexer",
    "ChannelMultiplexer",
    "InvertedBottleneck",
]

# Spatial multiplexing settings in search-space order; -1 subpixel, 0 identity, 1 superpixel.
SPATIAL_OPTIONS = (0, (-1, 0, 0), (0, 0, 1), (1, 0, 1), (-1, 0, 0, 1))

# (subpixel, identity, superpixel) channel fractions of each option. Mostly an
# equal share per list entry, but [1, 0, 1] is a half/half identity/superpixel split.
_OPTION_FRACTIONS = {
    0: (Fraction(0), Fraction(1), Fraction(0)),
    (-1, 0, 0): (Fraction(1, 3), Fraction(2, 3), Fraction(0)),
    (0, 0, 1): (Fraction(0), Fraction(2, 3), Fraction(1, 3)),
    (1, 0, 1): (Fraction(0), Fraction(1, 2), Fraction(1, 2)),
    (-1, 0, 0, 1): (Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)),
}


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    return Fraction(value).limit_denominator(10_000)


def _activation(name):
    if name is None or name in ("linear", "identity"):
        return lambda v: v
    if name == "swish":
        return swish
    if name == "relu":
        return relu
    if callable(name):
        return name
    raise ValueError(f"unknown activation {name!r}; expected 'swish', 'relu' or None")


# --------------------------------------------------------------------------- configs


@dataclass(frozen=True)
class SpatialMuxConfig:
    """Channel fractions for the (subpixel, identity, superpixel) groups plus conv settings.

    ``group_factor`` is the number of input channels each output channel of
    the per-group convolution reads (1 is depth-wise).
    """

    group_fractions: Tuple[Fraction, Fraction, Fraction] = (Fraction(0), Fraction(1), Fraction(0))
    scale_r: int = 2
    kernel_size: int = 3
    group_factor: int = 1

    def __post_init__(self):
        fr = tuple(_as_fraction(f) for f in self.group_fractions)
        if len(fr) != 3 or any(f < 0 for f in fr) or sum(fr) != 1:
            raise ValueError(f"group_fractions must be three non-negative fractions summing to 1, got {fr}")
        object.__setattr__(self, "group_fractions", fr)
        check_positive_int(self.scale_r, "scale_r")
        if check_positive_int(self.kernel_size, "kernel_size") % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {self.kernel_size}")
        check_positive_int(self.group_factor, "group_factor")

    @classmethod
    def from_option(cls, option, scale_r=2, kernel_size=3, group_factor=1):
        """Build a config from a search-space setting such as ``(-1, 0, 0, 1)``.

        ``0`` means no spatial multiplexing; see ``_OPTION_FRACTIONS`` for the rest.
        """
        key = 0 if option is None or option == 0 else tuple(option) if isinstance(option, (list, tuple)) else option
        try:
            fr = _OPTION_FRACTIONS[key]
        except (KeyError, TypeError):
            raise ValueError(f"invalid spatial multiplexing option {option!r}; expected one of {SPATIAL_OPTIONS}") from None
        return cls(fr, scale_r=scale_r, kernel_size=kernel_size, group_factor=group_factor)

    @property
    def is_identity(self):
        return self.group_fractions[1] == 1

    def channel_split(self, channels):
        """Channel counts ``(C1, C2, C3)`` for a map with ``channels`` channels.

        ``C1`` is the largest multiple of ``G`` and ``C3`` the largest multiple
        of ``r*r*G`` not exceeding their nominal fractions; the identity group
        takes the rest. Exact fractions are reproduced whenever they are
        admissible.
        """
        g, r2 = self.group_factor, self.scale_r ** 2
        if channels % g:
            raise ShapeError(f"spatial multiplexing: {channels} channels not divisible by group factor {g}")
        f1, _, f3 = self.group_fractions
        c1 = int(f1 * channels // g) * g
        c3 = int(f3 * channels // (r2 * g)) * (r2 * g)
        c2 = channels - c1 - c3
        return c1, c2, c3


@dataclass(frozen=True)
class ChannelMuxConfig:
    """MUXConv block: ``C`` channels, leave-out ``L``, expansion ``E``, group factor ``G``, kernel ``K``."""

    in_channels: int
    leave_out: float = 0.0
    expansion: int = 6
    group_factor: int = 1
    kernel_size: int = 3
    spatial: Optional[SpatialMuxConfig] = None

    def __post_init__(self):
        c = check_positive_int(self.in_channels, "in_channels")
        check_positive_int(self.expansion, "expansion")
        check_positive_int(self.group_factor, "group_factor")
        if check_positive_int(self.kernel_size, "kernel_size") % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {self.kernel_size}")
        leave = _as_fraction(self.leave_out)
        if not 0 <= leave < 1:
            raise ValueError(f"leave_out must lie in [0, 1), got {self.leave_out}")
        processed = (1 - leave) * c
        if processed.denominator != 1 or processed < 1:
            raise ShapeError(f"(1 - L) * C = {processed} is not a positive integer (C={c}, L={self.leave_out})")
        if (self.expansion * int(processed)) % self.group_factor:
            raise ShapeError(
                f"expanded channels E*C_hat = {self.expansion * int(processed)} not divisible by G={self.group_factor}"
            )

    @property
    def processed_channels(self):
        return int((1 - _as_fraction(self.leave_out)) * self.in_channels)

    @property
    def unprocessed_channels(self):
        return self.in_channels - self.processed_channels

    @property
    def expanded_channels(self):
        return self.expansion * self.processed_channels

    @property
    def out_channels(self):
        return self.in_channels

    def spatial_config(self):
        """Spatial settings with this block's kernel size and group factor, or None."""
        if self.spatial is None or self.spatial.is_identity:
            return None
        return SpatialMuxConfig(
            self.spatial.group_fractions,
            scale_r=self.spatial.scale_r,
            kernel_size=self.kernel_size,
            group_factor=self.group_factor,
        )


@dataclass(frozen=True)
class InvertedBottleneckConfig:
    """MobileNet-style ``1x1 expand -> depth-wise -> 1x1 compress`` block.

    Several ``kernel_sizes`` run in parallel on an even split of the expanded
    channels; any remainder goes to the smallest kernel.
    """

    in_channels: int
    expansion: int = 6
    kernel_sizes: Tuple[int, ...] = (3,)
    out_channels: Optional[int] = None
    stride: int = 1

    def __post_init__(self):
        check_positive_int(self.in_channels, "in_channels")
        check_positive_int(self.expansion, "expansion")
        ks = (self.kernel_sizes,) if isinstance(self.kernel_sizes, (int, np.integer)) else tuple(self.kernel_sizes)
        ks = tuple(sorted(int(k) for k in ks))
        if not ks or any(k < 1 or k % 2 == 0 for k in ks):
            raise ValueError(f"kernel sizes must be odd positive integers, got {self.kernel_sizes}")
        object.__setattr__(self, "kernel_sizes", ks)
        if self.out_channels is None:
            object.__setattr__(self, "out_channels", self.in_channels)
        check_positive_int(self.out_channels, "out_channels")
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.expanded_channels < len(ks):
            raise ShapeError(f"{self.expanded_channels} expanded channels cannot feed {len(ks)} kernels")

    @property
    def expanded_channels(self):
        return self.expansion * self.in_channels

    def branch_channels(self):
        n, k = self.expanded_channels, len(self.kernel_sizes)
        base = [n // k] * k
        base[0] += n - sum(base)
        return tuple(base)

    @property
    def has_residual(self):
        return self.stride == 1 and self.in_channels == self.out_channels


BlockConfig = Union[ChannelMuxConfig, InvertedBottleneckConfig]


# --------------------------------------------------------------------------- weights


@dataclass(frozen=True)
class SpatialMuxWeights:
    """Per-group kernels; ``None`` marks an empty group."""

    subpixel: Optional[GroupedKernel]
    identity: Optional[GroupedKernel]
    superpixel: Optional[GroupedKernel]


@dataclass(frozen=True)
class ChannelMuxWeights:
    expand: GroupedKernel
    mix: Union[GroupedKernel, SpatialMuxWeights]
    compress: GroupedKernel


@dataclass(frozen=True)
class InvertedBottleneckWeights:
    expand: GroupedKernel
    depthwise: Tuple[GroupedKernel, ...]
    compress: GroupedKernel


def _random_kernel(rng, out_c, in_per_group, k, groups, bias):
    fan_in = in_per_group * k * k
    w = rng.standard_normal((out_c, in_per_group, k, k)) * np.sqrt(2.0 / fan_in)
    b = rng.standard_normal(out_c) * 0.01 if bias else None
    return GroupedKernel(w, groups=groups, bias=b)


def _spatial_kernel_shapes(cfg, channels):
    """(channels, groups) seen by each spatial group convolution, ``None`` for empty groups."""
    c1, c2, c3 = cfg.channel_split(channels)
    r2, g = cfg.scale_r ** 2, cfg.group_factor
    shapes = []
    for n in (c1 * r2, c2, c3 // r2):
        shapes.append(None if n == 0 else (n, n // g))
    return shapes


def init_weights(cfg, random_state=None, bias=False):
    """Draw He-normal weights for a block configuration."""
    rng = check_rng(random_state)
    if isinstance(cfg, ChannelMuxConfig):
        c_hat, e_c = cfg.processed_channels, cfg.expanded_channels
        expand = _random_kernel(rng, e_c, c_hat, 1, 1, bias)
        spatial = cfg.spatial_config()
        if spatial is None:
            mix = _random_kernel(rng, e_c, cfg.group_factor, cfg.kernel_size, e_c // cfg.group_factor, bias)
        else:
            kernels = []
            for shape in _spatial_kernel_shapes(spatial, e_c):
                if shape is None:
                    kernels.append(None)
                else:
                    n, groups = shape
                    kernels.append(_random_kernel(rng, n, cfg.group_factor, cfg.kernel_size, groups, bias))
            mix = SpatialMuxWeights(*kernels)
        compress = _random_kernel(rng, c_hat, e_c, 1, 1, bias)
        return ChannelMuxWeights(expand, mix, compress)
    if isinstance(cfg, InvertedBottleneckConfig):
        e_c = cfg.expanded_channels
        expand = _random_kernel(rng, e_c, cfg.in_channels, 1, 1, bias)
        dw = tuple(
            _random_kernel(rng, n, 1, k, n, bias) for n, k in zip(cfg.branch_channels(), cfg.kernel_sizes)
        )
        compress = _random_kernel(rng, cfg.out_channels, e_c, 1, 1, bias)
        return InvertedBottleneckWeights(expand, dw, compress)
    if isinstance(cfg, SpatialMuxConfig):
        raise TypeError("spatial multiplexing weights depend on the channel count; use init_spatial_weights")
    raise TypeError(f"unsupported block configuration {type(cfg).__name__}")


def init_spatial_weights(cfg, channels, random_state=None, bias=False):
    rng = check_rng(random_state)
    kernels = []
    for shape in _spatial_kernel_shapes(cfg, channels):
        if shape is None:
            kernels.append(None)
        else:
            n, groups = shape
            kernels.append(_random_kernel(rng, n, cfg.group_factor, cfg.kernel_size, groups, bias))
    return SpatialMuxWeights(*kernels)


# --------------------------------------------------------------------------- forward passes


def _same_conv(x, kernel, stride=1):
    return grouped_conv(x, kernel, stride=stride, padding=kernel.kernel_size[0] // 2)


def spatial_mux_forward(x, cfg, weights):
    """Spatial multiplexing of a feature map; output has the shape of ``x``."""
    x = check_feature_map(x)
    c, _, _ = x.shape
    r = cfg.scale_r
    sizes = cfg.channel_split(c)
    groups = split_channels(x, sizes)
    kernels = (weights.subpixel, weights.identity, weights.superpixel)
    outputs = []
    for idx, (part, kernel) in enumerate(zip(groups, kernels)):
        if part.shape[0] == 0:
            outputs.append(part)
            continue
        if kernel is None:
            raise ShapeError(f"group {idx}: {part.shape[0]} channels but no kernel supplied")
        try:
            if idx == 0:
                out = superpixel(_same_conv(subpixel(part, r), kernel), r)
            elif idx == 1:
                out = _same_conv(part, kernel)
            else:
                out = subpixel(_same_conv(superpixel(part, r), kernel), r)
        except ShapeError as exc:
            raise ShapeError(f"spatial group {idx}: {exc}") from exc
        outputs.append(out)
    return concat_channels(outputs)


def channel_mux_forward(x, cfg, weights, activation="swish"):
    """Channel multiplexing block: skip ``L*C`` channels, process the rest, interleave."""
    x = check_feature_map(x)
    if x.shape[0] != cfg.in_channels:
        raise ShapeError(f"input has {x.shape[0]} channels, block expects {cfg.in_channels}")
    act = _activation(activation)
    kept, processed = split_channels(x, [cfg.unprocessed_channels, cfg.processed_channels])
    h = act(_same_conv(processed, weights.expand))
    if isinstance(weights.mix, SpatialMuxWeights):
        spatial = cfg.spatial_config()
        if spatial is None:
            raise ShapeError("spatial weights supplied for a block without spatial multiplexing")
        h = spatial_mux_forward(h, spatial, weights.mix)
    else:
        h = _same_conv(h, weights.mix)
    h = act(h)
    h = _same_conv(h, weights.compress)
    return interleave(kept, h)


def mobilenet_block_forward(x, cfg, weights, activation="swish", residual=True):
    """Inverted bottleneck; adds the input back when shapes allow and ``residual`` is set."""
    x = check_feature_map(x)
    if x.shape[0] != cfg.in_channels:
        raise ShapeError(f"input has {x.shape[0]} channels, block expects {cfg.in_channels}")
    if len(weights.depthwise) != len(cfg.kernel_sizes):
        raise ShapeError(f"{len(weights.depthwise)} depth-wise kernels for {len(cfg.kernel_sizes)} branches")
    act = _activation(activation)
    h = act(_same_conv(x, weights.expand))
    branches = split_channels(h, list(cfg.branch_channels()))
    h = concat_channels([_same_conv(b, k, stride=cfg.stride) for b, k in zip(branches, weights.depthwise)])
    h = act(h)
    out = _same_conv(h, weights.compress)
    if residual and cfg.has_residual:
        out = out + x
    return out


# --------------------------------------------------------------------------- complexity


@dataclass(frozen=True)
class ComplexityTerm:
    name: str
    params: int
    madds: int


@dataclass(frozen=True)
class ComplexityReport:
    params: int
    flops: int
    input_h: int
    input_w: int
    terms: Tuple[ComplexityTerm, ...] = ()


def _conv_out(size, k, stride):
    return (size + 2 * (k // 2) - k) // stride + 1


def complexity_terms(cfg, input_h=1, input_w=1):
    """Per-layer parameter and multiply-add counts of a block at the given input size."""
    h, w = input_h, input_w
    if isinstance(cfg, ChannelMuxConfig):
        c_hat, e_c, g, k = cfg.processed_channels, cfg.expanded_channels, cfg.group_factor, cfg.kernel_size
        terms = [ComplexityTerm("expand_1x1", c_hat * e_c, h * w * c_hat * e_c)]
        spatial = cfg.spatial_config()
        if spatial is None:
            p = g * e_c * k * k
            terms.append(ComplexityTerm(f"group_conv_{k}x{k}", p, h * w * p))
        else:
            r = spatial.scale_r
            c1, c2, c3 = spatial.channel_split(e_c)
            if h % r or w % r:
                raise ShapeError(f"spatial multiplexing needs {h}x{w} divisible by r={r}")
            for name, n, hh, ww in (
                ("subpixel_conv", c1 * r * r, h // r, w // r),
                ("identity_conv", c2, h, w),
                ("superpixel_conv", c3 // (r * r), h * r, w * r),
            ):
                p = n * g * k * k
                terms.append(ComplexityTerm(f"{name}_{k}x{k}", p, hh * ww * p))
        terms.append(ComplexityTerm("compress_1x1", e_c * c_hat, h * w * e_c * c_hat))
        return tuple(terms)
    if isinstance(cfg, InvertedBottleneckConfig):
        e_c = cfg.expanded_channels
        oh, ow = _conv_out(h, 1, cfg.stride), _conv_out(w, 1, cfg.stride)
        terms = [ComplexityTerm("expand_1x1", cfg.in_channels * e_c, h * w * cfg.in_channels * e_c)]
        for n, k in zip(cfg.branch_channels(), cfg.kernel_sizes):
            p = n * k * k
            terms.append(ComplexityTerm(f"depthwise_{k}x{k}", p, oh * ow * p))
        p = e_c * cfg.out_channels
        terms.append(ComplexityTerm("compress_1x1", p, oh * ow * p))
        return tuple(terms)
    raise TypeError(f"unsupported block configuration {type(cfg).__name__}")


def complexity_report(cfg, input_h=1, input_w=1):
    terms = complexity_terms(cfg, input_h, input_w)
    return ComplexityReport(
        params=sum(t.params for t in terms),
        flops=sum(t.madds for t in terms),
        input_h=input_h,
        input_w=input_w,
        terms=terms,
    )


def block_params(cfg):
    """Exact bias-free parameter count of a block."""
    # parameter counts do not depend on resolution; pick one the pixel ops accept
    spatial = cfg.spatial_config() if isinstance(cfg, ChannelMuxConfig) else None
    side = 1 if spatial is None else spatial.scale_r
    return sum(t.params for t in complexity_terms(cfg, side, side))


def block_flops(cfg, input_h, input_w):
    """Multiply-adds of a block; ``H*W*params`` for stride-1 blocks without spatial multiplexing."""
    return sum(t.madds for t in complexity_terms(cfg, input_h, input_w))


def complexity_ratio(group_factor, leave_out, channels, expansion, kernel_size=3):
    """Parameter ratio of a MUXConv block to a MobileNet block at equal ``C``, ``E``, ``K``."""
    mux = ChannelMuxConfig(channels, leave_out, expansion, group_factor, kernel_size)
    mobile = InvertedBottleneckConfig(channels, expansion, (kernel_size,))
    return block_params(mux) / block_params(mobile)


def count_actual_params(weights):
    """Number of stored weight and bias values in any (nested) weight container."""
    if weights is None:
        return 0
    if isinstance(weights, GroupedKernel):
        return weights.n_params
    if isinstance(weights, (tuple, list)):
        return sum(count_actual_params(w) for w in weights)
    if isinstance(weights, dict):
        return sum(count_actual_params(w) for w in weights.values())
    if is_dataclass(weights):
        return sum(count_actual_params(getattr(weights, f.name)) for f in fields(weights))
    if isinstance(weights, np.ndarray):
        return int(weights.size)
    raise TypeError(f"cannot count parameters of {type(weights).__name__}")


# --------------------------------------------------------------------------- estimators


class _BlockTransformer(TransformerMixin, BaseEstimator):
    """Shared fit/transform plumbing: ``fit`` draws weights for the input's channel count."""

    def _build_config(self, channels):
        raise NotImplementedError

    def _forward(self, x):
        raise NotImplementedError

    def fit(self, X, y=None):
        batch, _ = check_batch(X)
        check_feature_map(batch[0])
        self.n_channels_in_ = batch.shape[1]
        self.config_ = self._build_config(self.n_channels_in_)
        self.weights_ = self._init_weights(self.config_)
        self.n_params_ = count_actual_params(self.weights_)
        return self

    def _init_weights(self, cfg):
        return init_weights(cfg, random_state=self.random_state, bias=self.bias)

    def transform(self, X):
        check_is_fitted(self, "weights_")
        batch, single = check_batch(X)
        if batch.shape[1] != self.n_channels_in_:
            raise ShapeError(f"X has {batch.shape[1]} channels, estimator was fitted with {self.n_channels_in_}")
        out = np.stack([self._forward(x) for x in batch])
        return out[0] if single else out


class SpatialMultiplexer(_BlockTransformer):
    """Spatial multiplexing layer as a transformer on ``(C, H, W)`` maps or batches.

    Parameters
    ----------
    group_fractions : tuple of three fractions
        Shares of channels that are subpixeled, kept and superpixeled.
    scale : int
        Multiplexing scale ``r``.
    kernel_size : int
        Odd kernel size of the per-group convolutions.
    group_factor : int
        Input channels read by each output channel (1 is depth-wise).
    random_state : int, Generator or None
        Seed for weight initialisation in :meth:`fit`.
    bias : bool
        Whether convolutions carry a bias.
    """

    def __init__(self, group_fractions=(0.25, 0.5, 0.25), scale=2, kernel_size=3, group_factor=1,
                 random_state=None, bias=False):
        self.group_fractions = group_fractions
        self.scale = scale
        self.kernel_size = kernel_size
        self.group_factor = group_factor
        self.random_state = random_state
        self.bias = bias

    def _build_config(self, channels):
        return SpatialMuxConfig(self.group_fractions, self.scale, self.kernel_size, self.group_factor)

    def _init_weights(self, cfg):
        return init_spatial_weights(cfg, self.n_channels_in_, random_state=self.random_state, bias=self.bias)

    def _forward(self, x):
        return spatial_mux_forward(x, self.config_, self.weights_)


class ChannelMultiplexer(_BlockTransformer):
    """MUXConv block as a transformer.

    ``spatial`` accepts a search-space option (e.g. ``(-1, 0, 0, 1)``) or a
    :class:`SpatialMuxConfig`; the block's kernel size and group factor are
    used for the spatial convolutions.
    """

    def __init__(self, leave_out=0.25, expansion=6, group_factor=2, kernel_size=3, spatial=None,
                 activation="swish", random_state=None, bias=False):
        self.leave_out = leave_out
        self.expansion = expansion
        self.group_factor = group_factor
        self.kernel_size = kernel_size
        self.spatial = spatial
        self.activation = activation
        self.random_state = random_state
        self.bias = bias

    def _build_config(self, channels):
        spatial = self.spatial
        if spatial is not None and not isinstance(spatial, SpatialMuxConfig):
            spatial = SpatialMuxConfig.from_option(spatial)
        return ChannelMuxConfig(channels, self.leave_out, self.expansion, self.group_factor,
                                self.kernel_size, spatial)

    def _forward(self, x):
        return channel_mux_forward(x, self.config_, self.weights_, activation=self.activation)


class InvertedBottleneck(_BlockTransformer):
    """MobileNet inverted bottleneck as a transformer; ``kernel_size`` may be a tuple of parallel kernels."""

    def __init__(self, expansion=6, kernel_size=3, out_channels=None, stride=1, activation="swish",
                 residual=True, random_state=None, bias=False):
        self.expansion = expansion
        self.kernel_size = kernel_size
        self.out_channels = out_channels
        self.stride = stride
        self.activation = activation
        self.residual = residual
        self.random_state = random_state
        self.bias = bias

    def _build_config(self, channels):
        return InvertedBottleneckConfig(channels, self.expansion, self.kernel_size, self.out_channels, self.stride)

    def _forward(self, x):
        return mobilenet_block_forward(x, self.config_, self.weights_, self.activation, self.residual)
