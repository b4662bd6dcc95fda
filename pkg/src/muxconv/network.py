"""Whole-network assembly: fixed skeleton plus searched stages.

The skeleton (stem, stage widths, head) is not searched. A network is

    stem 3x3/2 conv -> 4 x [reduction block, N x MUXConv block] -> 1x1 head conv -> linear classifier

with every stage halving the resolution, for a total stride of 32.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_batch, check_feature_map, check_positive_int, check_rng
from .blocks import (
    ChannelMuxConfig,
    ComplexityTerm,
    InvertedBottleneckConfig,
    SpatialMuxConfig,
    channel_mux_forward,
    complexity_terms,
    count_actual_params,
    init_weights,
    mobilenet_block_forward,
    relu,
    swish,
    complexity_ratio,
)
from .exceptions import ShapeError
from .search_space import SPATIAL_STAGES, Blueprint, decode
from .tensor_ops import GroupedKernel, grouped_conv

__all__ = [
    "NetworkSkeleton",
    "DEFAULT_SKELETON",
    "ConvLayer",
    "LinearLayer",
    "LayerSpec",
    "network_layers",
    "network_complexity",
    "complexity_table",
    "build_network",
    "network_forward",
    "MUXNet",
]


@dataclass(frozen=True)
class NetworkSkeleton:
    """Fixed, non-searched part of the architecture."""

    stem_channels: int = 16
    stage_channels: Tuple[int, int, int, int] = (24, 40, 80, 160)
    head_channels: int = 1280
    num_classes: int = 1000
    in_channels: int = 3
    scale_r: int = 2

    def __post_init__(self):
        object.__setattr__(self, "stage_channels", tuple(int(c) for c in self.stage_channels))
        if len(self.stage_channels) != 4:
            raise ValueError("stage_channels must list four widths")
        for name in ("stem_channels", "head_channels", "num_classes", "in_channels", "scale_r"):
            check_positive_int(getattr(self, name), name)
        for c in self.stage_channels:
            check_positive_int(c, "stage width")

    @property
    def total_stride(self):
        return 2 ** 5

    def to_dict(self):
        return {
            "stem_channels": self.stem_channels,
            "stage_channels": list(self.stage_channels),
            "head_channels": self.head_channels,
            "num_classes": self.num_classes,
            "in_channels": self.in_channels,
            "scale_r": self.scale_r,
        }


DEFAULT_SKELETON = NetworkSkeleton()


@dataclass(frozen=True)
class ConvLayer:
    in_channels: int
    out_channels: int
    kernel_size: int = 1
    stride: int = 1


@dataclass(frozen=True)
class LinearLayer:
    in_features: int
    out_features: int
    bias: bool = True


@dataclass(frozen=True)
class LayerSpec:
    name: str
    stage: int
    config: object
    input_h: int
    input_w: int
    activation: str = "swish"
    terms: Tuple[ComplexityTerm, ...] = field(default=(), compare=False)

    @property
    def params(self):
        return sum(t.params for t in self.terms)

    @property
    def madds(self):
        return sum(t.madds for t in self.terms)


def _layer_terms(cfg, h, w):
    if isinstance(cfg, ConvLayer):
        k, s = cfg.kernel_size, cfg.stride
        oh, ow = (h - 1) // s + 1, (w - 1) // s + 1
        p = cfg.in_channels * cfg.out_channels * k * k
        return (ComplexityTerm(f"conv_{k}x{k}", p, oh * ow * p),)
    if isinstance(cfg, LinearLayer):
        terms = [ComplexityTerm("linear", cfg.in_features * cfg.out_features, cfg.in_features * cfg.out_features)]
        if cfg.bias:
            terms.append(ComplexityTerm("linear_bias", cfg.out_features, 0))
        return tuple(terms)
    return complexity_terms(cfg, h, w)


def network_layers(blueprint, resolution=224, skeleton=DEFAULT_SKELETON):
    """Expand a blueprint into the ordered layer list with input resolutions."""
    if not isinstance(blueprint, Blueprint):
        blueprint = decode(blueprint)
    resolution = check_positive_int(resolution, "resolution")
    if resolution % skeleton.total_stride:
        raise ShapeError(f"resolution {resolution} is not divisible by the total stride {skeleton.total_stride}")
    layers = []

    def add(name, stage, cfg, h, activation):
        try:
            terms = _layer_terms(cfg, h, h)
        except ShapeError as exc:
            raise ShapeError(f"{name}: {exc}") from exc
        layers.append(LayerSpec(name, stage, cfg, h, h, activation, terms))

    h = resolution
    add("stem", 0, ConvLayer(skeleton.in_channels, skeleton.stem_channels, 3, 2), h, "relu")
    h //= 2
    c_in = skeleton.stem_channels
    for stage_no, (st, c_out) in enumerate(zip(blueprint.stages, skeleton.stage_channels), start=1):
        act = "relu" if stage_no == 1 else "swish"
        try:
            red = InvertedBottleneckConfig(c_in, st.reduction_expansion, st.reduction_kernels, c_out, stride=2)
        except (ShapeError, ValueError) as exc:
            raise ShapeError(f"stage {stage_no} reduction: {exc}") from exc
        add(f"stage{stage_no}.reduction", stage_no, red, h, act)
        h //= 2
        spatial = None
        if stage_no in SPATIAL_STAGES and st.spatial not in (None, 0):
            spatial = SpatialMuxConfig.from_option(st.spatial, scale_r=skeleton.scale_r,
                                                   kernel_size=st.normal_kernel, group_factor=st.group_factor)
        for rep in range(st.repetitions):
            try:
                cfg = ChannelMuxConfig(c_out, st.leave_out, st.normal_expansion, st.group_factor,
                                       st.normal_kernel, spatial)
            except (ShapeError, ValueError) as exc:
                raise ShapeError(f"stage {stage_no} normal block: {exc}") from exc
            add(f"stage{stage_no}.normal{rep + 1}", stage_no, cfg, h, act)
        c_in = c_out
    add("head", 5, ConvLayer(c_in, skeleton.head_channels, 1, 1), h, "swish")
    add("classifier", 5, LinearLayer(skeleton.head_channels, skeleton.num_classes), 1, None)
    return layers


def network_complexity(blueprint, resolution=224, skeleton=DEFAULT_SKELETON):
    """Total ``(params, madds)`` of the network described by a blueprint or genotype."""
    layers = network_layers(blueprint, resolution, skeleton)
    return sum(layer.params for layer in layers), sum(layer.madds for layer in layers)


def complexity_table(blueprint, resolution=224, skeleton=DEFAULT_SKELETON):
    """Per-layer rows ``{layer, type, input, params, madds, ratio}``; ``ratio`` only for MUXConv blocks."""
    rows = []
    for layer in network_layers(blueprint, resolution, skeleton):
        ratio = None
        cfg = layer.config
        if isinstance(cfg, ChannelMuxConfig):
            ratio = complexity_ratio(cfg.group_factor, cfg.leave_out, cfg.in_channels, cfg.expansion,
                                     cfg.kernel_size)
        rows.append({
            "layer": layer.name,
            "type": type(cfg).__name__,
            "input": f"{layer.input_h}x{layer.input_w}",
            "params": layer.params,
            "madds": layer.madds,
            "ratio": ratio,
        })
    return rows


# --------------------------------------------------------------------------- instantiated networks


def _init_layer(cfg, rng):
    if isinstance(cfg, ConvLayer):
        fan_in = cfg.in_channels * cfg.kernel_size ** 2
        w = rng.standard_normal((cfg.out_channels, cfg.in_channels, cfg.kernel_size, cfg.kernel_size))
        return GroupedKernel(w * np.sqrt(2.0 / fan_in))
    if isinstance(cfg, LinearLayer):
        w = rng.standard_normal((cfg.out_features, cfg.in_features)) / np.sqrt(cfg.in_features)
        b = np.zeros(cfg.out_features) if cfg.bias else None
        return {"weight": w, "bias": b}
    return init_weights(cfg, random_state=rng)


def build_network(blueprint, resolution=224, skeleton=DEFAULT_SKELETON, random_state=None):
    """Instantiate weights for every layer; returns ``[(LayerSpec, weights), ...]``."""
    rng = check_rng(random_state)
    return [(layer, _init_layer(layer.config, rng)) for layer in network_layers(blueprint, resolution, skeleton)]


def network_forward(x, network):
    """Logits of one ``(3, R, R)`` image through an instantiated network."""
    h = check_feature_map(x)
    for layer, weights in network:
        cfg = layer.config
        if isinstance(cfg, ConvLayer):
            h = grouped_conv(h, weights, stride=cfg.stride, padding=cfg.kernel_size // 2)
            h = relu(h) if layer.activation == "relu" else swish(h)
        elif isinstance(cfg, LinearLayer):
            pooled = h.mean(axis=(1, 2))
            h = weights["weight"] @ pooled
            if weights["bias"] is not None:
                h = h + weights["bias"]
        elif isinstance(cfg, ChannelMuxConfig):
            h = channel_mux_forward(h, cfg, weights, activation=layer.activation)
        else:
            h = mobilenet_block_forward(h, cfg, weights, activation=layer.activation)
    return h


class MUXNet(TransformerMixin, BaseEstimator):
    """Untrained MUXNet built from a genotype; ``transform`` returns class logits.

    ``fit`` only instantiates weights (no training). Useful for checking the
    analytic complexity against literal parameter counts and for shape tests.
    """

    def __init__(self, genotype=None, resolution=32, skeleton=DEFAULT_SKELETON, random_state=None):
        self.genotype = genotype
        self.resolution = resolution
        self.skeleton = skeleton
        self.random_state = random_state

    def fit(self, X=None, y=None):
        genotype = self.genotype if self.genotype is not None else (0,) * 30
        self.blueprint_ = decode(genotype)
        self.network_ = build_network(self.blueprint_, self.resolution, self.skeleton, self.random_state)
        self.n_params_ = count_actual_params([w for _, w in self.network_])
        self.n_madds_ = sum(layer.madds for layer, _ in self.network_)
        return self

    def transform(self, X):
        check_is_fitted(self, "network_")
        batch, single = check_batch(X)
        expected = (self.skeleton.in_channels, self.resolution, self.resolution)
        if batch.shape[1:] != expected:
            raise ShapeError(f"X must have per-sample shape {expected}, got {batch.shape[1:]}")
        out = np.stack([network_forward(x, self.network_) for x in batch])
        return out[0] if single else out

    def predict(self, X):
        logits = self.transform(X)
        return np.argmax(logits, axis=-1)
