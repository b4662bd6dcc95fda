"""Self-checks behind ``muxconv verify``: small-scale versions of the invariant suites."""

import math
import time
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import tensor_ops
from .blocks import (
    ChannelMuxConfig,
    InvertedBottleneckConfig,
    block_flops,
    block_params,
    complexity_ratio,
    count_actual_params,
    init_weights,
)
from .moead import IdealPoint, PbiParams, pbi, update_ideal
from .search_space import FULL_BOUNDS, canonical_key, decode, encode, parse_key, random_genotype, space_volume
from .tensor_ops import GroupedKernel, grouped_conv

__all__ = ["SuiteResult", "SUITES", "FAULTS", "naive_conv", "run_suites"]

FAULTS = ("subpixel",)


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: List[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self):
        return not self.failures

    def check(self, cond, message):
        self.checks += 1
        if not cond:
            self.failures.append(message)


def naive_conv(x, kernel, stride=1, padding=0):
    """Direct six-loop grouped cross-correlation, the reference for :func:`grouped_conv`."""
    c, h, w = x.shape
    kh, kw = kernel.kernel_size
    xp = np.zeros((c, h + 2 * padding, w + 2 * padding))
    xp[:, padding:padding + h, padding:padding + w] = x
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    cin = kernel.in_channels_per_group
    cout = kernel.out_channels // kernel.groups
    out = np.zeros((kernel.out_channels, oh, ow))
    for o in range(kernel.out_channels):
        g = o // cout
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for ci in range(cin):
                    for a in range(kh):
                        for b in range(kw):
                            acc += kernel.weights[o, ci, a, b] * xp[g * cin + ci, i * stride + a, j * stride + b]
                out[o, i, j] = acc
    if kernel.bias is not None:
        out += kernel.bias[:, None, None]
    return out


def _corrupt_subpixel(x, r):
    # dy and dx swapped in the channel layout
    c, h, w = x.shape
    out = x.reshape(c, h // r, r, w // r, r).transpose(0, 4, 2, 1, 3)
    return np.ascontiguousarray(out.reshape(c * r * r, h // r, w // r))


def _roundtrip(res, rng, fault):
    sub = _corrupt_subpixel if fault == "subpixel" else tensor_ops.subpixel
    for _ in range(50):
        c = int(rng.integers(1, 5))
        h, w = 2 * int(rng.integers(1, 6)), 2 * int(rng.integers(1, 6))
        x = rng.standard_normal((c, h, w))
        res.check(np.array_equal(tensor_ops.superpixel(sub(x, 2), 2), x),
                  f"superpixel(subpixel(x)) != x for shape {x.shape}")
        y = rng.standard_normal((4 * c, h, w))
        res.check(np.array_equal(sub(tensor_ops.superpixel(y, 2), 2), y),
                  f"subpixel(superpixel(x)) != x for shape {y.shape}")
        nu, np_ = int(rng.integers(0, 6)), int(rng.integers(0, 6))
        if nu + np_:
            u, p = rng.standard_normal((nu, 2, 2)), rng.standard_normal((np_, 2, 2))
            merged = tensor_ops.interleave(u, p)
            order = tensor_ops.interleave_order(nu, np_)
            u_back = merged[[k for k, (s, _) in enumerate(order) if s == "u"]]
            p_back = merged[[k for k, (s, _) in enumerate(order) if s == "p"]]
            res.check(np.array_equal(u_back, u) and np.array_equal(p_back, p),
                      f"interleave is not a permutation for sizes ({nu}, {np_})")


def _conv_oracle(res, rng, fault):
    for c in (2, 4):
        for groups in sorted({1, 2, c}):
            for k in (1, 3):
                x = rng.standard_normal((c, 5, 5))
                kern = GroupedKernel(rng.standard_normal((c, c // groups, k, k)), groups=groups)
                for stride in (1, 2):
                    got = grouped_conv(x, kern, stride=stride, padding=k // 2)
                    ref = naive_conv(x, kern, stride=stride, padding=k // 2)
                    res.check(got.shape == ref.shape and np.max(np.abs(got - ref)) <= 1e-12,
                              f"grouped_conv mismatch C={c} groups={groups} K={k} stride={stride}")


def _pbi(res, rng, fault):
    z = IdealPoint((0.0, 0.0))
    w = np.array([1.0, 1.0]) / math.sqrt(2)
    d1, d2, g = pbi((1.0, 1.0), w, z, PbiParams(5.0))
    res.check(abs(d1 - math.sqrt(2)) <= 1e-12 and abs(d2) <= 1e-12 and abs(g - math.sqrt(2)) <= 1e-12,
              f"pbi on the ray: got {(d1, d2, g)}")
    d1, d2, g = pbi((1.0, 0.0), w, z, PbiParams(5.0))
    h = 1 / math.sqrt(2)
    res.check(abs(d1 - h) <= 1e-12 and abs(d2 - h) <= 1e-12 and abs(g - 6 * h) <= 1e-12,
              f"pbi off the ray: got {(d1, d2, g)}")
    for t in (0.0, 0.5, 1.0, 2.0):
        _, d2, g = pbi(t * w, w, z)
        res.check(abs(d2) <= 1e-12 and abs(g - t) <= 1e-12, f"ray property fails at t={t}")
    ideal = IdealPoint.fresh(3)
    seen = []
    for _ in range(20):
        F = rng.random(3)
        seen.append(F)
        ideal = update_ideal(ideal, F)
        res.check(np.all(ideal.array < np.min(seen, axis=0)), "ideal point is not strictly below observations")


def _formula_parity(res, rng, fault):
    for c in (16, 32):
        for e in (4, 6):
            for g in (1, 2, 4):
                for leave in (0.0, 0.25, 0.5):
                    for k in (3, 5):
                        cfg = ChannelMuxConfig(c, leave, e, g, k)
                        res.check(block_params(cfg) == count_actual_params(init_weights(cfg, rng)),
                                  f"MUXConv params mismatch C={c} E={e} G={g} L={leave} K={k}")
                        res.check(block_flops(cfg, 7, 7) == 49 * block_params(cfg),
                                  f"MUXConv FLOPs != H*W*params for C={c} E={e} G={g} L={leave} K={k}")
            mobile = InvertedBottleneckConfig(c, e, (3,))
            res.check(block_params(ChannelMuxConfig(c, 0.0, e, 1, 3)) == block_params(mobile),
                      f"G=1, L=0 block differs from the MobileNet block at C={c} E={e}")
    res.check(block_params(InvertedBottleneckConfig(16, 6, (3,))) == 3936, "MobileNet C=16 E=6 K=3 != 3936")
    res.check(block_params(ChannelMuxConfig(64, 0.25, 6, 2, 3)) == 32832, "MUXConv C=64 example != 32832")
    res.check(abs(complexity_ratio(2, 0.25, 64, 6, 3) - 32832 / 52608) <= 1e-9, "complexity ratio example")


def _codec(res, rng, fault):
    res.check(space_volume(FULL_BOUNDS) == 864 ** 2 * 4320 ** 2, "raw space volume")
    for _ in range(500):
        g = random_genotype(rng)
        bp = decode(g)
        res.check(decode(encode(bp)) == bp, f"decode(encode(b)) != b for {g}")
        key = canonical_key(g)
        res.check(canonical_key(parse_key(key)) == key, f"key round trip fails for {key}")


SUITES: List = [
    ("roundtrip", _roundtrip),
    ("conv_oracle", _conv_oracle),
    ("pbi", _pbi),
    ("formula_parity", _formula_parity),
    ("codec", _codec),
]


def run_suites(seed=0, fault=None, suites=None):
    """Run every suite (or the named ones); returns a list of :class:`SuiteResult`."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    chosen = [(n, f) for n, f in SUITES if suites is None or n in suites]
    results = []
    for name, fn in chosen:
        rng = np.random.default_rng(seed)
        res = SuiteResult(name)
        start = time.perf_counter()
        try:
            fn(res, rng, fault)
        except Exception as exc:  # a crash inside a suite is a failure of that suite
            res.failures.append(f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
