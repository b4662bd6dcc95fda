"""Reference tensor primitives on single ``(C, H, W)`` feature maps.

All functions are pure and return new float64 arrays. Channel ``c`` of a map
occupies the flat slab ``c*H*W : (c+1)*H*W`` in row-major order, which is
exactly numpy's C-contiguous layout of a ``(C, H, W)`` array.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_feature_map, check_nonnegative_int, check_positive_int
from .exceptions import ShapeError

__all__ = [
    "GroupedKernel",
    "subpixel",
    "superpixel",
    "split_channels",
    "concat_channels",
    "interleave",
    "interleave_order",
    "grouped_conv",
    "swish",
    "relu",
]


@dataclass(frozen=True, eq=False)
class GroupedKernel:
    """Weights of a grouped 2-D convolution.

    ``weights`` has shape ``(out_channels, in_channels_per_group, kernel_h,
    kernel_w)``. Output channel ``o`` belongs to group ``o // (out_channels //
    groups)`` and reads the matching slab of ``in_channels_per_group`` inputs.
    """

    weights: np.ndarray
    groups: int = 1
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 4:
            raise ShapeError(f"kernel weights must be 4-D, got shape {w.shape}")
        groups = check_positive_int(self.groups, "groups")
        out_c, _, kh, kw = w.shape
        if out_c < 1 or w.shape[1] < 1:
            raise ShapeError(f"kernel must have positive channel counts, got shape {w.shape}")
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {kh}x{kw}")
        if out_c % groups:
            raise ShapeError(f"out_channels={out_c} is not divisible by groups={groups}")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "groups", groups)
        if self.bias is not None:
            b = np.array(self.bias, dtype=np.float64).reshape(-1)
            if b.shape != (out_c,):
                raise ShapeError(f"bias must have length {out_c}, got {b.shape[0]}")
            b.flags.writeable = False
            object.__setattr__(self, "bias", b)

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def in_channels_per_group(self):
        return self.weights.shape[1]

    @property
    def in_channels(self):
        return self.groups * self.in_channels_per_group

    @property
    def kernel_size(self):
        return self.weights.shape[2:]

    @property
    def n_params(self):
        return self.weights.size + (0 if self.bias is None else self.bias.size)

    @classmethod
    def identity(cls, channels, kernel_size=1, groups=None):
        """Depth-wise (or ``groups``) kernel that copies its input, via a centred delta."""
        groups = channels if groups is None else groups
        cpg = channels // groups
        w = np.zeros((channels, cpg, kernel_size, kernel_size))
        mid = kernel_size // 2
        for o in range(channels):
            w[o, o % cpg, mid, mid] = 1.0
        return cls(w, groups=groups)


def subpixel(x, r):
    """Fold every ``r x r`` window into ``r**2`` channels (space to depth).

    Output channel ``c*r*r + dy*r + dx`` at ``(Y, X)`` holds input channel ``c``
    at ``(Y*r + dy, X*r + dx)``.
    """
    x = check_feature_map(x, allow_empty=True)
    r = check_positive_int(r, "r")
    c, h, w = x.shape
    if h % r:
        raise ShapeError(f"subpixel: height {h} is not divisible by r={r}")
    if w % r:
        raise ShapeError(f"subpixel: width {w} is not divisible by r={r}")
    out = x.reshape(c, h // r, r, w // r, r).transpose(0, 2, 4, 1, 3)
    return np.ascontiguousarray(out.reshape(c * r * r, h // r, w // r))


def superpixel(x, r):
    """Unfold groups of ``r**2`` channels into ``r x r`` windows; inverse of :func:`subpixel`."""
    x = check_feature_map(x, allow_empty=True)
    r = check_positive_int(r, "r")
    c, h, w = x.shape
    if c % (r * r):
        raise ShapeError(f"superpixel: channels {c} are not divisible by r**2={r * r}")
    out = x.reshape(c // (r * r), r, r, h, w).transpose(0, 3, 1, 4, 2)
    return np.ascontiguousarray(out.reshape(c // (r * r), h * r, w * r))


def split_channels(x, sizes):
    """Cut ``x`` into contiguous channel slabs of the given sizes (zero allowed)."""
    x = check_feature_map(x, allow_empty=True)
    sizes = [check_nonnegative_int(s, "split size") for s in sizes]
    if sum(sizes) != x.shape[0]:
        raise ShapeError(f"split sizes {sizes} sum to {sum(sizes)}, expected {x.shape[0]} channels")
    bounds = np.cumsum([0] + sizes)
    return [x[lo:hi].copy() for lo, hi in zip(bounds[:-1], bounds[1:])]


def concat_channels(parts):
    """Stack feature maps along the channel axis."""
    parts = [check_feature_map(p, name="part", allow_empty=True) for p in parts]
    if not parts:
        raise ShapeError("concat_channels needs at least one part")
    spatial = {p.shape[1:] for p in parts}
    if len(spatial) > 1:
        raise ShapeError(f"cannot concatenate maps with spatial shapes {sorted(spatial)}")
    return np.concatenate(parts, axis=0)


def interleave_order(n_unprocessed, n_processed):
    """Source order of the proportional merge as a list of ``("u" | "p", index)``.

    Channel ``i`` of a group of size ``n`` gets the key ``(i + 0.5) / n``; keys
    are merged ascending and an unprocessed channel goes first on ties, so
    equal halves alternate ``u0, p0, u1, p1, ...``. Keys are compared as exact
    rationals.
    """
    order = []
    i = j = 0
    while i < n_unprocessed or j < n_processed:
        if j == n_processed:
            take_u = True
        elif i == n_unprocessed:
            take_u = False
        else:
            # (2i+1)/(2nu) <= (2j+1)/(2np)
            take_u = (2 * i + 1) * n_processed <= (2 * j + 1) * n_unprocessed
        if take_u:
            order.append(("u", i))
            i += 1
        else:
            order.append(("p", j))
            j += 1
    return order


def interleave(unprocessed, processed):
    """Shuffle unprocessed and processed channels together by proportional merge."""
    u = check_feature_map(unprocessed, name="unprocessed", allow_empty=True)
    p = check_feature_map(processed, name="processed", allow_empty=True)
    if u.shape[1:] != p.shape[1:]:
        raise ShapeError(f"spatial shapes differ: {u.shape[1:]} vs {p.shape[1:]}")
    out = np.empty((u.shape[0] + p.shape[0],) + u.shape[1:])
    for pos, (src, idx) in enumerate(interleave_order(u.shape[0], p.shape[0])):
        out[pos] = u[idx] if src == "u" else p[idx]
    return out


def grouped_conv(x, kernel, stride=1, padding=0):
    """Grouped 2-D cross-correlation with zero padding (no kernel flip)."""
    x = check_feature_map(x)
    stride = check_positive_int(stride, "stride")
    padding = check_nonnegative_int(padding, "padding")
    c, h, w = x.shape
    if c != kernel.in_channels:
        raise ShapeError(
            f"input has {c} channels but kernel expects groups*in_per_group = "
            f"{kernel.groups}*{kernel.in_channels_per_group} = {kernel.in_channels}"
        )
    kh, kw = kernel.kernel_size
    out_h = (h + 2 * padding - kh) // stride + 1
    out_w = (w + 2 * padding - kw) // stride + 1
    if h + 2 * padding < kh or w + 2 * padding < kw or out_h < 1 or out_w < 1:
        raise ShapeError(f"kernel {kh}x{kw} does not fit a {h}x{w} input with padding {padding}")

    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride][:, :out_h, :out_w]
    cin = kernel.in_channels_per_group
    cout = kernel.out_channels // kernel.groups
    out = np.empty((kernel.out_channels, out_h, out_w))
    for g in range(kernel.groups):
        wg = kernel.weights[g * cout:(g + 1) * cout]
        xg = windows[g * cin:(g + 1) * cin]
        out[g * cout:(g + 1) * cout] = np.einsum("oikl,ihwkl->ohw", wg, xg)
    if kernel.bias is not None:
        out += kernel.bias[:, None, None]
    return out


def swish(x):
    """Elementwise ``v * sigmoid(v)``, computed without overflow for large ``|v|``."""
    v = np.asarray(x, dtype=np.float64)
    # sigmoid via tanh stays finite for any input
    return v * 0.5 * (1.0 + np.tanh(0.5 * v))


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)
