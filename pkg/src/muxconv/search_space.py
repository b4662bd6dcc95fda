"""Stage-wise MUXNet hyperparameter space and its 30-gene integer encoding.

Each of the four stages contributes the genes

    [reduction_K, reduction_E, normal_K, normal_E, G, N, L]

and stages 2 and 3 append the spatial multiplexing setting ``S``. A gene is
the index of a value in its option list. A genotype is a plain tuple of ints.

When a stage has ``N = 0`` normal blocks its normal-block genes do not affect
the architecture; the canonical form sets them to 0 so that architecturally
identical genotypes share one key.
"""

from dataclasses import asdict, dataclass, replace
from typing import Tuple

import numpy as np

from ._validation import check_probability, check_rng
from .blocks import SPATIAL_OPTIONS
from .exceptions import GenotypeError

__all__ = [
    "REDUCTION_KERNELS",
    "EXPANSIONS",
    "NORMAL_KERNELS",
    "GROUP_FACTORS",
    "REPETITIONS",
    "LEAVE_OUTS",
    "SPATIAL_STAGES",
    "N_STAGES",
    "N_GENES",
    "KEY_PREFIX",
    "StageSpec",
    "Blueprint",
    "SpaceBounds",
    "FULL_BOUNDS",
    "gene_layout",
    "validate_genotype",
    "canonicalize",
    "encode",
    "decode",
    "canonical_key",
    "parse_key",
    "parse_genotype",
    "format_genotype",
    "random_genotype",
    "mutate",
    "crossover",
    "space_volume",
    "MuxNetSpace",
    "BoxSpace",
]

REDUCTION_KERNELS = (3, (3, 5, 7), (3, 5, 7, 9))
EXPANSIONS = (4, 6)
NORMAL_KERNELS = (3, 5)
GROUP_FACTORS = (1, 2, 4)
REPETITIONS = (0, 1, 2, 3)
LEAVE_OUTS = (0.0, 0.25, 0.5)
SPATIAL_STAGES = (2, 3)
N_STAGES = 4
KEY_PREFIX = "muxg1-"

_STAGE_FIELDS = (
    ("reduction_kernel", REDUCTION_KERNELS),
    ("reduction_expansion", EXPANSIONS),
    ("normal_kernel", NORMAL_KERNELS),
    ("normal_expansion", EXPANSIONS),
    ("group_factor", GROUP_FACTORS),
    ("repetitions", REPETITIONS),
    ("leave_out", LEAVE_OUTS),
)
_SPATIAL_FIELD = ("spatial", SPATIAL_OPTIONS)
# Fields that only matter when the stage has normal blocks.
_NORMAL_FIELDS = ("normal_kernel", "normal_expansion", "group_factor", "leave_out", "spatial")


def gene_layout():
    """``(stage, field, options)`` for every gene position, in genotype order."""
    layout = []
    for stage in range(1, N_STAGES + 1):
        for name, options in _STAGE_FIELDS:
            layout.append((stage, name, options))
        if stage in SPATIAL_STAGES:
            layout.append((stage, _SPATIAL_FIELD[0], _SPATIAL_FIELD[1]))
    return tuple(layout)


_LAYOUT = gene_layout()
N_GENES = len(_LAYOUT)


def _json_value(value):
    return list(value) if isinstance(value, tuple) else value


def _from_json_value(value):
    return tuple(value) if isinstance(value, list) else value


def _option_index(options, value, field):
    for i, opt in enumerate(options):
        if isinstance(opt, tuple) != isinstance(value, tuple):
            continue
        if opt == value:
            return i
    raise GenotypeError(f"{field}: {value!r} is not one of {list(options)}", field=field)


@dataclass(frozen=True)
class StageSpec:
    reduction_kernel: object = 3
    reduction_expansion: int = 4
    normal_kernel: int = 3
    normal_expansion: int = 4
    group_factor: int = 1
    repetitions: int = 0
    leave_out: float = 0.0
    spatial: object = None

    @property
    def reduction_kernels(self):
        k = self.reduction_kernel
        return k if isinstance(k, tuple) else (k,)

    def canonical(self):
        if self.repetitions != 0:
            return self
        defaults = {"normal_kernel": NORMAL_KERNELS[0], "normal_expansion": EXPANSIONS[0],
                    "group_factor": GROUP_FACTORS[0], "leave_out": LEAVE_OUTS[0]}
        if self.spatial is not None:
            defaults["spatial"] = SPATIAL_OPTIONS[0]
        return replace(self, **defaults)


@dataclass(frozen=True)
class Blueprint:
    """Decoded hyperparameters of the four stages."""

    stages: Tuple[StageSpec, ...]

    def __post_init__(self):
        stages = tuple(self.stages)
        if len(stages) != N_STAGES:
            raise GenotypeError(f"a blueprint needs {N_STAGES} stages, got {len(stages)}")
        for i, st in enumerate(stages, start=1):
            if (st.spatial is not None) != (i in SPATIAL_STAGES):
                where = "only" if i not in SPATIAL_STAGES else "also"
                raise GenotypeError(
                    f"stage {i}: spatial multiplexing is defined for stages {SPATIAL_STAGES} {where}",
                    field=f"stage{i}.spatial",
                )
        object.__setattr__(self, "stages", stages)

    def canonical(self):
        return Blueprint(tuple(st.canonical() for st in self.stages))

    def to_dict(self):
        out = []
        for i, st in enumerate(self.stages, start=1):
            d = {"stage": i}
            for k, v in asdict(st).items():
                if k == "spatial" and v is None:
                    continue
                d[k] = _json_value(v)
            out.append(d)
        return {"stages": out}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or set(data) - {"stages", "key"}:
            raise GenotypeError("blueprint JSON must be an object with a 'stages' list")
        stages = []
        allowed = {name for name, _ in _STAGE_FIELDS} | {"spatial", "stage"}
        for i, raw in enumerate(data.get("stages", []), start=1):
            unknown = set(raw) - allowed
            if unknown:
                raise GenotypeError(f"stage {i}: unknown fields {sorted(unknown)}", field=f"stage{i}")
            if raw.get("stage", i) != i:
                raise GenotypeError(f"stage entries must be ordered 1..{N_STAGES}", field=f"stage{i}")
            kwargs = {k: _from_json_value(v) for k, v in raw.items() if k != "stage"}
            stages.append(StageSpec(**kwargs))
        return cls(tuple(stages))


@dataclass(frozen=True)
class SpaceBounds:
    """Allowed option indices per gene.

    Gene values always refer to positions in the full option lists, so a
    restricted space is a subset of the full one and shares its keys.
    ``lower``/``upper`` are the index bounds of each gene.
    """

    choices: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        choices = tuple(tuple(sorted(set(int(v) for v in c))) for c in self.choices)
        if len(choices) != N_GENES:
            raise GenotypeError(f"bounds must cover {N_GENES} genes, got {len(choices)}")
        for i, (c, (_, name, options)) in enumerate(zip(choices, _LAYOUT)):
            if not c or c[0] < 0 or c[-1] >= len(options):
                raise GenotypeError(f"gene {i} ({name}): allowed indices {c} outside 0..{len(options) - 1}", index=i)
        object.__setattr__(self, "choices", choices)

    @classmethod
    def full(cls):
        return cls(tuple(tuple(range(len(opts))) for _, _, opts in _LAYOUT))

    @property
    def lower(self):
        return tuple(c[0] for c in self.choices)

    @property
    def upper(self):
        return tuple(c[-1] for c in self.choices)

    @property
    def cardinalities(self):
        return tuple(len(c) for c in self.choices)

    @property
    def n_free(self):
        return sum(1 for c in self.choices if len(c) > 1)

    def option_lists(self):
        """Allowed option values per gene."""
        return tuple(tuple(opts[i] for i in c) for c, (_, _, opts) in zip(self.choices, _LAYOUT))

    def restrict(self, allowed):
        """Copy with some genes limited; ``allowed`` maps gene index to option indices."""
        choices = list(self.choices)
        for idx, values in allowed.items():
            choices[idx] = tuple(values)
        return SpaceBounds(tuple(choices))

    def to_dict(self):
        return {"choices": [list(c) for c in self.choices]}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(tuple(c) for c in data["choices"]))

    def contains(self, genotype):
        return all(g in c for g, c in zip(genotype, self.choices))


FULL_BOUNDS = SpaceBounds.full()


def validate_genotype(genotype, bounds=None):
    """Return ``genotype`` as a tuple of ints, raising :class:`GenotypeError` on the first bad gene."""
    try:
        genes = tuple(int(v) for v in genotype)
    except (TypeError, ValueError) as exc:
        raise GenotypeError(f"genotype must be a sequence of integers: {exc}") from exc
    if len(genes) != N_GENES:
        raise GenotypeError(f"genotype must have {N_GENES} genes, got {len(genes)}")
    for i, (g, (stage, name, options)) in enumerate(zip(genes, _LAYOUT)):
        if not 0 <= g < len(options):
            raise GenotypeError(
                f"gene {i} (stage {stage} {name}) = {g} out of range 0..{len(options) - 1}", index=i
            )
        if bounds is not None and g not in bounds.choices[i]:
            raise GenotypeError(f"gene {i} (stage {stage} {name}) = {g} not allowed in this space", index=i)
    return genes


def _stage_slices():
    slices, start = [], 0
    for stage in range(1, N_STAGES + 1):
        width = len(_STAGE_FIELDS) + (1 if stage in SPATIAL_STAGES else 0)
        slices.append(slice(start, start + width))
        start += width
    return tuple(slices)


_STAGE_SLICES = _stage_slices()
_REPETITION_GENES = tuple(s.start + 5 for s in _STAGE_SLICES)
_NORMAL_GENES = tuple(
    tuple(i for i in range(s.start, s.stop) if _LAYOUT[i][1] in _NORMAL_FIELDS) for s in _STAGE_SLICES
)


def canonicalize(genotype):
    """Zero the normal-block genes of every stage with no normal blocks."""
    genes = list(validate_genotype(genotype))
    for n_gene, normal in zip(_REPETITION_GENES, _NORMAL_GENES):
        if REPETITIONS[genes[n_gene]] == 0:
            for i in normal:
                genes[i] = 0
    return tuple(genes)


def encode(blueprint):
    """Genotype of a blueprint (option indices in the fixed gene layout)."""
    genes = []
    for stage_no, st in enumerate(blueprint.stages, start=1):
        for name, options in _STAGE_FIELDS:
            genes.append(_option_index(options, getattr(st, name), f"stage{stage_no}.{name}"))
        if stage_no in SPATIAL_STAGES:
            genes.append(_option_index(SPATIAL_OPTIONS, st.spatial, f"stage{stage_no}.spatial"))
    return tuple(genes)


def decode(genotype):
    """Canonical blueprint of a genotype."""
    genes = canonicalize(genotype)
    stages = []
    for stage_no, sl in enumerate(_STAGE_SLICES, start=1):
        values = {name: opts[g] for (_, name, opts), g in zip(_LAYOUT[sl], genes[sl])}
        stages.append(StageSpec(**values))
    return Blueprint(tuple(stages))


def format_genotype(genotype):
    return "-".join(str(g) for g in genotype)


def canonical_key(genotype):
    """Stable text key ``muxg1-g0-g1-...-g29`` of the canonical genotype."""
    return KEY_PREFIX + format_genotype(canonicalize(genotype))


def parse_genotype(text):
    """Parse ``"0-1-...-0"`` (optionally with the key prefix) into a validated genotype."""
    text = text.strip()
    if text.startswith(KEY_PREFIX):
        text = text[len(KEY_PREFIX):]
    parts = [p for p in text.replace(",", "-").split("-")] if text else []
    try:
        genes = [int(p) for p in parts]
    except ValueError as exc:
        raise GenotypeError(f"genotype string must hold hyphen-separated integers: {text!r}") from exc
    return validate_genotype(genes)


def parse_key(key):
    if not key.startswith(KEY_PREFIX):
        raise GenotypeError(f"key {key!r} does not start with {KEY_PREFIX!r}")
    genes = parse_genotype(key)
    if canonicalize(genes) != genes:
        raise GenotypeError(f"key {key!r} is not canonical")
    return genes


# --------------------------------------------------------------------------- variation


def random_genotype(random_state=None, bounds=FULL_BOUNDS):
    """Each gene uniform over its allowed options."""
    rng = check_rng(random_state)
    cards = np.array(bounds.cardinalities)
    picks = rng.integers(0, cards)
    return tuple(int(c[p]) for c, p in zip(bounds.choices, picks))


def mutate(genotype, rate, random_state=None, bounds=FULL_BOUNDS):
    """Resample each gene, with probability ``rate``, uniformly among its other allowed options."""
    rng = check_rng(random_state)
    rate = check_probability(rate, "rate")
    genes = list(genotype)
    hit = rng.random(N_GENES) < rate
    cards = np.array(bounds.cardinalities)
    offsets = rng.integers(1, np.maximum(cards, 2))
    fresh = rng.integers(0, cards)
    for i in np.flatnonzero(hit):
        choices = bounds.choices[i]
        if len(choices) < 2 and genes[i] in choices:
            continue
        if genes[i] in choices:
            pos = choices.index(genes[i])
            genes[i] = choices[(pos + int(offsets[i])) % len(choices)]
        else:
            genes[i] = choices[int(fresh[i])]
    return tuple(genes)


def crossover(a, b, random_state=None):
    """Uniform crossover: every gene from ``a`` or ``b`` with probability 1/2."""
    rng = check_rng(random_state)
    take_a = rng.random(len(a)) < 0.5
    return tuple(int(x if t else y) for x, y, t in zip(a, b, take_a))


def space_volume(bounds=FULL_BOUNDS, canonical=False):
    """Number of genotypes in ``bounds``; with ``canonical`` only architecturally distinct ones."""
    cards = bounds.cardinalities
    total = 1
    for sl, n_gene, normal in zip(_STAGE_SLICES, _REPETITION_GENES, _NORMAL_GENES):
        stage_genes = range(sl.start, sl.stop)
        if not canonical:
            for i in stage_genes:
                total *= cards[i]
            continue
        fixed = 1
        for i in stage_genes:
            if i != n_gene and i not in normal:
                fixed *= cards[i]
        normal_combos = 1
        for i in normal:
            normal_combos *= cards[i]
        per_n = sum(1 if REPETITIONS[n] == 0 else normal_combos for n in bounds.choices[n_gene])
        total *= fixed * per_n
    return total


class MuxNetSpace:
    """Variation operators over (a restriction of) the genotype space, as used by the searches."""

    def __init__(self, bounds=FULL_BOUNDS):
        self.bounds = bounds

    @property
    def default_mutation_rate(self):
        return 1.0 / max(self.bounds.n_free, 1)

    def sample(self, rng):
        return random_genotype(rng, self.bounds)

    def mutate(self, genotype, rate, rng):
        return mutate(genotype, rate, rng, self.bounds)

    def crossover(self, a, b, rng):
        return crossover(a, b, rng)

    def key(self, genotype):
        return canonical_key(genotype)

    def describe(self, genotype):
        return list(genotype)


class BoxSpace:
    """Real vectors in a box, with SBX crossover and polynomial mutation.

    Used for synthetic test problems whose decision variables are continuous.
    """

    def __init__(self, n_var, lower=0.0, upper=1.0, eta_crossover=15.0, eta_mutation=20.0):
        self.n_var = int(n_var)
        self.lower = np.broadcast_to(np.asarray(lower, dtype=np.float64), (self.n_var,)).copy()
        self.upper = np.broadcast_to(np.asarray(upper, dtype=np.float64), (self.n_var,)).copy()
        if np.any(self.upper <= self.lower):
            raise ValueError("upper bounds must exceed lower bounds")
        self.eta_crossover = float(eta_crossover)
        self.eta_mutation = float(eta_mutation)

    @property
    def default_mutation_rate(self):
        return 1.0 / self.n_var

    def sample(self, rng):
        return tuple(float(v) for v in rng.uniform(self.lower, self.upper))

    def crossover(self, a, b, rng):
        a, b = np.asarray(a), np.asarray(b)
        u = rng.random(self.n_var)
        eta = self.eta_crossover
        beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)), (1 / (2 * (1 - u))) ** (1 / (eta + 1)))
        swap = rng.random(self.n_var) < 0.5
        child = 0.5 * ((1 + beta) * a + (1 - beta) * b)
        other = 0.5 * ((1 - beta) * a + (1 + beta) * b)
        child = np.where(swap, other, child)
        return tuple(float(v) for v in np.clip(child, self.lower, self.upper))

    def mutate(self, x, rate, rng):
        x = np.asarray(x, dtype=np.float64)
        hit = rng.random(self.n_var) < rate
        u = rng.random(self.n_var)
        span = self.upper - self.lower
        eta = self.eta_mutation
        delta = np.where(u < 0.5, (2 * u) ** (1 / (eta + 1)) - 1, 1 - (2 * (1 - u)) ** (1 / (eta + 1)))
        out = np.where(hit, x + delta * span, x)
        return tuple(float(v) for v in np.clip(out, self.lower, self.upper))

    def key(self, x):
        return "x-" + "-".join(repr(float(v)) for v in x)

    def describe(self, x):
        return [float(v) for v in x]
