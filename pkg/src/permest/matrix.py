"""Dense matrices, seeded random sources and random-matrix ensembles.

Every random draw in the package goes through :class:`SeededSource`, which maps a
``(seed, stream)`` pair onto an independent Philox (counter-based) generator.
Monte Carlo trial ``t`` of a run seeded with ``(seed, stream)`` uses
``source.substream(t)``, i.e. stream ``stream + t``, so results never depend on
scheduling order or thread count.

Gaussian variates are produced by the Box-Muller transform from Philox
uniforms (first all cosine branches, then all sine branches), not by numpy's
ziggurat sampler, so fixtures are stable for a fixed floating-point library.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

DEFAULT_SEED = 20240601
# Stream offset between independent sub-experiments (e.g. one per matrix size).
STREAM_STRIDE = 1 << 32


class DenseMatrix:
    """Immutable real matrix of finite float64 entries.

    Wraps a read-only numpy array; anything numpy accepts can be passed to the
    constructor, and a ``DenseMatrix`` can be handed to numpy directly.
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ConfigurationError(f"expected a 2-d matrix, got {arr.ndim} dimension(s)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigurationError("matrix must have at least one row and one column")
        if not np.all(np.isfinite(arr)):
            raise DomainError("matrix entries must be finite")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def from_entries(cls, rows, cols, entries):
        entries = list(entries)
        if rows < 1 or cols < 1:
            raise ConfigurationError("rows and cols must be positive")
        if len(entries) != rows * cols:
            raise ConfigurationError(
                f"expected {rows}x{cols}={rows * cols} entries, got {len(entries)}"
            )
        return cls(np.reshape(np.asarray(entries, dtype=np.float64), (rows, cols)))

    @classmethod
    def _wrap(cls, arr):
        # trusted internal path: arr is a fresh finite float64 2-d array
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        obj._data = arr
        return obj

    @property
    def rows(self):
        return self._data.shape[0]

    @property
    def cols(self):
        return self._data.shape[1]

    @property
    def shape(self):
        return self._data.shape

    @property
    def array(self) -> np.ndarray:
        return self._data

    @property
    def entries(self) -> tuple:
        """Row-major entries."""
        return tuple(self._data.ravel().tolist())

    @property
    def is_square(self):
        return self.rows == self.cols

    @property
    def T(self):
        return DenseMatrix._wrap(self._data.T.copy())

    def __array__(self, dtype=None, copy=None):
        if dtype is not None and np.dtype(dtype) != self._data.dtype:
            return self._data.astype(dtype)
        if copy:
            return self._data.copy()
        return self._data

    def __eq__(self, other):
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self):
        return f"DenseMatrix({self._data.tolist()!r})"


def as_array(matrix) -> np.ndarray:
    """Float64 2-d view of a DenseMatrix or array-like (no copy when possible)."""
    if isinstance(matrix, DenseMatrix):
        return matrix.array
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigurationError(f"expected a 2-d matrix, got {arr.ndim} dimension(s)")
    return arr


def as_square_array(matrix) -> np.ndarray:
    arr = as_array(matrix)
    if arr.shape[0] != arr.shape[1]:
        raise ConfigurationError(f"expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SeededSource:
    """A reproducible random stream identified by ``(seed, stream)``."""

    seed: int = DEFAULT_SEED
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.stream < 0:
            raise ConfigurationError("stream must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "SeededSource":
        return SeededSource(self.seed, self.stream + index)


def standard_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Box-Muller standard normals drawn from ``gen``'s uniforms."""
    size = int(np.prod(shape))
    half = (size + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1], keeps log finite
    u2 = gen.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate((radius * np.cos(angle), radius * np.sin(angle)))
    return z[:size].reshape(shape)


def random_signs(gen: np.random.Generator, shape, bias=0.5) -> np.ndarray:
    """Entries +1 with probability ``bias`` and -1 otherwise."""
    return np.where(gen.random(shape) < bias, 1.0, -1.0)


class EntryKind(str, enum.Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"
    SHIFTED_BERNOULLI = "shifted_bernoulli"


def _field(value, name):
    arr = np.array(value, dtype=np.float64)
    if arr.ndim not in (0, 2):
        raise ConfigurationError(f"{name} must be a scalar or a matrix")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class EntryModel:
    """Independent-entry random matrix ensemble.

    Entry ``(i, j)`` is ``shift_ij + eps_ij * scale_ij`` where ``eps_ij`` is a
    sign that is +1 with probability ``bias_ij`` (Rademacher kinds) or a standard
    normal (Gaussian kind). ``scale``, ``shift`` and ``bias`` are scalars or
    matrices broadcastable to ``n x n``.

    ``scale_bounds=(c, C)`` and ``bias_margin=q`` are optional validation bounds
    requiring ``c <= scale <= C`` and ``q < bias < 1 - q``.
    """

    kind: EntryKind
    scale: np.ndarray = 1.0
    shift: np.ndarray = 0.0
    bias: np.ndarray = 0.5
    scale_bounds: tuple | None = None
    bias_margin: float | None = None

    def __post_init__(self):
        try:
            kind = EntryKind(self.kind)
        except ValueError:
            raise ConfigurationError(f"unknown entry model kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        scale = _field(self.scale, "scale")
        shift = _field(self.shift, "shift")
        bias = _field(self.bias, "bias")
        for name, arr in (("scale", scale), ("shift", shift), ("bias", bias)):
            object.__setattr__(self, name, arr)

        if np.any(scale <= 0):
            raise ConfigurationError("scale entries must be strictly positive")
        if self.scale_bounds is not None:
            lo, hi = self.scale_bounds
            if not 0 < lo <= hi:
                raise ConfigurationError("scale_bounds must satisfy 0 < c <= C")
            if np.any(scale < lo) or np.any(scale > hi):
                raise ConfigurationError(f"scale entries must lie in [{lo}, {hi}]")
        q = 0.0 if self.bias_margin is None else self.bias_margin
        if not 0.0 <= q <= 0.5:
            raise ConfigurationError("bias_margin must lie in [0, 1/2]")
        if np.any(bias <= q) or np.any(bias >= 1.0 - q):
            raise ConfigurationError(f"bias entries must lie strictly in ({q}, {1 - q})")
        if kind is not EntryKind.SHIFTED_BERNOULLI and np.any(shift != 0):
            raise ConfigurationError("shift must be zero unless kind is shifted_bernoulli")
        if kind is EntryKind.GAUSSIAN and np.any(bias != 0.5):
            raise ConfigurationError("bias applies only to sign-valued models")

    @classmethod
    def rademacher(cls, scale=1.0, bias=0.5, **bounds):
        return cls(EntryKind.RADEMACHER, scale=scale, bias=bias, **bounds)

    @classmethod
    def gaussian(cls, scale=1.0, **bounds):
        return cls(EntryKind.GAUSSIAN, scale=scale, **bounds)

    @classmethod
    def shifted_bernoulli(cls, shift, scale=1.0, bias=0.5, **bounds):
        return cls(EntryKind.SHIFTED_BERNOULLI, scale=scale, shift=shift, bias=bias, **bounds)

    def fields_for(self, n):
        """``(scale, shift, bias)`` broadcast to ``n x n``."""
        out = []
        for name in ("scale", "shift", "bias"):
            arr = getattr(self, name)
            if arr.ndim == 2 and arr.shape != (n, n):
                raise ConfigurationError(
                    f"model {name} has shape {arr.shape}, incompatible with n={n}"
                )
            out.append(np.broadcast_to(arr, (n, n)))
        return tuple(out)

    def to_dict(self):
        def plain(arr):
            return arr.tolist()

        d = {"kind": self.kind.value, "scale": plain(self.scale)}
        if self.kind is EntryKind.SHIFTED_BERNOULLI:
            d["shift"] = plain(self.shift)
        if self.kind is not EntryKind.GAUSSIAN:
            d["bias"] = plain(self.bias)
        if self.scale_bounds is not None:
            d["scale_bounds"] = list(self.scale_bounds)
        if self.bias_margin is not None:
            d["bias_margin"] = self.bias_margin
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "kind" not in d:
            raise ConfigurationError("entry model needs a 'kind'")
        if "scale_bounds" in d and d["scale_bounds"] is not None:
            d["scale_bounds"] = tuple(d["scale_bounds"])
        unknown = set(d) - {"kind", "scale", "shift", "bias", "scale_bounds", "bias_margin"}
        if unknown:
            raise ConfigurationError(f"unknown entry model fields: {sorted(unknown)}")
        return cls(**d)


def draw(model: EntryModel, n: int, gen: np.random.Generator) -> np.ndarray:
    """One ``n x n`` draw from ``model`` using an existing generator."""
    scale, shift, bias = model.fields_for(n)
    if model.kind is EntryKind.GAUSSIAN:
        return scale * standard_normal(gen, (n, n))
    signs = random_signs(gen, (n, n), bias)
    return shift + signs * scale


def sample_matrix(model: EntryModel, n: int, source: SeededSource) -> DenseMatrix:
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    return DenseMatrix._wrap(draw(model, n, source.generator()))


def _sqrt_nonnegative(M):
    arr = as_square_array(M)
    if np.any(arr < 0):
        raise DomainError("lift requires a matrix with nonnegative entries")
    return np.sqrt(arr)


def godsil_gutman_lift(M, source: SeededSource) -> DenseMatrix:
    """``sqrt(M_ij) * u_ij`` with iid uniform random signs ``u_ij``."""
    root = _sqrt_nonnegative(M)
    return DenseMatrix._wrap(root * random_signs(source.generator(), root.shape))


def barvinok_lift(M, source: SeededSource) -> DenseMatrix:
    """``sqrt(M_ij) * g_ij`` with iid standard normal ``g_ij``."""
    root = _sqrt_nonnegative(M)
    return DenseMatrix._wrap(root * standard_normal(source.generator(), root.shape))
