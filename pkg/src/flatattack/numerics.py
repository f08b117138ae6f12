"""Vector math, box projection and seeded sampling shared by every module.

All arithmetic is float64. Randomness comes from ``SeededRng``, a thin wrapper
around numpy's counter-based Philox generator keyed by a master seed and a
stream path. The splitting rule used throughout the package is:

    SeededRng(master_seed, stream_id=example_index).spawn(t)

i.e. one stream per attacked example and one sub-stream per outer iteration.
"""

import logging
from typing import Literal, Union

import numpy as np
import numpy.typing as npt

from flatattack.errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

FeatureVector = npt.NDArray[np.float64]

# Bump when the mapping (seed, stream path) -> draws changes.
RNG_FORMAT_VERSION = 1

# Denominators below this are treated as zero (degenerate-gradient guard).
DEGENERATE_NORM = 1e-12

NormOrder = Union[Literal[1, 2], float]


def as_vector(values, name: str = "vector") -> FeatureVector:
    """Coerce to a finite 1-D float64 array.

    Raises:
        ShapeError: If the input is not one-dimensional or is empty.
        DomainError: If any entry is NaN or infinite.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(
            f"{name} must be a non-empty 1-D vector, got shape {arr.shape}",
            expected="(d,)",
            actual=arr.shape,
        )
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries", reason="non_finite")
    return arr


def check_same_dim(a: FeatureVector, b: FeatureVector, what: str = "vectors") -> None:
    if a.shape != b.shape:
        raise ShapeError(
            f"dimension mismatch between {what}: {a.shape} vs {b.shape}",
            expected=a.shape,
            actual=b.shape,
        )


def sign(v: FeatureVector) -> FeatureVector:
    """Elementwise mathematical sign with sign(0) = 0."""
    return np.sign(v).astype(np.float64, copy=False)


def norm(v: FeatureVector, p: NormOrder = 2) -> float:
    """L1, L2 or L-infinity norm."""
    if p == 1:
        return float(np.sum(np.abs(v)))
    if p == 2:
        return float(np.sqrt(np.dot(v, v)))
    if p == np.inf:
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise DomainError(f"unsupported norm order {p!r}", reason="norm_order")


def l1_normalized(v: FeatureVector) -> FeatureVector | None:
    """Return v / ||v||_1, or None when the norm is below the degenerate guard."""
    n = norm(v, 1)
    if n < DEGENERATE_NORM:
        return None
    return v / n


def cosine(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine similarity; 0.0 when either vector is zero."""
    na = norm(a, 2)
    nb = norm(b, 2)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def project_box_linf(
    candidate: FeatureVector,
    origin: FeatureVector,
    eps: float,
    lo: float = 0.0,
    hi: float = 1.0,
) -> FeatureVector:
    """Nearest point to ``candidate`` inside the eps L-inf ball around ``origin``
    intersected with the box [lo, hi]^d.

    The intersection is itself a box, so the projection is a single clip.
    """
    check_same_dim(candidate, origin, "candidate and origin")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}", reason="eps")
    lower = np.maximum(origin - eps, lo)
    upper = np.minimum(origin + eps, hi)
    return np.clip(candidate, lower, upper)


class SeededRng:
    """Deterministic random stream identified by (master_seed, stream path).

    Streams are never shared between threads; derive a child with ``spawn``
    instead of passing one stream around.
    """

    def __init__(self, master_seed: int, stream_id: int = 0, _path: tuple[int, ...] | None = None):
        if master_seed < 0 or stream_id < 0:
            raise DomainError("seeds and stream ids must be non-negative", reason="seed")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.path: tuple[int, ...] = _path if _path is not None else (self.stream_id,)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def spawn(self, sub_id: int) -> "SeededRng":
        """Independent sub-stream, e.g. one per outer iteration."""
        return SeededRng(self.master_seed, self.stream_id, _path=self.path + (int(sub_id),))

    def uniform(self, low: float, high: float, size: int | tuple[int, ...]) -> np.ndarray:
        return self.generator.uniform(low, high, size=size)

    def normal(self, size: int | tuple[int, ...], scale: float = 1.0) -> np.ndarray:
        return self.generator.normal(0.0, scale, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice_sign(self, size: int) -> np.ndarray:
        return self.generator.choice(np.array([-1.0, 1.0]), size=size)

    def __repr__(self) -> str:
        return f"SeededRng(master_seed={self.master_seed}, path={self.path})"


def sample_uniform_ball(rng: SeededRng, d: int, xi: float) -> FeatureVector:
    """Per-coordinate uniform draw on [-xi, xi]^d (the L-inf ball)."""
    if xi < 0:
        raise DomainError(f"xi must be non-negative, got {xi}", reason="xi")
    if xi == 0:
        return np.zeros(d, dtype=np.float64)
    return rng.uniform(-xi, xi, size=d)
