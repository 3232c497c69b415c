"""Distance mathematics for domain spaces.

Weighted Minkowski metrics of any order k >= 1 (inf included), their
restriction to a selected subset of dimensions, nested composition of child
metrics under an outer Minkowski form, the discrete equality metric for
non-numeric dimensions, great-circle distance for GPS pairs, and weight
estimation from per-dimension spread.

All functions are pure; trees and vectors are immutable and freely shareable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import kernels
from .errors import NotComparable, UnknownReference, ValidationError

EARTH_RADIUS_KM = 6371.0088  # mean Earth radius, pinned for stable tests

Scalar = float


def _check_order(order: float) -> float:
    order = float(order)
    if not (order >= 1.0):
        raise ValidationError(f"metric order must be >= 1 or inf, got {order}")
    return order


class FeatureVector:
    """Partially-defined vector: dimension path -> finite float value."""

    __slots__ = ("entries",)

    def __init__(self, entries: Mapping[str, float]):
        clean = {}
        for path, value in entries.items():
            v = float(value)
            if not math.isfinite(v):
                raise ValidationError(f"non-finite value at dimension {path!r}")
            clean[path] = v
        self.entries = clean

    def defined_on(self, paths: Iterable[str]) -> bool:
        return all(p in self.entries for p in paths)

    def __getitem__(self, path: str) -> float:
        return self.entries[path]

    def __contains__(self, path: str) -> bool:
        return path in self.entries

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureVector) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"FeatureVector({self.entries!r})"


@dataclass(frozen=True)
class LeafDim:
    """One scalar dimension inside a Minkowski leaf.

    discrete=True switches the base component from |x-y| to the equality
    metric (0 if equal else 1).
    """

    path: str
    weight: float = 1.0
    discrete: bool = False

    def __post_init__(self):
        if not (self.weight > 0):
            raise ValidationError(f"weight of {self.path!r} must be > 0")


@dataclass(frozen=True)
class MinkowskiLeaf:
    order: float
    dims: tuple[LeafDim, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", _check_order(self.order))
        if not self.dims:
            raise ValidationError("Minkowski leaf needs at least one dimension")


@dataclass(frozen=True)
class GeodesicLeaf:
    """Great-circle distance (km) over a latitude/longitude pair (degrees)."""

    lat: str
    lon: str


@dataclass(frozen=True)
class Composite:
    order: float
    children: tuple[tuple[float, "MetricNode"], ...]

    def __post_init__(self):
        object.__setattr__(self, "order", _check_order(self.order))
        if not self.children:
            raise ValidationError("composite node needs at least one child")
        for w, _ in self.children:
            if not (w > 0):
                raise ValidationError("child weight must be > 0")


MetricNode = Union[MinkowskiLeaf, GeodesicLeaf, Composite]


def leaf_paths(node: MetricNode) -> list[str]:
    """Depth-first list of all dimension paths reached by the tree."""
    if isinstance(node, MinkowskiLeaf):
        return [d.path for d in node.dims]
    if isinstance(node, GeodesicLeaf):
        return [node.lat, node.lon]
    out: list[str] = []
    for _, child in node.children:
        out.extend(leaf_paths(child))
    return out


def restrict(node: MetricNode, selected: frozenset[str]) -> MetricNode | None:
    """Prune the tree to dimensions in `selected`.

    Dimensions outside the selection contribute zero (the zero-fill mapping
    onto the subspace), which for Minkowski terms equals dropping them. A
    geodesic pair is kept if either coordinate is selected; the missing
    coordinate is zero-filled at evaluation.
    """
    if isinstance(node, MinkowskiLeaf):
        kept = tuple(d for d in node.dims if d.path in selected)
        return MinkowskiLeaf(node.order, kept) if kept else None
    if isinstance(node, GeodesicLeaf):
        if node.lat in selected or node.lon in selected:
            return node
        return None
    children = tuple(
        (w, sub) for w, child in node.children if (sub := restrict(child, selected)) is not None
    )
    return Composite(node.order, children) if children else None


def composed_weight(node: MetricNode, path: str) -> float:
    """Product of weights from the root down to one leaf dimension.

    When a single dimension is compared, the distance reduces to this factor
    times the absolute difference, whatever the orders along the way.
    """
    if isinstance(node, MinkowskiLeaf):
        for d in node.dims:
            if d.path == path:
                return d.weight
        raise UnknownReference(f"dimension {path!r} not in leaf")
    if isinstance(node, GeodesicLeaf):
        if path in (node.lat, node.lon):
            return 1.0
        raise UnknownReference(f"dimension {path!r} not in geodesic leaf")
    for w, child in node.children:
        if path in leaf_paths(child):
            return w * composed_weight(child, path)
    raise UnknownReference(f"dimension {path!r} not reached by tree")


def great_circle_km(lat1, lon1, lat2, lon2):
    """Haversine great-circle distance in km; accepts scalars or arrays."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dp / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def evaluate_batch(
    node: MetricNode,
    col_of: Mapping[str, int],
    X: np.ndarray,
    Y: np.ndarray,
) -> np.ndarray:
    """Evaluate the tree over row-aligned value matrices.

    X and Y are (n, d) matrices whose columns are indexed by `col_of`;
    dimensions reached by the tree but absent from `col_of` are zero-filled.
    Returns the (n,) distance vector.
    """
    n = X.shape[0]

    def col(paths_matrix: np.ndarray, path: str) -> np.ndarray:
        idx = col_of.get(path)
        if idx is None:
            return np.zeros(n)
        return paths_matrix[:, idx]

    if isinstance(node, MinkowskiLeaf):
        comp = np.empty((n, len(node.dims)))
        weights = np.empty(len(node.dims))
        for j, d in enumerate(node.dims):
            xs, ys = col(X, d.path), col(Y, d.path)
            comp[:, j] = (xs != ys).astype(np.float64) if d.discrete else np.abs(xs - ys)
            weights[j] = d.weight
        return kernels.minkowski_agg(comp, weights, node.order)
    if isinstance(node, GeodesicLeaf):
        return great_circle_km(col(X, node.lat), col(X, node.lon), col(Y, node.lat), col(Y, node.lon))
    comp = np.empty((n, len(node.children)))
    weights = np.empty(len(node.children))
    for j, (w, child) in enumerate(node.children):
        comp[:, j] = evaluate_batch(child, col_of, X, Y)
        weights[j] = w
    return kernels.minkowski_agg(comp, weights, node.order)


def _evaluate_pair(node: MetricNode, x: FeatureVector, y: FeatureVector) -> float:
    paths = sorted(set(leaf_paths(node)))
    col_of = {p: i for i, p in enumerate(paths)}
    X = np.array([[x.entries.get(p, 0.0) for p in paths]])
    Y = np.array([[y.entries.get(p, 0.0) for p in paths]])
    return float(evaluate_batch(node, col_of, X, Y)[0])


def minkowski_distance(
    x: Sequence[float], y: Sequence[float], r: Sequence[float], k: float
) -> float:
    """Weighted Minkowski distance of order k between equal-length vectors."""
    if not (len(x) == len(y) == len(r)):
        raise ValidationError("x, y and r must have equal lengths")
    k = _check_order(k)
    xs, ys, rs = (np.asarray(v, dtype=np.float64) for v in (x, y, r))
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValidationError("vector values must be finite")
    if not (rs > 0).all():
        raise ValidationError("all weights must be > 0")
    comp = np.abs(xs - ys)[None, :]
    return float(kernels.minkowski_agg(comp, rs, k)[0])


def induced_distance(
    x: FeatureVector,
    y: FeatureVector,
    sel: Iterable[str],
    tree: MetricNode,
) -> float:
    """Distance on the subspace spanned by `sel`.

    Both vectors must be defined on every selected dimension; values outside
    the selection are zero-filled so they contribute nothing.
    """
    selected = frozenset(sel)
    if not selected:
        raise ValidationError("selection must not be empty")
    known = set(leaf_paths(tree))
    missing = selected - known
    if missing:
        raise UnknownReference(f"dimensions not in metric tree: {sorted(missing)}")
    for v, name in ((x, "x"), (y, "y")):
        absent = [p for p in selected if p not in v]
        if absent:
            raise NotComparable(f"{name} undefined on {sorted(absent)}")
    sub = restrict(tree, selected)
    assert sub is not None
    fx = FeatureVector({p: x[p] for p in selected})
    fy = FeatureVector({p: y[p] for p in selected})
    return _evaluate_pair(sub, fx, fy)


def nested_distance(x: FeatureVector, y: FeatureVector, tree: MetricNode) -> float:
    """Distance over all leaf dimensions reached by the tree."""
    return induced_distance(x, y, leaf_paths(tree), tree)


def discrete_distance(a, b) -> float:
    """Equality metric: 0 iff the values are equal, else 1."""
    return 0.0 if a == b else 1.0


def estimate_weights(
    samples: Sequence[Sequence[float]],
    method: str = "sd",
    p_lo: float | None = None,
    p_hi: float | None = None,
    population: bool = True,
) -> list[float]:
    """Per-dimension weights 1/s_j from observed value spread.

    s_j is the standard deviation (population by default, sample when
    `population` is False) or the p_hi - p_lo percentile spread. Dimensions
    with zero spread fall back to weight 1 so they stay legal but inert.
    """
    if method == "percentile":
        if p_lo is None or p_hi is None or not (0 <= p_lo < p_hi <= 100):
            raise ValidationError("percentile method needs 0 <= p_lo < p_hi <= 100")
    elif method != "sd":
        raise ValidationError(f"unknown method {method!r}")
    weights = []
    for j, col in enumerate(samples):
        arr = np.asarray(col, dtype=np.float64)
        if arr.size == 0:
            raise ValidationError(f"dimension {j} has no samples")
        if method == "sd":
            if arr.size < 2:
                raise ValidationError(f"dimension {j} needs >= 2 samples for sd")
            s = float(np.std(arr, ddof=0 if population else 1))
        else:
            s = float(np.percentile(arr, p_hi) - np.percentile(arr, p_lo))
        weights.append(1.0 if s == 0.0 else 1.0 / s)
    return weights
