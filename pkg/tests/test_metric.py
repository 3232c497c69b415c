"""Distance mathematics: examples, error paths, and the metric axioms."""
import math

import numpy as np
import pytest

from dspace.errors import NotComparable, UnknownReference, ValidationError
from dspace.metric import (
    Composite,
    FeatureVector,
    GeodesicLeaf,
    LeafDim,
    MinkowskiLeaf,
    composed_weight,
    discrete_distance,
    estimate_weights,
    evaluate_batch,
    great_circle_km,
    induced_distance,
    leaf_paths,
    minkowski_distance,
    nested_distance,
    restrict,
    EARTH_RADIUS_KM,
)


def brute_minkowski(x, y, r, k):
    comps = [ri * abs(a - b) for a, b, ri in zip(x, y, r)]
    if math.isinf(k):
        return max(comps)
    return sum(c**k for c in comps) ** (1.0 / k)


class TestMinkowskiDistance:
    def test_345_triangle(self):
        assert minkowski_distance((0, 0), (3, 4), (1, 1), 2) == pytest.approx(5.0)

    def test_manhattan_and_maximum(self):
        assert minkowski_distance((0, 0), (3, 4), (1, 1), 1) == 7.0
        assert minkowski_distance((0, 0), (3, 4), (1, 1), math.inf) == 4.0

    def test_fig14_row_pair_manhattan(self):
        # |59-90| + |80-50| + |30-60| + |83-236| = 244
        x, y = (59, 80, 30, 83), (90, 50, 60, 236)
        assert minkowski_distance(x, y, (1, 1, 1, 1), 1) == 244.0

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = rng.integers(1, 9)
            x, y = rng.uniform(-20, 20, n), rng.uniform(-20, 20, n)
            r = rng.uniform(0.1, 4.0, n)
            k = float(rng.choice([1.0, 2.0, 3.0, np.inf]))
            got = minkowski_distance(x, y, r, k)
            assert got == pytest.approx(brute_minkowski(x, y, r, k), rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            minkowski_distance((1, 2), (1,), (1, 1), 1)

    def test_nonpositive_weight(self):
        with pytest.raises(ValidationError):
            minkowski_distance((1,), (2,), (0,), 1)

    def test_order_below_one(self):
        with pytest.raises(ValidationError):
            minkowski_distance((1,), (2,), (1,), 0.5)

    def test_nonfinite_value(self):
        with pytest.raises(ValidationError):
            minkowski_distance((float("nan"),), (2,), (1,), 1)


class TestFeatureVector:
    def test_rejects_nan_at_construction(self):
        with pytest.raises(ValidationError):
            FeatureVector({"a": float("nan")})
        with pytest.raises(ValidationError):
            FeatureVector({"a": float("inf")})

    def test_defined_on(self):
        v = FeatureVector({"a": 1.0, "b": 2.0})
        assert v.defined_on(["a", "b"]) and not v.defined_on(["a", "c"])


def flat_manhattan(paths):
    return MinkowskiLeaf(1.0, tuple(LeafDim(p) for p in paths))


class TestInducedDistance:
    def test_single_price_dimension(self):
        tree = flat_manhattan(["price", "width"])
        x, y = FeatureVector({"price": 59.0}), FeatureVector({"price": 0.0})
        assert induced_distance(x, y, ["price"], tree) == 59.0

    def test_identity_on_selection(self):
        tree = flat_manhattan(["a", "b"])
        x = FeatureVector({"a": 1.5, "b": 3.0})
        y = FeatureVector({"a": 1.5, "b": 99.0})
        assert induced_distance(x, y, ["a"], tree) == 0.0

    def test_restriction_equals_direct_minkowski(self):
        rng = np.random.default_rng(11)
        paths = ["p0", "p1", "p2", "p3"]
        for k in (1.0, 2.0, 3.0, math.inf):
            weights = rng.uniform(0.2, 3.0, 4)
            tree = MinkowskiLeaf(k, tuple(LeafDim(p, w) for p, w in zip(paths, weights)))
            for _ in range(50):
                xv, yv = rng.uniform(-10, 10, 4), rng.uniform(-10, 10, 4)
                x = FeatureVector(dict(zip(paths, xv)))
                y = FeatureVector(dict(zip(paths, yv)))
                sel = list(rng.choice(paths, size=2, replace=False))
                idx = [paths.index(p) for p in sel]
                want = brute_minkowski(xv[idx], yv[idx], weights[idx], k)
                assert induced_distance(x, y, sel, tree) == pytest.approx(want, rel=1e-12)

    def test_not_comparable(self):
        tree = flat_manhattan(["a", "b"])
        x, y = FeatureVector({"a": 1.0}), FeatureVector({"a": 2.0, "b": 1.0})
        with pytest.raises(NotComparable):
            induced_distance(x, y, ["a", "b"], tree)

    def test_unknown_selection(self):
        tree = flat_manhattan(["a"])
        x = FeatureVector({"a": 1.0, "zz": 2.0})
        with pytest.raises(UnknownReference):
            induced_distance(x, x, ["zz"], tree)

    def test_empty_selection(self):
        tree = flat_manhattan(["a"])
        x = FeatureVector({"a": 1.0})
        with pytest.raises(ValidationError):
            induced_distance(x, x, [], tree)


def cupboard_tree():
    fin = MinkowskiLeaf(1.0, (LeafDim("Finances/Price"),))
    size = MinkowskiLeaf(1.0, tuple(LeafDim(f"Size/{d}") for d in ("Width", "Depth", "Height")))
    return Composite(1.0, ((1.0, fin), (1.0, size)))


class TestNestedDistance:
    def test_manhattan_in_manhattan_equals_flat(self):
        nested = cupboard_tree()
        flat = flat_manhattan(leaf_paths(nested))
        rng = np.random.default_rng(3)
        for _ in range(1000):
            xv, yv = rng.uniform(0, 500, 4), rng.uniform(0, 500, 4)
            x = FeatureVector(dict(zip(leaf_paths(nested), xv)))
            y = FeatureVector(dict(zip(leaf_paths(nested), yv)))
            dn = nested_distance(x, y, nested)
            df = nested_distance(x, y, flat)
            assert dn == pytest.approx(df, rel=1e-12)

    def test_identical_vectors(self):
        tree = cupboard_tree()
        x = FeatureVector({p: 5.0 for p in leaf_paths(tree)})
        assert nested_distance(x, x, tree) == 0.0

    def test_euclidean_over_manhattan_subvectors(self):
        w1, w2 = 1.7, 0.6
        tree = Composite(
            2.0,
            (
                (w1, MinkowskiLeaf(1.0, (LeafDim("a"), LeafDim("b")))),
                (w2, MinkowskiLeaf(1.0, (LeafDim("c"), LeafDim("d")))),
            ),
        )
        rng = np.random.default_rng(5)
        for _ in range(200):
            xv, yv = rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 4)
            x = FeatureVector(dict(zip("abcd", xv)))
            y = FeatureVector(dict(zip("abcd", yv)))
            inner1 = abs(xv[0] - yv[0]) + abs(xv[1] - yv[1])
            inner2 = abs(xv[2] - yv[2]) + abs(xv[3] - yv[3])
            want = math.sqrt((w1 * inner1) ** 2 + (w2 * inner2) ** 2)
            assert nested_distance(x, y, tree) == pytest.approx(want, rel=1e-12)


class TestDiscreteDistance:
    def test_equal(self):
        assert discrete_distance("red", "red") == 0.0

    def test_unequal(self):
        assert discrete_distance("red", "blue") == 1.0

    def test_mixed_into_manhattan_leaf(self):
        tree = MinkowskiLeaf(
            1.0, (LeafDim("t1", discrete=True), LeafDim("t2", discrete=True))
        )
        col_of = {"t1": 0, "t2": 1}
        x = np.array([[1.0, 2.0]])
        y = np.array([[1.0, 9.0]])  # one equal, one unequal
        assert evaluate_batch(tree, col_of, x, y)[0] == 1.0


class TestEstimateWeights:
    def test_sd_analytic(self):
        assert estimate_weights([[2, 2, 6, 6]]) == [0.5]

    def test_constant_column_fallback(self):
        assert estimate_weights([[5, 5, 5]]) == [1.0]

    def test_uniform_sampling(self):
        rng = np.random.default_rng(19)
        samples = rng.uniform(0, 10, 200_000)
        (r,) = estimate_weights([samples])
        want = 1.0 / (10 / math.sqrt(12))
        assert abs(r - want) / want < 0.05

    def test_percentile_spread(self):
        (r,) = estimate_weights([[0, 25, 50, 75, 100]], method="percentile", p_lo=25, p_hi=75)
        assert r == pytest.approx(1.0 / 50.0)

    def test_percentile_validation(self):
        with pytest.raises(ValidationError):
            estimate_weights([[1, 2]], method="percentile", p_lo=80, p_hi=20)

    def test_empty_column(self):
        with pytest.raises(ValidationError):
            estimate_weights([[]])

    def test_sd_needs_two_samples(self):
        with pytest.raises(ValidationError):
            estimate_weights([[1.0]])

    def test_sample_sd_knob(self):
        (pop,) = estimate_weights([[2, 2, 6, 6]])
        (smp,) = estimate_weights([[2, 2, 6, 6]], population=False)
        assert pop == 0.5 and smp == pytest.approx(1 / np.std([2, 2, 6, 6], ddof=1))

    def test_rescaling_divides_weight(self):
        rng = np.random.default_rng(23)
        col = rng.uniform(1, 9, 50)
        lam = 3.7
        (r1,) = estimate_weights([col])
        (r2,) = estimate_weights([col * lam])
        assert r2 == pytest.approx(r1 / lam, rel=1e-12)


def random_tree(rng, paths, order_pool=(1.0, 2.0, 3.0, math.inf), depth=1, max_depth=3):
    k = float(rng.choice(order_pool))
    if depth >= max_depth or len(paths) < 2 or rng.random() < 0.35:
        dims = tuple(
            LeafDim(p, float(rng.uniform(0.1, 3.0)), discrete=bool(rng.random() < 0.1))
            for p in paths
        )
        return MinkowskiLeaf(k, dims)
    cut = rng.integers(1, len(paths))
    left = random_tree(rng, paths[:cut], order_pool, depth + 1, max_depth)
    right = random_tree(rng, paths[cut:], order_pool, depth + 1, max_depth)
    return Composite(k, ((float(rng.uniform(0.1, 3.0)), left),
                         (float(rng.uniform(0.1, 3.0)), right)))


class TestMetricAxioms:
    @pytest.mark.parametrize("seed", range(8))
    def test_axioms_random_trees(self, seed):
        rng = np.random.default_rng(seed)
        paths = [f"d{i}" for i in range(int(rng.integers(2, 7)))]
        tree = random_tree(rng, paths)
        col_of = {p: i for i, p in enumerate(paths)}
        n = 300
        X = rng.uniform(-10, 10, (n, len(paths)))
        Y = rng.uniform(-10, 10, (n, len(paths)))
        Z = rng.uniform(-10, 10, (n, len(paths)))
        dxy = evaluate_batch(tree, col_of, X, Y)
        dyx = evaluate_batch(tree, col_of, Y, X)
        dyz = evaluate_batch(tree, col_of, Y, Z)
        dxz = evaluate_batch(tree, col_of, X, Z)
        assert (dxy >= 0).all()
        assert (dxy == dyx).all()  # symmetry is exact
        assert (dxz <= dxy + dyz + 1e-9 * np.maximum(1.0, dxy + dyz)).all()
        # identity of indiscernibles
        assert (evaluate_batch(tree, col_of, X, X) == 0).all()
        assert (dxy > 0).all()  # random vectors differ everywhere

    def test_weight_scaling_scales_distances_and_keeps_ranking(self):
        rng = np.random.default_rng(41)
        paths = [f"d{i}" for i in range(4)]
        tree = random_tree(rng, paths)
        lam = 2.5

        def scale(node):
            if isinstance(node, MinkowskiLeaf):
                return MinkowskiLeaf(
                    node.order,
                    tuple(LeafDim(d.path, d.weight * lam, d.discrete) for d in node.dims),
                )
            if isinstance(node, Composite):
                # scaling the top-level child weights suffices
                return Composite(node.order, tuple((w * lam, c) for w, c in node.children))
            return node

        col_of = {p: i for i, p in enumerate(paths)}
        X = rng.uniform(-10, 10, (500, 4))
        target = np.broadcast_to(rng.uniform(-10, 10, 4), X.shape)
        d1 = evaluate_batch(tree, col_of, X, target)
        d2 = evaluate_batch(scale(tree), col_of, X, target)
        assert d2 == pytest.approx(d1 * lam, rel=1e-9)
        assert (np.argsort(d1, kind="stable") == np.argsort(d2, kind="stable")).all()

    def test_subspace_monotone_for_manhattan(self):
        rng = np.random.default_rng(43)
        paths = ["a", "b", "c"]
        tree = MinkowskiLeaf(1.0, tuple(LeafDim(p, float(rng.uniform(0.5, 2))) for p in paths))
        for _ in range(100):
            x = FeatureVector(dict(zip(paths, rng.uniform(-5, 5, 3))))
            y = FeatureVector(dict(zip(paths, rng.uniform(-5, 5, 3))))
            d2 = induced_distance(x, y, ["a", "b"], tree)
            d3 = induced_distance(x, y, ["a", "b", "c"], tree)
            assert d3 >= d2 - 1e-12


class TestTreeHelpers:
    def test_leaf_paths_depth_first(self):
        assert leaf_paths(cupboard_tree()) == [
            "Finances/Price", "Size/Width", "Size/Depth", "Size/Height",
        ]

    def test_restrict_prunes(self):
        sub = restrict(cupboard_tree(), frozenset({"Size/Depth"}))
        assert leaf_paths(sub) == ["Size/Depth"]

    def test_restrict_to_nothing(self):
        assert restrict(cupboard_tree(), frozenset({"nope"})) is None

    def test_composed_weight_reduction(self):
        tree = Composite(
            2.0,
            ((3.0, MinkowskiLeaf(1.0, (LeafDim("a", 0.5), LeafDim("b", 2.0)))),),
        )
        assert composed_weight(tree, "a") == pytest.approx(1.5)
        # single compared dimension: distance is |dx| times the composed weight
        x = FeatureVector({"a": 10.0})
        y = FeatureVector({"a": 4.0})
        assert induced_distance(x, y, ["a"], tree) == pytest.approx(1.5 * 6.0)

    def test_invalid_nodes(self):
        with pytest.raises(ValidationError):
            LeafDim("a", weight=0.0)
        with pytest.raises(ValidationError):
            MinkowskiLeaf(0.5, (LeafDim("a"),))
        with pytest.raises(ValidationError):
            Composite(1.0, ())


class TestGeodesic:
    def test_quarter_meridian(self):
        d = great_circle_km(0.0, 0.0, 90.0, 0.0)
        assert d == pytest.approx(math.pi / 2 * EARTH_RADIUS_KM, rel=1e-12)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(71)
        leaf = GeodesicLeaf("lat", "lon")
        col_of = {"lat": 0, "lon": 1}
        P = np.column_stack([rng.uniform(-90, 90, 200), rng.uniform(-180, 180, 200)])
        Q = np.column_stack([rng.uniform(-90, 90, 200), rng.uniform(-180, 180, 200)])
        R = np.column_stack([rng.uniform(-90, 90, 200), rng.uniform(-180, 180, 200)])
        dpq = evaluate_batch(leaf, col_of, P, Q)
        dqp = evaluate_batch(leaf, col_of, Q, P)
        dqr = evaluate_batch(leaf, col_of, Q, R)
        dpr = evaluate_batch(leaf, col_of, P, R)
        assert (dpq == dqp).all()
        assert (dpr <= dpq + dqr + 1e-9 * np.maximum(1.0, dpq + dqr)).all()

    def test_inside_nested_tree(self):
        tree = Composite(
            1.0, ((2.0, GeodesicLeaf("lat", "lon")), (1.0, MinkowskiLeaf(1.0, (LeafDim("t"),))))
        )
        x = FeatureVector({"lat": 0.0, "lon": 0.0, "t": 1.0})
        y = FeatureVector({"lat": 90.0, "lon": 0.0, "t": 4.0})
        want = 2.0 * math.pi / 2 * EARTH_RADIUS_KM + 3.0
        assert nested_distance(x, y, tree) == pytest.approx(want, rel=1e-12)
