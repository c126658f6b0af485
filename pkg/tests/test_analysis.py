import numpy as np
import pytest

from relupatch import analysis
from relupatch.analysis import (classify_intersection, conjecture_report,
                                count_regions, dp_distance, sweep_regions_1d)
from relupatch.errors import RelupatchError
from relupatch.fit import FitConfig, fit_weights, select_radii
from relupatch.geometry import ball_volume, intersection, Hyperplane
from relupatch.oracle import sample_points, wrap_network
from relupatch.patches import make_patch
from relupatch.relunet import (Architecture, AffineLayer, ReluNetwork,
                               random_network)


def breakpoint_net_1d(breaks, T=1.0):
    """One hidden layer, one neuron per breakpoint: f = sum relu(x - t_k)."""
    k = len(breaks)
    arch = Architecture((1, k, 1))
    W1 = np.ones((k, 1))
    b1 = -np.asarray(breaks, dtype=float)
    W2 = np.ones((1, k))
    return ReluNetwork(arch, [AffineLayer(W1, b1), AffineLayer(W2, [0.0])])


def bending_example_net():
    """Layer 1: z1 = x1, z2 = x2, z3 = -x2 (so x2 passes through linearly).

    Layer 2: z4 = relu(x1) - x2 + 1/4. Its boundary x2 = relu(x1) + 1/4
    kinks where it crosses z1's straight boundary x1 = 0, at (0, 1/4).
    """
    arch = Architecture((2, 3, 1))
    l1 = AffineLayer([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [0.0, 0.0, 0.0])
    l2 = AffineLayer([[1.0, -1.0, 1.0]], [0.25])
    return ReluNetwork(arch, [l1, l2])


class TestDpDistance:
    def test_identical_functions(self):
        f = lambda X: X[:, 0] ** 2
        d = dp_distance(f, f, 2, T=1.0, p=2.0, nsamples=1000, seed=0)
        assert d.value <= 1e-12

    def test_constant_gap(self):
        k, T = 1.7, 1.0
        f = lambda X: np.full(len(X), k)
        zero = lambda X: np.zeros(len(X))
        d = dp_distance(f, zero, 2, T, p=2.0, nsamples=10_000, seed=1)
        # exact: the integrand is constant
        assert d.value == pytest.approx(abs(k) * ball_volume(2, T) ** 0.5,
                                        rel=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        w1, w2 = rng.standard_normal(2), rng.standard_normal(2)
        f = lambda X: X @ w1
        g = lambda X: X @ w2
        a = dp_distance(f, g, 2, 1.0, 2.0, 5000, seed=3)
        b = dp_distance(g, f, 2, 1.0, 2.0, 5000, seed=3)
        assert a.value == b.value

    def test_triangle_inequality_on_shared_samples(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            ws = rng.standard_normal((3, 2))
            fs = [lambda X, w=w: X @ w for w in ws]
            d = lambda i, j: dp_distance(fs[i], fs[j], 2, 1.0, 2.0, 2000,
                                         seed=trial).value
            assert d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9


class TestCountRegions:
    def test_affine_on_domain(self):
        # hidden pre-activations strictly positive on B_1(0)
        arch = Architecture((2, 2, 1))
        net = ReluNetwork(arch, [
            AffineLayer([[0.1, 0.0], [0.0, 0.1]], [10.0, 10.0]),
            AffineLayer([[1.0, 1.0]], [0.0]),
        ])
        assert count_regions(net, 1.0, 10_000, seed=0) == 1

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_1d_breakpoints(self, k):
        breaks = np.linspace(-0.8, 0.8, k)
        net = breakpoint_net_1d(breaks)
        by_sampling = count_regions(net, 1.0, 100_000, seed=1)
        by_sweep = sweep_regions_1d(net, 1.0)
        assert by_sampling == k + 1
        assert by_sweep == k + 1

    def test_monotone_in_samples(self):
        net = random_network(Architecture((2, 5, 3, 1)), seed=9)
        a = count_regions(net, 1.0, 1000, seed=5)
        b = count_regions(net, 1.0, 100_000, seed=5)
        assert a <= b

    def test_upper_bound(self):
        net = random_network(Architecture((2, 4, 2, 1)), seed=13)
        assert count_regions(net, 1.0, 50_000, seed=0) <= 2 ** 6


class TestClassifyIntersection:
    def test_first_layer_pair_neither(self):
        for seed in (0, 1, 2):
            net = random_network(Architecture((2, 3, 1)), seed=seed)
            # boundaries of first-layer neurons i and j are straight lines
            W, b = net.layers[0].W, net.layers[0].b
            h1 = Hyperplane.from_general(W[0], -b[0])
            h2 = Hyperplane.from_general(W[1], -b[1])
            x_star = intersection(h1, h2).base
            out = classify_intersection(net, (0, 0), (0, 1), x_star, eps=1e-3)
            assert out == "neither"

    def test_constructed_bend(self):
        net = bending_example_net()
        x_star = np.array([0.0, 0.25])
        out = classify_intersection(net, (0, 0), (1, 0), x_star, eps=1e-2)
        assert out == "z2_bends"

    def test_swapped_arguments(self):
        net = bending_example_net()
        x_star = np.array([0.0, 0.25])
        out = classify_intersection(net, (1, 0), (0, 0), x_star, eps=1e-2)
        assert out == "z_bends"

    def test_rejects_far_point(self):
        net = bending_example_net()
        with pytest.raises(RelupatchError):
            classify_intersection(net, (0, 0), (1, 0), np.array([0.6, 0.8]))


class TestConjectureReport:
    def test_report_structure(self):
        net = random_network(Architecture((2, 3, 1)), seed=7)
        orc = wrap_network(net, 1.0)
        ps = sample_points(orc, 8, seed=7)
        radii = select_radii(ps, 1.0, 1.0, "disjoint")
        plist = [make_patch(ps.points[i], ps.gradients[i], ps.values[i],
                            1.0, radii[i]) for i in range(len(ps))]

        def rerun(lam):
            cfg = FitConfig(mc_samples=5000, seed=7, reg="l1", lam=lam,
                            max_iters=20_000)
            return fit_weights(plist, wrap_network(net, 1.0), cfg)

        base = rerun(0.0)
        grid = [1e-4, 1e-3, 1e-2, 1e-1]
        rep = conjecture_report(base, net, grid, rerun, T=1.0,
                                region_samples=20_000)
        assert rep.first_layer_width == 3
        assert len(rep.lambda_grid) == 4
        assert rep.nonzero_weights == len(plist)  # no shrinkage at lambda 0
        assert rep.empirical_region_count >= 1
        # heavy shrinkage end of the grid never has more nonzeros than light
        counts = [k for _, k in rep.lambda_grid]
        assert counts[-1] <= counts[0]

    def test_huge_lambda_zero_count(self):
        net = random_network(Architecture((2, 3, 1)), seed=8)
        orc = wrap_network(net, 1.0)
        ps = sample_points(orc, 5, seed=8)
        radii = select_radii(ps, 1.0, 1.0, "disjoint")
        plist = [make_patch(ps.points[i], ps.gradients[i], ps.values[i],
                            1.0, radii[i]) for i in range(len(ps))]

        def rerun(lam):
            cfg = FitConfig(mc_samples=2000, seed=8, reg="l1", lam=lam,
                            max_iters=5000)
            return fit_weights(plist, wrap_network(net, 1.0), cfg)

        rep = conjecture_report(rerun(0.0), net, [1e6], rerun, T=1.0,
                                region_samples=5000)
        assert rep.lambda_grid[0][1] == 0
