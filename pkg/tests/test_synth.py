import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moneyflow.experiments import firm_analog
from moneyflow.graph import DirectedGraph, edge_degree_correlation
from moneyflow.stats import fit_tail_exponent
from moneyflow.synth import (MatchReport, RewireReport, SynthConfig, correlation_rewire,
                             coupled_uniforms, directed_configuration_model, generate,
                             sample_powerlaw_degrees)


def discrete_hill_oracle(k, tail_fraction=0.1):
    """Grid-search MLE of a floored Pareto tail, written from the pmf."""
    v = np.sort(np.asarray(k, float))[::-1]
    x_min = v[int(np.ceil(v.size * tail_fraction)) - 1]
    t = v[v >= x_min]
    grid = np.linspace(0.5, 3.0, 25_001)
    ll = [np.sum(np.log((t / x_min) ** -a - ((t + 1) / x_min) ** -a)) for a in grid]
    return grid[int(np.argmax(ll))]


class TestDegrees:
    def test_total_forces_minimum(self):
        assert sample_powerlaw_degrees(5, 1.3, 1, total=5, seed=0).tolist() == [1] * 5

    def test_infeasible_total(self):
        with pytest.raises(ValueError):
            sample_powerlaw_degrees(5, 1.3, 2, total=9, seed=0)
        with pytest.raises(ValueError):
            sample_powerlaw_degrees(5, 1.3, 1, total=30, seed=0, k_max=4)

    def test_tail_recovery(self):
        k = sample_powerlaw_degrees(100_000, 1.3, 1, seed=3)
        fit = fit_tail_exponent(k).exponent
        assert fit == pytest.approx(1.3, abs=0.1)
        assert fit == pytest.approx(discrete_hill_oracle(k), abs=1e-3)

    def test_deterministic(self):
        a = sample_powerlaw_degrees(1000, 1.3, 1, total=2500, seed=8)
        b = sample_powerlaw_degrees(1000, 1.3, 1, total=2500, seed=8)
        assert np.array_equal(a, b)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 300), st.floats(0.8, 3.0), st.integers(1, 4), st.integers(0, 10**6),
           st.integers(0, 500))
    def test_total_and_bounds(self, n, alpha, k_min, seed, extra):
        total = n * k_min + extra
        k_max = k_min + 50
        if total > n * k_max:
            total = n * k_max
        k = sample_powerlaw_degrees(n, alpha, k_min, total=total, seed=seed, k_max=k_max)
        assert k.sum() == total
        assert k.min() >= k_min and k.max() <= k_max

    def test_cap_respected(self):
        k = sample_powerlaw_degrees(50_000, 1.1, 1, seed=1, k_max=200)
        assert k.max() == 200

    def test_coupled_uniforms(self):
        u1, u2 = coupled_uniforms(20_000, 0.9, 4)
        assert 0 < u1.min() and u2.max() < 1
        assert np.corrcoef(u1, u2)[0, 1] > 0.85
        a, b = coupled_uniforms(20_000, 0.0, 4)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.03


class TestConfigurationModel:
    def test_smallest_instance(self):
        for seed in range(10):
            rep = MatchReport()
            g = directed_configuration_model([1, 1], [1, 1], seed, rep)
            edges = set(zip(*[e.tolist() for e in g.edges()]))
            if rep.dropped == 0:
                assert edges == {(0, 1), (1, 0)}
            else:
                assert g.n_edges == 2 - rep.dropped
            assert rep.realized_edges == g.n_edges

    def test_k3_enumeration(self):
        # every simple digraph on 3 nodes with all in/out degrees 2
        all_edges = [(a, b) for a in range(3) for b in range(3) if a != b]
        valid = set()
        for sub in itertools.combinations(all_edges, 6):
            k_out = np.bincount([a for a, _ in sub], minlength=3)
            k_in = np.bincount([b for _, b in sub], minlength=3)
            if (k_out == 2).all() and (k_in == 2).all():
                valid.add(frozenset(sub))
        assert len(valid) == 1
        for seed in range(20):
            g = directed_configuration_model([2, 2, 2], [2, 2, 2], seed)
            assert frozenset(zip(*[e.tolist() for e in g.edges()])) in valid

    def test_sum_mismatch(self):
        with pytest.raises(ValueError):
            directed_configuration_model([1, 2], [1, 1])

    def test_scale_free_mismatch_fraction(self):
        n = 10_000
        k_in = sample_powerlaw_degrees(n, 1.3, 1, seed=1)
        k_out = sample_powerlaw_degrees(n, 1.3, 1, total=int(k_in.sum()), seed=2)
        rep = MatchReport()
        g = directed_configuration_model(k_in, k_out, 3, rep)
        assert rep.mismatched_nodes / n < 0.01
        assert rep.requested_edges - rep.dropped == g.n_edges


class TestRewire:
    def test_target_at_current_value(self):
        g = generate(SynthConfig(node_count=500, k_min=2, seed=1, correlation_target=0.0))[0]
        rep = RewireReport()
        out = correlation_rewire(g, edge_degree_correlation(g), seed=0, report=rep)
        assert rep.accepted == 0 and out.same_structure(g)

    def test_four_node_monotone_exhaustive(self):
        """Every 4-node digraph with 4-7 edges: the result never rises, and
        falls whenever a single improving swap exists."""
        all_edges = [(a, b) for a in range(4) for b in range(4) if a != b]
        improvable = 0
        for k in range(4, 8):
            for edges in itertools.combinations(all_edges, k):
                g = DirectedGraph.from_edges(*zip(*edges), n=4)
                rho0 = edge_degree_correlation(g)
                if not np.isfinite(rho0):
                    continue
                best = rho0
                for i, j in itertools.permutations(range(k), 2):
                    (x1, y1), (x2, y2) = edges[i], edges[j]
                    new = set(edges) - {edges[i], edges[j]} | {(x1, y2), (x2, y1)}
                    if x1 == y2 or x2 == y1 or len(new) < k:
                        continue
                    h = DirectedGraph.from_edges(*zip(*sorted(new)), n=4)
                    best = min(best, edge_degree_correlation(h))
                rep = RewireReport()
                out = correlation_rewire(g, -1.0, budget=50, seed=0, report=rep)
                assert rep.final_correlation <= rho0 + 1e-12
                assert np.array_equal(out.in_degree, g.in_degree)
                if best < rho0 - 1e-9:
                    improvable += 1
                    assert rep.final_correlation < rho0
        assert improvable > 0

    def test_reaches_negative_target(self):
        cfg = firm_analog(10_000, 0)
        raw = generate(SynthConfig(**{**cfg.__dict__, "correlation_target": 0.0}))[0]
        rep = RewireReport()
        out = correlation_rewire(raw, -0.3, budget=10, seed=1, report=rep)
        assert abs(edge_degree_correlation(out) + 0.3) <= 0.05
        assert np.array_equal(out.in_degree, raw.in_degree)
        assert np.array_equal(out.out_degree, raw.out_degree)


class TestGenerate:
    def test_tail_small(self):
        g, _ = generate(SynthConfig(node_count=1000, alpha_in=1.3, correlation_target=0.0, seed=2))
        assert fit_tail_exponent(g.in_degree).exponent == pytest.approx(1.3, abs=0.2)

    def test_tail_large(self):
        g, rep = generate(SynthConfig(node_count=100_000, alpha_in=1.3, correlation_target=0.0, seed=2))
        assert fit_tail_exponent(g.in_degree).exponent == pytest.approx(1.3, abs=0.15)
        assert rep.requested_in_total == rep.requested_out_total

    def test_target_changes_correlation_not_degrees(self):
        base = dict(node_count=3000, k_min=2, inout_coupling=0.9, k_max=150, seed=6)
        g0, r0 = generate(SynthConfig(correlation_target=0.0, **base))
        g1, r1 = generate(SynthConfig(correlation_target=-0.3, **base))
        assert np.array_equal(g0.in_degree, g1.in_degree)
        assert np.array_equal(g0.out_degree, g1.out_degree)
        assert r1.final_correlation < r0.final_correlation - 0.1

    def test_deterministic(self):
        cfg = SynthConfig(node_count=3000, k_min=2, correlation_target=-0.1, seed=5)
        assert generate(cfg)[0].same_structure(generate(cfg)[0])

    @pytest.mark.parametrize("kw", [dict(node_count=5), dict(k_min=0), dict(correlation_target=1.0),
                                    dict(inout_coupling=1.5), dict(k_max=200_000), dict(alpha_in=0)])
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            SynthConfig(**kw)
