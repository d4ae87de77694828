import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaknoise.errors import AllOutage, CodebookTooLarge, NonpositiveCost
from weaknoise.harness import (
    TRIAL_BLOCK,
    ExperimentConfig,
    converse_check,
    count_rises,
    estimate_exponent,
    run_experiment,
    snr_sweep,
)
from weaknoise.modulate import cell_centers, codebook_for
from weaknoise.theory import ChannelSpec, ErrorCostSpec


def noiseless(**kw):
    base = dict(
        ecf=ErrorCostSpec(2, (0.0,)),
        channel=ChannelSpec(1.0, 1e-12),
        levels=(4,),
        block_lengths=(4,),
        trials_per_probe=3,
        random_probes=5,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestNoiseless:
    def test_boundary_sup_cost(self):
        summary, _ = run_experiment(noiseless())
        b = summary.blocks[0]
        assert b.delta_n == 0
        assert b.sup_cost == 0.015625

    def test_every_cost_is_quantizer_error(self):
        _, table = run_experiment(noiseless(random_probes=40))
        assert not table.outage.any()
        assert np.all(table.cost <= 0.015625)

    def test_two_dimensional(self):
        cfg = noiseless(ecf=ErrorCostSpec(1, (0.1, -0.1)), levels=(3, 5), block_lengths=(6,))
        summary, _ = run_experiment(cfg)
        w = cfg.ecf.with_n(6).weights
        assert summary.blocks[0].sup_cost == pytest.approx(w[0] / 6 + w[1] / 10, rel=1e-12)


class TestDeterminism:
    cfg = ExperimentConfig(
        ecf=ErrorCostSpec(1.5, (0.1, 0.0)),
        channel=ChannelSpec.from_gamma(4.0),
        block_lengths=(4, 6),
        trials_per_probe=TRIAL_BLOCK + 37,  # forces more than one trial block
        rate_fraction=0.6,
        random_probes=6,
        master_seed=11,
    )

    def test_workers_do_not_matter(self):
        _, one = run_experiment(self.cfg)
        _, many = run_experiment(self.cfg.with_(workers=8))
        for col in ("n", "probe", "trial", "u", "u_hat", "outage", "cost"):
            assert np.array_equal(getattr(one, col), getattr(many, col))

    def test_summary_recomputes_from_records(self):
        summary, table = run_experiment(self.cfg)
        for b in summary.blocks:
            per_probe = {}
            for r in table.records():
                if r.n == b.n and not r.outage:
                    per_probe.setdefault(r.probe, []).append(r.cost)
            sup = max(statistics.mean(v) for v in per_probe.values())
            assert sup == b.sup_cost

    def test_coded_cost_is_exact(self):
        _, table = run_experiment(self.cfg)
        for n in self.cfg.block_lengths:
            spec = self.cfg.modulator_at(n)
            ecf = self.cfg.ecf.with_n(n)
            sel = table.select(table.n == n)
            assert np.array_equal(sel.cost, ecf.cost(sel.u_hat - sel.u))
            ok = ~sel.outage
            idx = np.stack([np.minimum(np.floor(sel.u[ok, i] * m), m - 1) for i, m in enumerate(spec.levels)], -1)
            assert np.array_equal(sel.u_hat[ok], cell_centers(idx, spec.levels))

    def test_master_seed_changes_noise(self):
        _, a = run_experiment(self.cfg)
        _, b = run_experiment(self.cfg.with_(master_seed=12))
        assert not np.array_equal(a.u_hat, b.u_hat) or not np.array_equal(a.u, b.u)

    def test_trial_count_only_appends(self):
        _, small = run_experiment(self.cfg.with_(trials_per_probe=50))
        _, big = run_experiment(self.cfg)
        keep = big.trial < 50
        assert np.array_equal(big.u_hat[keep], small.u_hat)


class TestExponentFit:
    def test_exact_line(self):
        fit = estimate_exponent([(n, math.exp(-0.7 * n)) for n in (4, 8, 12)])
        assert fit.slope == pytest.approx(0.7, rel=1e-12)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)

    def test_prefactor_moves_intercept_only(self):
        fit = estimate_exponent([(n, 5 * math.exp(-0.7 * n)) for n in (4, 8)])
        assert fit.slope == pytest.approx(0.7, rel=1e-12)
        assert fit.intercept == pytest.approx(-math.log(5), rel=1e-12)
        assert fit.stderr == 0.0

    def test_noisy(self):
        g = np.random.default_rng(5)
        ns = np.arange(8, 25)
        pts = [(n, math.exp(-0.7 * n + g.normal(0, 0.05))) for n in ns]
        fit = estimate_exponent(pts)
        assert abs(fit.slope - 0.7) <= 0.02

    def test_needs_positive_costs(self):
        with pytest.raises(NonpositiveCost):
            estimate_exponent([(4, 0.1), (8, 0.0)])
        with pytest.raises(ValueError):
            estimate_exponent([(4, 0.1)])


class TestConfig:
    def test_levels_from_rates(self):
        cfg = ExperimentConfig(ErrorCostSpec(2, (0.0,)), ChannelSpec.from_gamma(math.e**2 - 1))
        assert cfg.levels_at(3) == (round(math.exp(3.0)),)

    def test_codebook_cap(self):
        cfg = noiseless(ecf=ErrorCostSpec(1, (0.0, 0.0)), levels=(2048, 1024))
        with pytest.raises(CodebookTooLarge):
            cfg.modulator_at(4)

    @pytest.mark.parametrize("bad", [
        dict(block_lengths=(8, 8)),
        dict(block_lengths=()),
        dict(trials_per_probe=0),
        dict(rate_fraction=0.0),
        dict(probes=((0.1, 0.2),)),
    ])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            noiseless(**bad)

    def test_corner_probes_hit_cell_boundaries(self):
        pts = noiseless(levels=(8,), corner=3, random_probes=0).probe_points(4)
        assert pts[:, 0].tolist() == [0.0, 0.125, 0.25, 0.375]

    def test_codebook_per_block_length(self):
        cfg = noiseless(block_lengths=(4, 5))
        assert codebook_for(cfg.modulator_at(4)).n == 4
        assert cfg.modulator_at(4).seed != cfg.modulator_at(5).seed


def test_all_outage_carries_summary():
    cfg = ExperimentConfig(
        ErrorCostSpec(1, (0.0,)), ChannelSpec(1.0, 100.0), levels=(64,), block_lengths=(2,),
        trials_per_probe=1, random_probes=20,
    )
    with pytest.raises(AllOutage) as info:
        run_experiment(cfg)
    assert info.value.summary.blocks[0].flagged_probes
    assert len(info.value.table) == cfg.trials_per_probe * len(cfg.probe_points(2))


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), max_size=12))
def test_count_rises(values):
    assert count_rises(values) == sum(b > a for a, b in zip(values, values[1:]))
    assert count_rises(sorted(values, reverse=True)) == 0


class TestSweep:
    def test_zero_snr_row(self):
        cfg = noiseless(ecf=ErrorCostSpec(2, (0.2, 0.2)), levels=(2, 2))
        res = snr_sweep(cfg, [0.0, 10.0])
        zero = res.rows[0]
        assert zero.exponent_theory == pytest.approx(0.2)
        assert math.isnan(zero.sup_cost)
        assert res.rows[1].gamma == 10.0

    def test_runs_at_largest_n(self):
        res = snr_sweep(noiseless(block_lengths=(2, 4)), [5.0])
        assert res.n == 4


class TestConverseCheck:
    def grid_config(self, delta):
        probes = tuple((i / 4, j / 4) for i in range(4) for j in range(4))
        return ExperimentConfig(
            ErrorCostSpec(1, (0.0, 0.0)), ChannelSpec(1.0, 1.0), levels=(1, 1), block_lengths=(4,),
            trials_per_probe=5, probes=probes, random_probes=0, corner=0,
            scan_levels=(4, 4), converse_delta=delta,
        )

    def test_constant_modulator_meets_bound(self):
        (check,) = converse_check(self.grid_config(0.0))
        assert check.locus_length == 0.0
        assert check.bound == pytest.approx(0.125, rel=1e-12)
        assert check.measured_sup_cost == 1.0
        assert check.satisfied

    def test_large_outage_gives_trivial_bound(self):
        (check,) = converse_check(self.grid_config(0.5))
        assert check.bound == 0.0
