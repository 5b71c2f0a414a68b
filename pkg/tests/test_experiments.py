"""Tests for the packaged experiment recipes and their file outputs."""

import filecmp
import math
import os

import numpy as np
import pytest

from winkler_eki.experiments import (
    ExperimentSpec,
    MANIFEST_KEYS,
    PIECEWISE_TABLE,
    TruthSpec,
    make_observation,
    read_manifest,
    run_direct_experiment,
    run_experiment,
    run_from_manifest,
    run_inverse_experiment,
    truth_field,
    write_manifest,
)
from winkler_eki.grid import Grid
from winkler_eki.plate import ForwardContext, PlateModel, assemble_biharmonic, forward_solve

FAST = dict(n=6, gamma=0.01, beta=1e4, J=6, N=3, seed=2)


def _ctx(n):
    g = Grid(n)
    return ForwardContext(grid=g, model=PlateModel(), B=assemble_biharmonic(g))


class TestTruthFields:
    def test_exponential_at_the_centre(self):
        g = Grid(10)
        field = truth_field("exp", g)
        assert field.values[g.flat_index(5, 5)] == np.exp(1.0)

    def test_piecewise_region_values(self):
        g = Grid(10)
        field = truth_field("piecewise", g)
        # (0.5, 0.8) sits in the top band; (0.5, 0.2) in the second one.
        assert field.values[g.flat_index(5, 8)] == 0.10
        assert field.values[g.flat_index(6, 2)] == 0.07

    def test_uncovered_nodes_take_the_fill_value(self):
        g = Grid(20)
        field = truth_field("piecewise", g)
        # (0.05, 0.05) precedes the first band; open x-interval keeps it out.
        assert field.values[g.flat_index(1, 1)] == 0.0

    def test_open_interval_boundaries_are_excluded(self):
        g = Grid(10)
        field = truth_field("piecewise", g)
        # x = 0.9 is the open upper end of the 0.05 region.
        assert field.values[g.flat_index(9, 4)] == 0.0

    def test_values_come_from_the_table(self):
        g = Grid(16)
        field = truth_field("piecewise", g)
        allowed = {0.0} | {row[0] for row in PIECEWISE_TABLE}
        assert set(np.unique(field.values)) <= allowed

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            TruthSpec(kind="bumps")

    def test_custom_table(self):
        g = Grid(6)
        spec = TruthSpec(
            kind="custom",
            table=(((7.0), (0.0, 1.0, True, True), (0.0, 1.0, True, True)),),
            fill=-1.0,
        )
        field = truth_field(spec, g)
        np.testing.assert_array_equal(field.values, np.full(g.num_interior, 7.0))


class TestSpecValidation:
    def test_defaults_are_valid(self):
        spec = ExperimentSpec()
        assert spec.mode == "inverse"
        assert spec.truth == "exp"

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="mode"):
            ExperimentSpec(mode="sideways")

    def test_bad_truth(self):
        with pytest.raises(ValueError, match="truth"):
            ExperimentSpec(truth="bumps")

    def test_bad_grid(self):
        with pytest.raises(ValueError, match="n"):
            ExperimentSpec(n=3)

    def test_bad_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            ExperimentSpec(gamma=-0.01)

    def test_bad_beta(self):
        with pytest.raises(ValueError, match="beta"):
            ExperimentSpec(beta=0.0)

    def test_eki_fields_are_checked_on_construction(self):
        with pytest.raises(ValueError, match="J"):
            ExperimentSpec(J=1)
        with pytest.raises(ValueError, match="sigma_mode"):
            ExperimentSpec(sigma_mode="half")


class TestObservation:
    def test_noise_free_data_is_the_exact_solve(self):
        spec = ExperimentSpec(gamma=0.0, n=6)
        ctx = _ctx(6)
        y = make_observation(spec, ctx)
        clean = ctx(truth_field("exp", ctx.grid).values)
        np.testing.assert_array_equal(y.y, clean)
        assert y.gamma == 0.0
        assert y.eta_norm == 0.0

    def test_noise_magnitude_is_plausible(self):
        # q = 81 standard normals: ||eta||_2 concentrates near sqrt(q)*sqrt(gamma).
        spec = ExperimentSpec(gamma=0.01, n=10, seed=5)
        ctx = _ctx(10)
        y = make_observation(spec, ctx)
        clean = ctx(truth_field("exp", ctx.grid).values)
        raw = np.linalg.norm(y.y - clean)
        assert 0.6 < raw < 1.2
        assert y.eta_norm == pytest.approx(raw / math.sqrt(0.01))

    def test_same_seed_reproduces_bitwise(self):
        spec = ExperimentSpec(gamma=0.01, n=6, seed=7)
        ctx = _ctx(6)
        a = make_observation(spec, ctx)
        b = make_observation(spec, ctx)
        np.testing.assert_array_equal(a.y, b.y)
        assert a.eta_norm == b.eta_norm

    def test_different_seeds_differ(self):
        ctx = _ctx(6)
        a = make_observation(ExperimentSpec(gamma=0.01, n=6, seed=0), ctx)
        b = make_observation(ExperimentSpec(gamma=0.01, n=6, seed=1), ctx)
        assert np.any(a.y != b.y)


class TestManifest:
    def test_roundtrip(self, tmp_path):
        spec = ExperimentSpec(mode="direct", truth="piecewise", n=8, gamma=0.005,
                              beta=6000.0, J=40, sigma_mode="zero", dt=2.0,
                              N=600, seed=10, k_floor=1e-9, gamma_reg=1e-13)
        path = tmp_path / "manifest"
        write_manifest(path, spec)
        assert read_manifest(path) == spec

    def test_none_floor_roundtrip(self, tmp_path):
        spec = ExperimentSpec()
        path = tmp_path / "manifest"
        write_manifest(path, spec)
        assert "k_floor=none" in path.read_text()
        assert read_manifest(path) == spec

    def test_key_order_is_pinned(self, tmp_path):
        path = tmp_path / "manifest"
        write_manifest(path, ExperimentSpec())
        keys = [line.split("=")[0] for line in path.read_text().splitlines()]
        assert tuple(keys) == MANIFEST_KEYS

    def test_extra_keys_are_ignored(self, tmp_path):
        spec = ExperimentSpec()
        path = tmp_path / "manifest"
        write_manifest(path, spec)
        with open(path, "a") as fh:
            fh.write("eta_norm=9.5\nstop_reason=discrepancy\n")
        assert read_manifest(path) == spec

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "manifest"
        write_manifest(path, ExperimentSpec())
        lines = path.read_text().splitlines()
        path.write_text("\n".join(line for line in lines if not line.startswith("beta=")))
        with pytest.raises(ValueError, match="beta"):
            read_manifest(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "manifest"
        path.write_text("mode inverse\n")
        with pytest.raises(ValueError, match="key=value"):
            read_manifest(path)


class TestRuns:
    def test_inverse_run_returns_fields_and_report(self):
        spec = ExperimentSpec(**FAST)
        out = run_inverse_experiment(spec)
        assert set(out) == {"k_truth", "k_prior_sample", "k_reconstructed",
                            "report", "observation"}
        report = out["report"]
        assert report.iterations <= spec.N
        assert np.all(np.isfinite(report.theta))
        assert out["k_reconstructed"].grid == Grid(spec.n)

    def test_direct_truth_is_the_exact_solve(self):
        spec = ExperimentSpec(mode="direct", **FAST)
        ctx = _ctx(spec.n)
        out = run_direct_experiment(spec, ctx)
        expected = forward_solve(ctx.B, truth_field("exp", ctx.grid).values,
                                 ctx.load, D=ctx.model.D)
        np.testing.assert_array_equal(out["w_true"].values, expected.values)

    def test_mode_dispatch(self):
        direct = run_experiment(ExperimentSpec(mode="direct", **FAST))
        assert "w_reconstructed" in direct
        inverse = run_experiment(ExperimentSpec(**FAST))
        assert "k_reconstructed" in inverse

    def test_mode_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            run_inverse_experiment(ExperimentSpec(mode="direct", **FAST))
        with pytest.raises(ValueError, match="mode"):
            run_direct_experiment(ExperimentSpec(**FAST))

    def test_output_layout(self, tmp_path):
        spec = ExperimentSpec(**FAST)
        run_experiment(spec, outdir=tmp_path)
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["manifest", "obs.csv", "prior_member0.csv", "recon.csv",
                         "recon_snake.csv", "report.csv", "truth.csv"]
        text = (tmp_path / "manifest").read_text()
        assert "stop_reason=" in text
        assert "eta_norm=" in text
        assert read_manifest(tmp_path / "manifest") == spec

    def test_reruns_are_byte_identical(self, tmp_path):
        spec = ExperimentSpec(**FAST)
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_experiment(spec, outdir=a)
        run_experiment(spec, outdir=b, workers=4)
        for name in os.listdir(a):
            assert filecmp.cmp(a / name, b / name, shallow=False), name

    def test_run_from_manifest_reproduces_outputs(self, tmp_path):
        spec = ExperimentSpec(**FAST)
        first = tmp_path / "first"
        run_experiment(spec, outdir=first)
        second = tmp_path / "second"
        os.makedirs(second)
        run_from_manifest(first / "manifest", outdir=second)
        for name in os.listdir(first):
            assert filecmp.cmp(first / name, second / name, shallow=False), name
