import json

import numpy as np
import pytest

from dyconfid import data, harness
from dyconfid.core import ConfigError, RunConfig


def tiny_dataset(seed=0):
    return data.DatasetSpec(
        class_specs=tuple(data.ShapeSpec(p, 0.03) for p in ("sphere", "line", "torus")),
        counts=(12, 6, 4), labeled_fraction=0.25, test_per_class=3,
        points_per_cloud=16, seed=seed)


def tiny_config(method="dyconfid", E_max=5, **kw):
    run = RunConfig(C=3, B=8, mu=2, E_max=E_max, hidden=8,
                    resample_enabled=kw.pop("resample_enabled", method == "dyconfid"),
                    resample_refresh_epochs=kw.pop("resample_refresh_epochs", 50))
    return harness.ExperimentConfig(run=run, dataset=tiny_dataset(), method=method,
                                    seeds=(0,), **kw)


# --- validation ----------------------------------------------------------------

def test_validate_method_name():
    with pytest.raises(ConfigError, match="method"):
        harness.validate_experiment(tiny_config(method="mixmatch"))


def test_validate_class_count_consistency():
    cfg = tiny_config()
    bad = harness.ExperimentConfig(run=RunConfig(C=5, B=8, mu=2, E_max=3, hidden=8,
                                                 resample_enabled=False),
                                   dataset=cfg.dataset, method="fixmatch", seeds=(0,))
    with pytest.raises(ConfigError, match="run.C"):
        harness.validate_experiment(bad)


def test_validate_method_tau_rules():
    # baselines accept any tau in (0,1)
    harness.validate_experiment(tiny_config(method="fixmatch", method_tau=0.3))
    with pytest.raises(ConfigError, match="method_tau"):
        harness.validate_experiment(tiny_config(method="fixmatch", method_tau=1.5))
    # dyconfid has no static tau
    with pytest.raises(ConfigError, match="method_tau"):
        harness.validate_experiment(tiny_config(method="dyconfid", method_tau=0.9))


def test_validate_supervised_cannot_resample():
    with pytest.raises(ConfigError, match="resample"):
        harness.validate_experiment(tiny_config(method="supervised", resample_enabled=True))


# --- run artifacts ---------------------------------------------------------------

def test_run_writes_artifact(tmp_path):
    cfg = tiny_config(E_max=4)
    art = harness.run_experiment(cfg, 0, tmp_path / "r")
    assert (tmp_path / "r" / "metrics.csv").exists()
    assert (tmp_path / "r" / "sampler.csv").exists()
    assert (tmp_path / "r" / "summary.json").exists()
    assert (tmp_path / "r" / "checkpoint.npz").exists()
    assert len(art.rows) == 4
    assert art.columns == harness.metrics_columns(3)
    # the mean-class column is exactly the unweighted mean of per-class columns
    for row in art.rows:
        per_class = [row[art.columns.index(f"acc_{c}")] for c in range(3)]
        assert row[art.columns.index("mean_class_acc")] == pytest.approx(np.mean(per_class), abs=1e-15)


def test_run_deterministic_metrics_bytes(tmp_path):
    cfg = tiny_config(E_max=4)
    harness.run_experiment(cfg, 3, tmp_path / "a")
    harness.run_experiment(cfg, 3, tmp_path / "b")
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert (tmp_path / "a" / "sampler.csv").read_bytes() == (tmp_path / "b" / "sampler.csv").read_bytes()


def test_different_seeds_differ(tmp_path):
    cfg = tiny_config(E_max=4)
    a = harness.run_experiment(cfg, 0, tmp_path / "a")
    b = harness.run_experiment(cfg, 1, tmp_path / "b")
    assert a.rows != b.rows


def test_reduction_pinned_dyconfid_equals_fixmatch(tmp_path):
    # resampling off and per-class thresholds pinned at tau reduces the
    # method exactly to the static-threshold baseline
    dy = tiny_config(method="dyconfid", E_max=5, resample_enabled=False,
                     pin_class_thresholds=True)
    fx = tiny_config(method="fixmatch", E_max=5, resample_enabled=False)
    harness.run_experiment(dy, 2, tmp_path / "dy")
    harness.run_experiment(fx, 2, tmp_path / "fx")
    assert (tmp_path / "dy" / "metrics.csv").read_bytes() == (tmp_path / "fx" / "metrics.csv").read_bytes()


def test_sampler_log_written_on_refresh(tmp_path):
    cfg = tiny_config(E_max=5, resample_refresh_epochs=2)
    harness.run_experiment(cfg, 0, tmp_path / "r")
    lines = (tmp_path / "r" / "sampler.csv").read_text().splitlines()
    # refresh at epochs 2 and 4, two pools, three classes each
    assert lines[0] == "epoch,pool,class,mean_weight"
    assert len(lines) == 1 + 2 * 2 * 3
    assert lines[1].startswith("2,labeled,0,")


def test_supervised_run_has_zero_utilization(tmp_path):
    cfg = tiny_config(method="supervised", resample_enabled=False, E_max=3)
    art = harness.run_experiment(cfg, 0, tmp_path / "s")
    assert (art.column("utilization") == 0).all()
    assert (art.column("loss_u") == 0).all()


def test_load_artifact_roundtrip(tmp_path):
    cfg = tiny_config(E_max=3)
    art = harness.run_experiment(cfg, 0, tmp_path / "r")
    loaded = harness.load_artifact(tmp_path / "r")
    assert loaded.columns == art.columns
    assert np.allclose(np.array(loaded.rows, dtype=float), np.array(art.rows, dtype=float))
    assert loaded.config == art.config
    assert loaded.seed == 0


# --- compare / correlation -------------------------------------------------------

def test_compare_requires_shared_dataset(tmp_path):
    a = tiny_config(method="fixmatch", E_max=2, out_dir=str(tmp_path / "a"))
    b_ds = tiny_dataset(seed=9)
    b = harness.ExperimentConfig(run=a.run, dataset=b_ds, method="fixmatch",
                                 seeds=(0,), out_dir=str(tmp_path / "b"))
    with pytest.raises(ConfigError, match="dataset"):
        harness.compare([a, b])
    with pytest.raises(ConfigError, match="at least 2"):
        harness.compare([a])


def test_compare_table(tmp_path):
    a = tiny_config(method="fixmatch", E_max=2, out_dir=str(tmp_path / "runs"), name="fix")
    b = tiny_config(method="supervised", E_max=2, resample_enabled=False,
                    out_dir=str(tmp_path / "runs"), name="sup")
    table = harness.compare([a, b], tmp_path / "cmp.csv")
    lines = table.splitlines()
    assert lines[0] == "method,seed,overall_acc,mean_class_acc"
    assert any(ln.startswith("fix,0,") for ln in lines)
    assert "method,overall_mean,overall_std,mean_class_mean,mean_class_std" in lines
    assert (tmp_path / "cmp.csv").read_text() == table


def test_pearson_r_zero_variance_is_nan():
    assert np.isnan(harness.pearson_r(np.ones(4), np.array([1, 2, 3, 4.0])))
    r = harness.pearson_r(np.array([1, 2, 3, 4.0]), np.array([2, 4, 6, 8.0]))
    assert r == pytest.approx(1.0)


def test_correlation_report(tmp_path):
    cfg = tiny_config(E_max=3)
    art = harness.run_experiment(cfg, 0, tmp_path / "r")
    rep = harness.correlation_report(art, tmp_path / "corr.json")
    assert len(rep["per_class"]) == 3
    with open(tmp_path / "corr.json") as f:
        assert json.load(f) == rep


def test_correlation_report_perfect_model_undefined(tmp_path):
    cfg = tiny_config(E_max=3)
    art = harness.run_experiment(cfg, 0, tmp_path / "r")
    # force a zero-variance accuracy vector in the final row
    for c in range(3):
        art.rows[-1][art.columns.index(f"acc_{c}")] = 1.0
    rep = harness.correlation_report(art)
    assert rep["pearson_r"] is None
    assert "zero variance" in rep["note"]


# --- config text format ----------------------------------------------------------

def test_config_text_roundtrip():
    cfg = tiny_config(method="fixmatch", method_tau=0.35, E_max=7, name="fm")
    text = harness.format_config(cfg)
    back = harness.parse_config_text(text)
    assert back == cfg


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown config key"):
        harness.parse_config_text("methodd = dyconfid\n")


def test_config_rejects_bad_value_and_reports_key():
    with pytest.raises(ConfigError, match="run.B"):
        harness.parse_config_text("run.B = many\n")


def test_config_rejects_missing_equals():
    with pytest.raises(ConfigError, match="line 2"):
        harness.parse_config_text("method = dyconfid\njust words\n")


def test_config_comments_and_overrides():
    text = "method = fixmatch  # static baseline\nmethod_tau = 0.9\nrun.C = 3\nrun.B = 8\nrun.E_max = 2\nrun.hidden = 8\nrun.mu = 2\nrun.resample_enabled = false\ndataset.primitives = sphere, line, torus\ndataset.sigmas = 0.03\ndataset.counts = 12, 6, 4\ndataset.labeled_fraction = 0.25\ndataset.test_per_class = 3\ndataset.points_per_cloud = 16\n"
    cfg = harness.parse_config_text(text)
    assert cfg.method == "fixmatch" and cfg.method_tau == 0.9
    # overrides win over file values
    cfg2 = harness.parse_config_text(text, overrides=[("method_tau", "0.5")])
    assert cfg2.method_tau == 0.5


def test_config_validation_applies():
    with pytest.raises(ConfigError, match="E_max"):
        harness.parse_config_text("run.E_max = 0\n")


def test_inverse_frequency_resample_mode(tmp_path):
    # labeled pool counts are (3, 2, 1); after the first refresh the mean raw
    # weight per class must be exactly 1/count
    cfg = tiny_config(E_max=4, resample_refresh_epochs=2)
    cfg = harness.ExperimentConfig(
        run=cfg.run.with_overrides(resample_mode="inverse_frequency"),
        dataset=cfg.dataset, method="dyconfid", seeds=(0,))
    harness.run_experiment(cfg, 0, tmp_path / "r")
    lines = (tmp_path / "r" / "sampler.csv").read_text().splitlines()[1:]
    lab = {int(ln.split(",")[2]): float(ln.split(",")[3])
           for ln in lines if ln.startswith("2,labeled,")}
    assert lab[0] == pytest.approx(1 / 3)
    assert lab[1] == pytest.approx(1 / 2)
    assert lab[2] == pytest.approx(1.0)


def test_resample_mode_validated():
    cfg = tiny_config()
    bad = harness.ExperimentConfig(
        run=cfg.run.with_overrides(resample_mode="quantity"),
        dataset=cfg.dataset, method="dyconfid", seeds=(0,))
    with pytest.raises(ConfigError, match="resample_mode"):
        harness.validate_experiment(bad)


def test_run_errors_carry_epoch_context(tmp_path, monkeypatch):
    from dyconfid import model as model_mod

    calls = {"n": 0}
    real = model_mod.sgd_step

    def exploding(params, grads, opt):
        calls["n"] += 1
        if calls["n"] >= 3:  # one step per epoch here, so this is epoch 2
            raise FloatingPointError("synthetic failure")
        return real(params, grads, opt)

    monkeypatch.setattr("dyconfid.harness.model.sgd_step", exploding)
    with pytest.raises(RuntimeError, match="epoch 2"):
        harness.run_experiment(tiny_config(E_max=4), 0, tmp_path / "r")
