"""Config-driven experiment runner.

Composes data generation, the classifier, threshold scheduling, pseudo-label
losses, and re-sampling into full training runs. One run is a pure function
of (config, seed): metrics files are byte-identical across repeats.

Methods
-------
dyconfid     dynamic per-class thresholds from class confidence + re-sampling
fixmatch     static threshold tau for every class, strong-view loss
pseudolabel  static threshold, loss on the weak view itself
flexmatch    count-normalized per-class thresholds (curriculum-style baseline)
supervised   labeled data only

Config files are flat ``key = value`` text (``#`` comments); unknown keys are
rejected. See CONFIG_SCHEMA for every key and ``format_config`` for a
round-trippable dump.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import confidence, data, model, pseudolabel, resample
from .core import ConfigError, Instance, RunConfig, validate_config

log = logging.getLogger(__name__)

METHODS = ("dyconfid", "fixmatch", "pseudolabel", "flexmatch", "supervised")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a dataset, a method, run hyperparameters, seeds."""

    run: RunConfig = field(default_factory=RunConfig)
    dataset: data.DatasetSpec = field(default_factory=data.default_spec)
    method: str = "dyconfid"
    method_tau: Optional[float] = None  # static tau for fixmatch/pseudolabel/flexmatch
    pin_class_thresholds: bool = False  # dyconfid ablation: freeze thresholds at tau
    seeds: Tuple[int, ...] = (0,)
    out_dir: str = "runs"
    name: str = ""

    def run_name(self) -> str:
        return self.name or self.method


def validate_experiment(cfg: ExperimentConfig) -> ExperimentConfig:
    validate_config(cfg.run)
    problems = []
    if cfg.method not in METHODS:
        problems.append(f"method: expected one of {METHODS}, got {cfg.method!r}")
    if cfg.run.C != cfg.dataset.C:
        problems.append(f"run.C: {cfg.run.C} does not match dataset class count {cfg.dataset.C}")
    if cfg.method in ("fixmatch", "pseudolabel", "flexmatch"):
        tau = cfg.method_tau if cfg.method_tau is not None else cfg.run.fixed_tau
        if not 0.0 < tau < 1.0:
            problems.append(f"method_tau: static threshold must lie in (0, 1), got {tau}")
    elif cfg.method_tau is not None:
        problems.append(f"method_tau: not applicable to method {cfg.method!r}")
    if cfg.method == "supervised" and cfg.run.resample_enabled:
        problems.append("resample_enabled: supervised method has no confidence state to re-sample from")
    if cfg.pin_class_thresholds and cfg.method != "dyconfid":
        problems.append("pin_class_thresholds: only meaningful for the dyconfid method")
    if not cfg.seeds:
        problems.append("seeds: need at least one seed")
    if problems:
        raise ConfigError(problems)
    return cfg


class ThresholdPolicy:
    """Per-epoch selection thresholds for the active method.

    ``end_epoch`` consumes the finished epoch's confidence state and returns
    the thresholds for the next epoch. ``tau`` is the global bound used for
    logging and for the re-sampler's branch test.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.method = cfg.method
        self.run = cfg.run
        self.static_tau = cfg.method_tau if cfg.method_tau is not None else cfg.run.fixed_tau
        self.pinned = cfg.pin_class_thresholds
        self._flex_sigma = np.zeros(cfg.run.C)
        self._state = confidence.initial_state(cfg.run)

    @property
    def state(self) -> confidence.ClassConfidenceState:
        return self._state

    @property
    def tau(self) -> float:
        if self.method in ("fixmatch", "pseudolabel", "flexmatch"):
            return self.static_tau
        return self._state.threshold

    def start_run(self) -> np.ndarray:
        C = self.run.C
        if self.method in ("fixmatch", "pseudolabel"):
            return np.full(C, self.static_tau)
        if self.method == "flexmatch":
            return np.zeros(C)  # nothing confident yet
        if self.pinned:
            return np.full(C, self.run.fixed_tau)
        return np.asarray(self._state.class_thresholds)

    def observe(self, argmax: np.ndarray, conf: np.ndarray) -> None:
        if self.method == "flexmatch":
            hot = argmax[conf >= self.static_tau]
            if hot.size:
                np.add.at(self._flex_sigma, hot, 1.0)

    def end_epoch(self, state: Optional[confidence.ClassConfidenceState]) -> np.ndarray:
        if state is not None:
            self._state = state
        C = self.run.C
        if self.method in ("fixmatch", "pseudolabel"):
            return np.full(C, self.static_tau)
        if self.method == "flexmatch":
            top = self._flex_sigma.max()
            beta = self._flex_sigma / top if top > 0 else np.zeros(C)
            self._flex_sigma = np.zeros(C)
            return beta / (2.0 - beta) * self.static_tau
        if self.method == "supervised":
            return np.asarray(self._state.class_thresholds)
        if self.pinned:
            return np.full(C, self.run.fixed_tau)
        return np.asarray(self._state.class_thresholds)


def metrics_columns(C: int) -> List[str]:
    cols = ["epoch", "lr", "loss_s", "loss_u", "overall_acc", "mean_class_acc",
            "utilization", "tau"]
    cols += [f"acc_{c}" for c in range(C)]
    cols += [f"P_{c}" for c in range(C)]
    cols += [f"count_{c}" for c in range(C)]
    cols += [f"thr_{c}" for c in range(C)]
    cols += [f"sel_{c}" for c in range(C)]
    return cols


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class RunArtifact:
    """Where a finished run lives on disk, plus its metrics in memory."""

    directory: Path
    config: ExperimentConfig
    seed: int
    columns: List[str]
    rows: List[List[float]]

    @property
    def metrics_path(self) -> Path:
        return self.directory / "metrics.csv"

    def column(self, name: str) -> np.ndarray:
        return np.array([r[self.columns.index(name)] for r in self.rows])

    def final(self, name: str) -> float:
        return self.rows[-1][self.columns.index(name)]


def load_artifact(directory) -> RunArtifact:
    directory = Path(directory)
    lines = (directory / "metrics.csv").read_text().splitlines()
    columns = lines[0].split(",")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    with open(directory / "summary.json") as f:
        summary = json.load(f)
    cfg = config_from_dict(summary["config"])
    return RunArtifact(directory=directory, config=cfg, seed=summary["seed"],
                       columns=columns, rows=rows)


def _eval_test(params, instances: Sequence[Instance], test_idx: Sequence[int], C: int):
    pts = np.stack([instances[i].cloud.points for i in test_idx])
    labels = np.array([instances[i].label for i in test_idx], dtype=np.int64)
    _, probs, _ = model.forward_batch(params, pts)
    pred = probs.argmax(axis=1)
    per_class = np.zeros(C)
    for c in range(C):
        m = labels == c
        per_class[c] = (pred[m] == c).mean() if m.any() else 0.0
    overall = float((pred == labels).mean())
    return overall, per_class


def run_experiment(cfg: ExperimentConfig, seed: int, out_dir=None) -> RunArtifact:
    """Train one seed of one configuration and write its artifact directory:
    metrics.csv (one row per epoch), sampler.csv (refresh log), summary.json,
    checkpoint.npz."""
    validate_experiment(cfg)
    t0 = time.perf_counter()
    run = cfg.run
    C = run.C
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir) / cfg.run_name() / f"seed_{seed}"
    out.mkdir(parents=True, exist_ok=True)

    instances = data.generate(cfg.dataset)
    lab_idx, unl_idx, test_idx = data.split_ids(instances)
    lab_labels = np.array([instances[i].label for i in lab_idx], dtype=np.int64)
    lab_points = np.stack([instances[i].cloud.points for i in lab_idx])
    unl_points = np.stack([instances[i].cloud.points for i in unl_idx]) if unl_idx else None

    params = model.init_params([seed, 0], hidden=run.hidden, n_classes=C)
    opt = model.OptimizerState(lr_initial=run.lr_initial, lr_min=run.lr_min,
                               E_max=run.E_max, momentum=run.momentum)
    rng_lab = np.random.default_rng([seed, 1])
    rng_unl = np.random.default_rng([seed, 2])
    rng_aug = np.random.default_rng([seed, 3])

    lab_sampler = resample.uniform_sampler(np.arange(len(lab_idx)), 0,
                                           run.resample_refresh_epochs, rng_lab)
    use_unlabeled = cfg.method != "supervised" and len(unl_idx) > 0
    unl_sampler = (resample.uniform_sampler(np.arange(len(unl_idx)), 0,
                                            run.resample_refresh_epochs, rng_unl)
                   if use_unlabeled else None)

    policy = ThresholdPolicy(cfg)
    thresholds = policy.start_run()
    muB = run.mu * run.B
    steps = max(1, math.ceil(len(lab_idx) / run.B))

    columns = metrics_columns(C)
    rows: List[List[float]] = []
    sampler_rows: List[str] = ["epoch,pool,class,mean_weight"]

    def dump_sampler(epoch: int, pool: str, classes: np.ndarray, state: resample.SamplerState):
        for c in range(C):
            m = classes == c
            mean_w = float(state.weights[m].mean()) if m.any() else 0.0
            sampler_rows.append(f"{epoch},{pool},{c},{_fmt(mean_w)}")

    epoch_now = 0
    try:
        for e in range(run.E_max):
            epoch_now = e
            opt.epoch = e
            # periodic re-sampler refresh from the latest confidence state
            if (run.resample_enabled and use_unlabeled and e > 0
                    and lab_sampler.due_for_refresh(e)):
                all_idx = lab_idx + unl_idx
                pts = np.stack([instances[i].cloud.points for i in all_idx])
                _, probs_all, _ = model.forward_batch(params, pts)
                confs = probs_all.max(axis=1)
                argm = probs_all.argmax(axis=1)
                n_lab = len(lab_idx)

                def rebuild(ids, classes, conf_slice, rng):
                    if run.resample_mode == "inverse_frequency":
                        return resample.build_inverse_frequency_sampler(
                            ids, classes, C, e, run.resample_refresh_epochs, rng)
                    return resample.build_sampler(ids, classes, conf_slice, policy.state,
                                                  e, run, rng)

                if run.resample_labeled:
                    lab_sampler = rebuild(np.arange(n_lab), lab_labels, confs[:n_lab],
                                          lab_sampler.rng)
                else:
                    lab_sampler = resample.uniform_sampler(np.arange(n_lab), e,
                                                           run.resample_refresh_epochs, lab_sampler.rng)
                if run.resample_unlabeled:
                    unl_sampler = rebuild(np.arange(len(unl_idx)), argm[n_lab:], confs[n_lab:],
                                          unl_sampler.rng)
                else:
                    unl_sampler = resample.uniform_sampler(np.arange(len(unl_idx)), e,
                                                           run.resample_refresh_epochs, unl_sampler.rng)
                dump_sampler(e, "labeled", lab_labels, lab_sampler)
                dump_sampler(e, "unlabeled", argm[n_lab:], unl_sampler)

            accum = confidence.ConfidenceAccumulator(C)
            sel_per_class = np.zeros(C, dtype=np.int64)
            n_sel = 0
            n_unl_preds = 0
            loss_s_sum = 0.0
            loss_u_sum = 0.0

            for _ in range(steps):
                lpick = resample.draw_batch(lab_sampler, run.B)
                weak_lab = model.weak_augment_batch(lab_points[lpick], rng_aug)
                batch = model.BatchLoss(labeled_points=weak_lab, labels=lab_labels[lpick])

                if use_unlabeled:
                    upick = resample.draw_batch(unl_sampler, muB)
                    weak_unl = model.weak_augment_batch(unl_points[upick], rng_aug)
                    _, probs_u, _ = model.forward_batch(params, weak_unl)
                    argm = probs_u.argmax(axis=1)
                    conf = probs_u[np.arange(muB), argm]
                    accum.add(argm, conf)
                    policy.observe(argm, conf)
                    selected = conf >= thresholds[argm]
                    sel_per_class += np.bincount(argm[selected], minlength=C)
                    n_sel += int(selected.sum())
                    n_unl_preds += muB
                    if cfg.method == "pseudolabel":
                        u_view = weak_unl
                    else:
                        u_view = model.strong_augment_batch(unl_points[upick], rng_aug)
                    batch = replace(batch, unlabeled_points=u_view,
                                    pseudo_labels=argm, selected=selected)

                ls, lu, grads = model.loss_and_gradients(params, batch, run.w_s, run.w_u)
                model.sgd_step(params, grads, opt)
                loss_s_sum += ls
                loss_u_sum += lu

            state = accum.finalize(run, e) if (use_unlabeled and accum.total) else None
            thresholds = policy.end_epoch(state)
            st = policy.state

            overall, per_class_acc = _eval_test(params, instances, test_idx, C)
            utilization = n_sel / n_unl_preds if n_unl_preds else 0.0
            losses = pseudolabel.LossBreakdown.compose(
                loss_s_sum / steps, loss_u_sum / steps, run.w_s, run.w_u, n_sel)
            row = [e, opt.lr(), losses.supervised, losses.unsupervised,
                   overall, float(per_class_acc.mean()), utilization, policy.tau]
            row += list(per_class_acc)
            row += list(st.per_class_confidence)
            row += [int(x) for x in st.per_class_count]
            row += list(thresholds)
            row += [int(x) for x in sel_per_class]
            rows.append(row)

    except Exception as exc:
        raise RuntimeError(f"run {cfg.run_name()!r} seed {seed} aborted at epoch {epoch_now}: {exc}") from exc

    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    (out / "sampler.csv").write_text("\n".join(sampler_rows) + "\n")
    model.save_checkpoint(out / "checkpoint.npz", params, opt, run.E_max - 1)

    summary = {
        "config": config_to_dict(cfg),
        "seed": seed,
        "epochs": run.E_max,
        "final_overall_acc": rows[-1][columns.index("overall_acc")],
        "final_mean_class_acc": rows[-1][columns.index("mean_class_acc")],
        "mean_utilization": float(np.mean([r[columns.index("utilization")] for r in rows])),
        "elapsed_seconds": round(time.perf_counter() - t0, 3),
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    log.info("run %s seed %d: overall %.3f mean-class %.3f (%.1fs)",
             cfg.run_name(), seed, summary["final_overall_acc"],
             summary["final_mean_class_acc"], summary["elapsed_seconds"])
    return RunArtifact(directory=out, config=cfg, seed=seed, columns=columns, rows=rows)


def run_all_seeds(cfg: ExperimentConfig, out_dir=None) -> List[RunArtifact]:
    base = Path(out_dir) if out_dir is not None else Path(cfg.out_dir)
    return [run_experiment(cfg, s, base / cfg.run_name() / f"seed_{s}") for s in cfg.seeds]


def compare(configs: Sequence[ExperimentConfig], out_path=None) -> str:
    """Run every config over its seeds and tabulate final accuracies as CSV
    (method, per-seed values, mean +/- std). All configs must share the same
    dataset spec."""
    if len(configs) < 2:
        raise ConfigError(["compare: need at least 2 configurations"])
    ds0 = configs[0].dataset
    for c in configs[1:]:
        if c.dataset != ds0:
            raise ConfigError([f"compare: dataset specs differ between {configs[0].run_name()!r} "
                               f"and {c.run_name()!r}"])
    lines = ["method,seed,overall_acc,mean_class_acc"]
    stats = []
    for cfg in configs:
        arts = run_all_seeds(cfg)
        oa = np.array([a.final("overall_acc") for a in arts])
        ma = np.array([a.final("mean_class_acc") for a in arts])
        for a, o, m in zip(arts, oa, ma):
            lines.append(f"{cfg.run_name()},{a.seed},{_fmt(o)},{_fmt(m)}")
        stats.append((cfg.run_name(), oa, ma))
    lines.append("")
    lines.append("method,overall_mean,overall_std,mean_class_mean,mean_class_std")
    for name, oa, ma in stats:
        lines.append(f"{name},{_fmt(oa.mean())},{_fmt(oa.std())},{_fmt(ma.mean())},{_fmt(ma.std())}")
    table = "\n".join(lines) + "\n"
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(table)
    return table


def pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; NaN when either side has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def correlation_report(artifact: RunArtifact, out_path=None) -> dict:
    """Final-epoch per-class (confidence, test accuracy) pairs and their
    Pearson correlation. Zero-variance cases are reported as undefined."""
    C = artifact.config.run.C
    P = np.array([artifact.final(f"P_{c}") for c in range(C)])
    acc = np.array([artifact.final(f"acc_{c}") for c in range(C)])
    r = pearson_r(P, acc)
    report = {
        "per_class": [{"class": c, "confidence": float(P[c]), "test_accuracy": float(acc[c])}
                      for c in range(C)],
        "pearson_r": None if math.isnan(r) else r,
        "note": "undefined (zero variance)" if math.isnan(r) else "",
    }
    if out_path is not None:
        with open(out_path, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
    return report


# --- config text format --------------------------------------------------------

def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes", "on"):
        return True
    if s.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_int_list(s: str) -> Tuple[int, ...]:
    return tuple(int(x.strip()) for x in s.split(",") if x.strip())


def _parse_float_list(s: str) -> Tuple[float, ...]:
    return tuple(float(x.strip()) for x in s.split(",") if x.strip())


def _parse_str_list(s: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _parse_opt_float(s: str) -> Optional[float]:
    return None if s.strip() in ("", "none") else float(s)


# key -> (parser, target) where target is "cfg", "run", or "dataset"
CONFIG_SCHEMA: Dict[str, tuple] = {
    "method": (str, "cfg"),
    "method_tau": (_parse_opt_float, "cfg"),
    "pin_class_thresholds": (_parse_bool, "cfg"),
    "seeds": (_parse_int_list, "cfg"),
    "out_dir": (str, "cfg"),
    "name": (str, "cfg"),
    "run.C": (int, "run"),
    "run.B": (int, "run"),
    "run.mu": (int, "run"),
    "run.E_max": (int, "run"),
    "run.threshold_mode": (str, "run"),
    "run.fixed_tau": (float, "run"),
    "run.mapping": (str, "run"),
    "run.mapping_constant": (float, "run"),
    "run.comprehensive_constant": (float, "run"),
    "run.resample_enabled": (_parse_bool, "run"),
    "run.resample_mode": (str, "run"),
    "run.resample_refresh_epochs": (int, "run"),
    "run.resample_labeled": (_parse_bool, "run"),
    "run.resample_unlabeled": (_parse_bool, "run"),
    "run.lr_initial": (float, "run"),
    "run.lr_min": (float, "run"),
    "run.momentum": (float, "run"),
    "run.hidden": (int, "run"),
    "run.seed": (int, "run"),
    "run.w_s": (float, "run"),
    "run.w_u": (float, "run"),
    "dataset.primitives": (_parse_str_list, "dataset"),
    "dataset.sigmas": (_parse_float_list, "dataset"),
    "dataset.scale_jitters": (_parse_float_list, "dataset"),
    "dataset.counts": (_parse_int_list, "dataset"),
    "dataset.labeled_fraction": (float, "dataset"),
    "dataset.test_per_class": (int, "dataset"),
    "dataset.points_per_cloud": (int, "dataset"),
    "dataset.seed": (int, "dataset"),
}


def _build_dataset(dvals: dict) -> data.DatasetSpec:
    base = data.default_spec()
    custom_classes = "primitives" in dvals
    prims = dvals.get("primitives", tuple(s.primitive for s in base.class_specs))
    n = len(prims)
    sigmas = dvals.get("sigmas",
                       (0.05,) if custom_classes else tuple(s.noise_sigma for s in base.class_specs))
    jitters = dvals.get("scale_jitters",
                        (0.1,) if custom_classes else tuple(s.scale_jitter for s in base.class_specs))
    if len(jitters) == 1:
        jitters = jitters * n
    if len(sigmas) == 1:
        sigmas = sigmas * n
    if not (n == len(sigmas) == len(jitters)):
        raise ConfigError(["dataset.primitives/sigmas/scale_jitters: lengths differ"])
    specs = tuple(data.ShapeSpec(p, s, j) for p, s, j in zip(prims, sigmas, jitters))
    return data.DatasetSpec(
        class_specs=specs,
        counts=dvals.get("counts", base.counts),
        labeled_fraction=dvals.get("labeled_fraction", base.labeled_fraction),
        test_per_class=dvals.get("test_per_class", base.test_per_class),
        points_per_cloud=dvals.get("points_per_cloud", base.points_per_cloud),
        seed=dvals.get("seed", base.seed),
    )


def parse_config_items(items: Sequence[Tuple[str, str]]) -> ExperimentConfig:
    """Build an ExperimentConfig from (key, value) pairs, applying the schema
    strictly: unknown keys, bad values, and invariant violations all raise
    ConfigError."""
    cfg_vals: dict = {}
    run_vals: dict = {}
    ds_vals: dict = {}
    problems = []
    for key, raw in items:
        if key not in CONFIG_SCHEMA:
            problems.append(f"unknown config key {key!r}")
            continue
        parser, target = CONFIG_SCHEMA[key]
        try:
            val = parser(raw)
        except (ValueError, TypeError) as exc:
            problems.append(f"{key}: {exc}")
            continue
        short = key.split(".", 1)[-1]
        {"cfg": cfg_vals, "run": run_vals, "dataset": ds_vals}[target][short] = val
    if problems:
        raise ConfigError(problems)
    try:
        run = RunConfig(**run_vals)
        dataset = _build_dataset(ds_vals)
        cfg = ExperimentConfig(run=run, dataset=dataset, **cfg_vals)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError([str(exc)]) from exc
    return validate_experiment(cfg)


def parse_config_text(text: str, overrides: Sequence[Tuple[str, str]] = ()) -> ExperimentConfig:
    items: List[Tuple[str, str]] = []
    problems = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, value = stripped.split("=", 1)
        items.append((key.strip(), value.strip()))
    if problems:
        raise ConfigError(problems)
    items.extend(overrides)
    return parse_config_items(items)


def parse_config_file(path, overrides: Sequence[Tuple[str, str]] = ()) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), overrides)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    run = cfg.run
    ds = cfg.dataset
    return {
        "method": cfg.method,
        "method_tau": cfg.method_tau,
        "pin_class_thresholds": cfg.pin_class_thresholds,
        "seeds": list(cfg.seeds),
        "out_dir": cfg.out_dir,
        "name": cfg.name,
        "run": {k: getattr(run, k) for k in (
            "C", "B", "mu", "E_max", "threshold_mode", "fixed_tau", "mapping",
            "mapping_constant", "comprehensive_constant", "resample_enabled",
            "resample_mode", "resample_refresh_epochs", "resample_labeled", "resample_unlabeled",
            "lr_initial", "lr_min", "momentum", "hidden", "seed", "w_s", "w_u")},
        "dataset": {
            "primitives": [s.primitive for s in ds.class_specs],
            "sigmas": [s.noise_sigma for s in ds.class_specs],
            "scale_jitters": [s.scale_jitter for s in ds.class_specs],
            "counts": list(ds.counts),
            "labeled_fraction": ds.labeled_fraction,
            "test_per_class": ds.test_per_class,
            "points_per_cloud": ds.points_per_cloud,
            "seed": ds.seed,
        },
    }


def config_from_dict(d: dict) -> ExperimentConfig:
    ds = d["dataset"]
    specs = tuple(data.ShapeSpec(p, s, j) for p, s, j in
                  zip(ds["primitives"], ds["sigmas"], ds["scale_jitters"]))
    dataset = data.DatasetSpec(
        class_specs=specs, counts=tuple(ds["counts"]),
        labeled_fraction=ds["labeled_fraction"], test_per_class=ds["test_per_class"],
        points_per_cloud=ds["points_per_cloud"], seed=ds["seed"])
    return ExperimentConfig(
        run=RunConfig(**d["run"]), dataset=dataset, method=d["method"],
        method_tau=d["method_tau"], pin_class_thresholds=d["pin_class_thresholds"],
        seeds=tuple(d["seeds"]), out_dir=d["out_dir"], name=d["name"])


def format_config(cfg: ExperimentConfig) -> str:
    """Round-trippable text form of a config (parse_config_text inverse)."""
    d = config_to_dict(cfg)
    out = []

    def emit(key, v):
        if v is None:
            v = "none"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, (list, tuple)):
            v = ", ".join(str(x) for x in v)
        out.append(f"{key} = {v}")

    for k in ("method", "method_tau", "pin_class_thresholds", "seeds", "out_dir", "name"):
        emit(k, d[k])
    for k, v in d["run"].items():
        emit(f"run.{k}", v)
    for k, v in d["dataset"].items():
        emit(f"dataset.{k}", v)
    return "\n".join(out) + "\n"
