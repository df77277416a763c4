"""Command-line entry point.

Subcommands: ``generate`` (dataset file from a config), ``train`` (one run or
all configured seeds), ``compare`` (grid over configs), ``report``
(correlation + SVG plots from finished runs).

Exit codes: 0 success, 2 configuration error, 3 runtime error. Set
DYCONFID_LOG to debug/info/warning/error to control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import data, harness, plots
from .core import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _setup_logging() -> None:
    level = os.environ.get("DYCONFID_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _split_overrides(pairs):
    out = []
    for p in pairs or ():
        if "=" not in p:
            raise ConfigError([f"--set expects key=value, got {p!r}"])
        k, v = p.split("=", 1)
        out.append((k.strip(), v.strip()))
    return out


def _load_config(args) -> harness.ExperimentConfig:
    overrides = _split_overrides(getattr(args, "set", None))
    if getattr(args, "method", None):
        overrides.append(("method", args.method))
    if getattr(args, "out", None):
        overrides.append(("out_dir", str(args.out)))
    if getattr(args, "seed", None) is not None:
        overrides.append(("seeds", str(args.seed)))
    if args.config:
        return harness.parse_config_file(args.config, overrides)
    return harness.parse_config_items(overrides)


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    instances = data.generate(cfg.dataset)
    out = Path(args.dataset_out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data.save_dataset(out, instances)
    print(f"wrote {len(instances)} instances to {out}")
    if args.text:
        data.export_text(args.text, instances)
        print(f"wrote text export to {args.text}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config(args)
    artifacts = harness.run_all_seeds(cfg)
    for a in artifacts:
        print(f"{cfg.run_name()} seed {a.seed}: overall_acc={a.final('overall_acc'):.4f} "
              f"mean_class_acc={a.final('mean_class_acc'):.4f} -> {a.directory}")
    return EXIT_OK


def cmd_compare(args) -> int:
    overrides = _split_overrides(args.set)
    if args.out:
        overrides.append(("out_dir", str(args.out)))
    configs = [harness.parse_config_file(p, overrides) for p in args.config]
    out_path = Path(args.out or "runs") / "comparison.csv"
    table = harness.compare(configs, out_path)
    print(table, end="")
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    artifacts = [harness.load_artifact(d) for d in args.run]
    out = Path(args.out or "report")
    out.mkdir(parents=True, exist_ok=True)
    for a in artifacts:
        rep = harness.correlation_report(a, out / f"correlation_{a.config.run_name()}_s{a.seed}.json")
        r = rep["pearson_r"]
        print(f"{a.directory}: pearson_r={'undefined' if r is None else f'{r:.4f}'}")
    for p in plots.emit_plots(artifacts, out):
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dyconfid",
                                 description="Confidence-driven semi-supervised training experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_method=True):
        p.add_argument("--config", type=Path, help="config file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
        p.add_argument("--out", type=Path, help="output directory override")
        if with_method:
            p.add_argument("--method", choices=harness.METHODS, help="method override")

    g = sub.add_parser("generate", help="generate a dataset file from a config")
    common(g)
    g.add_argument("--dataset-out", type=Path, required=True, help="dataset container path")
    g.add_argument("--text", type=Path, help="also write a plain-text export")
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="train one configuration")
    common(t)
    t.set_defaults(fn=cmd_train)

    c = sub.add_parser("compare", help="run and tabulate several configurations")
    c.add_argument("--config", type=Path, action="append", required=True,
                   help="config file (repeat for each method)")
    c.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override applied to every config")
    c.add_argument("--out", type=Path, help="output directory")
    c.set_defaults(fn=cmd_compare)

    r = sub.add_parser("report", help="correlation report + SVG plots for finished runs")
    r.add_argument("--run", type=Path, action="append", required=True,
                   help="run directory (repeatable)")
    r.add_argument("--out", type=Path, help="report output directory")
    r.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (data.DatasetFormatError, OSError, ValueError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
