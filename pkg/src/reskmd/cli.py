"""Command-line front end: simulate, analyze, roc, run-all.

Binds the simulation, indicator and evaluation layers into reproducible
experiments. Every output is a plain CSV, JSON or SVG file; reruns with
the same config and seed overwrite bit-identically.
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._svg import line_chart
from .config import default_config_text, load_config
from .errors import ConfigurationError, DivergenceError, NumericalInconsistencyError
from .evaluation import (
    ExperimentResult,
    LabeledScores,
    ManifestEntry,
    RunScore,
    read_manifest,
    roc_curve,
    write_manifest,
    write_roc_report,
)
from .indicators import (
    auto_delay_config,
    compute_indicator,
    read_ews_csv,
    save_ews_csv,
    trend_score,
)
from .simulate import RampSchedule, SimConfig, get_system, make_ensemble
from .timeseries import load_csv, save_csv

__all__ = ["main", "cmd_simulate", "cmd_analyze", "cmd_roc", "cmd_run_all"]


def _slug(name):
    return name.replace(":", "-").replace(",", "-")


def cmd_simulate(cfg):
    """Write one trajectory CSV per run plus the ensemble manifest."""
    outdir = Path(cfg.outdir)
    runs_dir = outdir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    system = get_system(cfg.system)
    ramp = RampSchedule(beta0=cfg.beta0, rate=0.0, t_end=cfg.t_end, clamp=cfg.clamp)
    sim_cfg = SimConfig(
        x0=cfg.x0,
        dt=cfg.dt,
        sample_every=cfg.sample_every,
        sigma=cfg.sigma,
        seed=cfg.seed,
    )
    rates = cfg.tipping_rates()
    members = []
    if rates:
        members += make_ensemble(system, ramp, rates, 1, sim_cfg)
    if cfg.n_null:
        null_cfg = SimConfig(
            x0=cfg.x0,
            dt=cfg.dt,
            sample_every=cfg.sample_every,
            sigma=cfg.sigma,
            seed=cfg.seed + 1,
        )
        nulls = make_ensemble(system, ramp, [0.0], cfg.n_null, null_cfg)
        # re-key null run ids to follow the tipping block
        members += [
            replace(m, run_id=f"{system.name}-{len(rates) + i:03d}")
            for i, m in enumerate(nulls)
        ]
    entries = []
    labels = ["x", "y"][: system.dim]
    for member in members:
        rel = f"runs/{member.run_id}.csv"
        save_csv(member.series, outdir / rel, labels=labels)
        entries.append(
            ManifestEntry(
                run_id=member.run_id,
                rate=member.rate,
                seed=member.seed,
                tipping=member.tipping,
                path=rel,
            )
        )
    manifest_path = outdir / "manifest.csv"
    write_manifest(entries, manifest_path)
    print(f"wrote {len(entries)} runs and {manifest_path}")
    return manifest_path


def _analyze_one(args):
    entry_id, path, names, delay_kwargs, rank = args
    series = load_csv(path, time_column=0)
    cfg = auto_delay_config(series.n_samples, **delay_kwargs)
    traces = {}
    for name in names:
        traces[name] = compute_indicator(name, series, cfg, rank=rank)
    return entry_id, traces


def cmd_analyze(cfg, manifest_path=None):
    """Compute every configured indicator trace for every run."""
    outdir = Path(cfg.outdir)
    manifest_path = Path(manifest_path or outdir / "manifest.csv")
    entries = sorted(read_manifest(manifest_path), key=lambda e: e.run_id)
    ews_dir = outdir / "ews"
    ews_dir.mkdir(parents=True, exist_ok=True)
    names = cfg.indicator_names()
    delay_kwargs = {
        "t_window": cfg.t_window,
        "d_hankel": cfg.d_hankel,
        "stride": cfg.stride,
        "max_windows": cfg.max_windows,
    }
    tasks = [
        (
            e.run_id,
            manifest_path.parent / e.path,
            names,
            delay_kwargs,
            cfg.rank,
        )
        for e in entries
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_analyze_one, tasks))
    else:
        results = [_analyze_one(t) for t in tasks]
    count = 0
    for run_id, traces in sorted(results, key=lambda r: r[0]):
        for name in names:
            save_ews_csv(traces[name], ews_dir / f"{run_id}__{_slug(name)}.csv")
            count += 1
    print(f"wrote {count} indicator traces to {ews_dir}")
    return ews_dir


def cmd_roc(cfg, manifest_path=None):
    """Score analyzed traces, build per-indicator ROC curves and plots."""
    outdir = Path(cfg.outdir)
    manifest_path = Path(manifest_path or outdir / "manifest.csv")
    entries = sorted(read_manifest(manifest_path), key=lambda e: e.run_id)
    names = cfg.indicator_names()
    if not names:
        raise ConfigurationError("no indicators configured")
    ews_dir = outdir / "ews"
    result = ExperimentResult(missing={n: 0 for n in names})
    traces = {name: [] for name in names}
    for entry in entries:
        for name in names:
            path = ews_dir / f"{entry.run_id}__{_slug(name)}.csv"
            try:
                trace = read_ews_csv(path)
                score = trend_score(trace)
            except (OSError, ValueError) as exc:
                print(f"warning: {entry.run_id}/{name} missing ({exc})",
                      file=sys.stderr)
                result.missing[name] += 1
                continue
            result.scores.append(
                RunScore(
                    entry.run_id,
                    name,
                    entry.tipping,
                    score.score,
                    float(trace.values[-1]),
                )
            )
            traces[name].append((entry, trace))
    for name in names:
        pos = [s.score for s in result.scores if s.indicator == name and s.tipping]
        neg = [s.score for s in result.scores if s.indicator == name and not s.tipping]
        if not pos or not neg:
            raise ConfigurationError(
                f"indicator {name}: need scores from both classes"
            )
        result.curves[name] = roc_curve(
            LabeledScores(np.asarray(pos), np.asarray(neg)), indicator=name
        )

    roc_dir = outdir / "roc"
    summary = write_roc_report(result, roc_dir)
    _write_scores_csv(result, outdir / "scores.csv")
    traces_dir = outdir / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        curve = result.curves[name]
        line_chart(
            roc_dir / f"{_slug(name)}.svg",
            [
                (f"AUC={curve.auc:.3f}", curve.points[:, 0], curve.points[:, 1]),
                ("chance", [0.0, 1.0], [0.0, 1.0]),
            ],
            title=f"ROC: {name}",
            xlabel="false positive rate",
            ylabel="true positive rate",
        )
        line_chart(
            traces_dir / f"{_slug(name)}.svg",
            [
                ("tipping" if entry.tipping else "null", trace.times, trace.values)
                for entry, trace in traces[name]
            ],
            title=name,
            xlabel="time",
            ylabel="indicator value",
        )
    for name in sorted(summary):
        print(f"{name}: auc={summary[name]['auc']:.4f} "
              f"({summary[name]['n_pos']} pos / {summary[name]['n_neg']} neg, "
              f"{summary[name]['missing']} missing)")
    return summary


def _write_scores_csv(result, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("run_id,indicator,label,trend_score,terminal_value\n")
        rows = sorted(result.scores, key=lambda s: (s.indicator, s.run_id))
        for s in rows:
            fh.write(
                f"{s.run_id},{s.indicator},"
                f"{'tipping' if s.tipping else 'null'},"
                f"{float(s.score)!r},{float(s.terminal_value)!r}\n"
            )


def cmd_run_all(cfg):
    manifest = cmd_simulate(cfg)
    cmd_analyze(cfg, manifest)
    return cmd_roc(cfg, manifest)


_ERROR_CODES = {
    ConfigurationError: (2, "configuration error"),
    OSError: (3, "i/o error"),
    DivergenceError: (4, "divergence"),
    NumericalInconsistencyError: (4, "numerical inconsistency"),
    ValueError: (2, "invalid input"),
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="reskmd",
        description="Koopman-residual early warning signals: simulate, "
        "analyze, evaluate.",
    )
    parser.add_argument("--config", "-c", default=None, help="config file (INI)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config key (repeatable)",
    )
    parser.add_argument("--outdir", default=None, help="override output.directory")
    parser.add_argument("--seed", type=int, default=None, help="override simulate.seed")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="generate the labeled ensemble")
    p_analyze = sub.add_parser("analyze", help="compute indicator traces")
    p_analyze.add_argument("--manifest", default=None)
    p_roc = sub.add_parser("roc", help="build ROC curves from analyzed traces")
    p_roc.add_argument("--manifest", default=None)
    sub.add_parser("run-all", help="simulate, analyze and evaluate in one go")
    sub.add_parser("print-config", help="print the default config file")

    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.outdir is not None:
        overrides.append(f"output.directory={args.outdir}")
    if args.seed is not None:
        overrides.append(f"simulate.seed={args.seed}")
    try:
        if args.command == "print-config":
            print(default_config_text())
            return 0
        cfg = load_config(args.config, overrides)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "analyze":
            cmd_analyze(cfg, args.manifest)
        elif args.command == "roc":
            cmd_roc(cfg, args.manifest)
        elif args.command == "run-all":
            cmd_run_all(cfg)
        return 0
    except Exception as exc:  # noqa: BLE001 - single exit point for categorization
        for klass, (code, category) in _ERROR_CODES.items():
            if isinstance(exc, klass):
                print(f"{category}: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
