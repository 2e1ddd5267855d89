"""ROC analysis of labeled detection-score ensembles.

Thresholds sweep the observed score values (exact, resolution-free
curves); ties collapse to a single diagonal segment so the trapezoid area
equals the Mann-Whitney statistic with half credit for ties. The curve is
invariant under strictly increasing transforms of the scores.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import as_vector
from .errors import ConfigurationError
from .indicators import (
    auto_delay_config,
    compute_indicator,
    kernel_indicator_name,
    trend_score,
)
from .timeseries import load_csv

__all__ = [
    "LabeledScores",
    "RocCurve",
    "roc_curve",
    "ManifestEntry",
    "read_manifest",
    "write_manifest",
    "RunScore",
    "ExperimentResult",
    "run_experiment",
    "write_roc_report",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledScores:
    """Detection scores split by ground-truth label."""

    positives: np.ndarray  # scores from tipping runs
    negatives: np.ndarray  # scores from non-tipping runs

    def __post_init__(self):
        object.__setattr__(self, "positives", as_vector(self.positives, "positives"))
        object.__setattr__(self, "negatives", as_vector(self.negatives, "negatives"))


@dataclass(frozen=True)
class RocCurve:
    """(FPR, TPR) sweep with its trapezoidal area.

    ``thresholds`` aligns with ``points``; the leading point (0, 0)
    carries threshold +inf.
    """

    indicator: str
    thresholds: np.ndarray
    points: np.ndarray
    auc: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be (K, 2)")
        if np.any(np.diff(pts, axis=0) < 0):
            raise ValueError("fpr and tpr must be nondecreasing")
        if not (np.all(pts[0] == 0.0) and np.all(pts[-1] == 1.0)):
            raise ValueError("curve must run from (0,0) to (1,1)")
        area = float(np.trapezoid(pts[:, 1], pts[:, 0]))
        if abs(area - self.auc) > 1e-12:
            raise ValueError("auc must equal the trapezoidal area of points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "thresholds", np.asarray(self.thresholds, float))


def roc_curve(scores, indicator=""):
    """Exact ROC curve and AUC for one labeled score set."""
    pos, neg = scores.positives, scores.negatives
    if pos.size == 0 or neg.size == 0:
        raise ConfigurationError("ROC needs at least one score in each class")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tpr = [0.0]
    fpr = [0.0]
    for th in thresholds:
        tpr.append(np.mean(pos >= th))
        fpr.append(np.mean(neg >= th))
    points = np.column_stack([fpr, tpr])
    auc = float(np.trapezoid(points[:, 1], points[:, 0]))
    return RocCurve(
        indicator=indicator,
        thresholds=np.concatenate([[np.inf], thresholds]),
        points=points,
        auc=auc,
    )


@dataclass(frozen=True)
class ManifestEntry:
    """One row of the ensemble index."""

    run_id: str
    rate: float
    seed: int
    tipping: bool
    path: str


def write_manifest(entries, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "rate", "seed", "label", "path"])
        for e in entries:
            writer.writerow(
                [
                    e.run_id,
                    repr(float(e.rate)),
                    e.seed,
                    "tipping" if e.tipping else "null",
                    e.path,
                ]
            )


def read_manifest(path):
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            entries.append(
                ManifestEntry(
                    run_id=row["run_id"],
                    rate=float(row["rate"]),
                    seed=int(row["seed"]),
                    tipping=row["label"] == "tipping",
                    path=row["path"],
                )
            )
    if not entries:
        raise ConfigurationError(f"{path}: empty manifest")
    return entries


@dataclass(frozen=True)
class RunScore:
    """Per-(run, indicator) detection score cell."""

    run_id: str
    indicator: str
    tipping: bool
    score: float
    terminal_value: float


@dataclass
class ExperimentResult:
    curves: dict = field(default_factory=dict)
    scores: list = field(default_factory=list)
    missing: dict = field(default_factory=dict)


def run_experiment(manifest, indicators, cfg=None, kernels=(), rank=None,
                   base_dir=None, delay_overrides=None):
    """Score every run under every indicator and assemble per-indicator ROCs.

    ``manifest`` is a path to an ensemble index or a list of
    :class:`ManifestEntry`. ``kernels`` appends one kernel-residual
    indicator per entry. Unreadable runs are skipped with a logged reason;
    an indicator failing on one run leaves that cell missing and the curve
    is computed over the remaining runs with a completeness warning.
    """
    if isinstance(manifest, (str, Path)):
        base_dir = Path(manifest).parent if base_dir is None else Path(base_dir)
        entries = read_manifest(manifest)
    else:
        entries = list(manifest)
        base_dir = Path(base_dir) if base_dir is not None else Path(".")
    names = list(indicators) + [kernel_indicator_name(k) for k in kernels]
    if not names:
        raise ConfigurationError("no indicators configured")

    result = ExperimentResult(missing={name: 0 for name in names})
    for entry in sorted(entries, key=lambda e: e.run_id):
        try:
            series = load_csv(base_dir / entry.path, time_column=0)
        except (OSError, ValueError) as exc:
            logger.warning("run %s skipped: %s", entry.run_id, exc)
            for name in names:
                result.missing[name] += 1
            continue
        run_cfg = cfg
        if run_cfg is None:
            over = delay_overrides or {}
            run_cfg = auto_delay_config(series.n_samples, **over)
        for name in names:
            try:
                trace = compute_indicator(name, series, run_cfg, rank=rank)
                score = trend_score(trace)
                terminal = float(trace.values[-1])
            except (ValueError, RuntimeError) as exc:
                logger.warning(
                    "indicator %s failed on run %s: %s", name, entry.run_id, exc
                )
                result.missing[name] += 1
                continue
            result.scores.append(
                RunScore(entry.run_id, name, entry.tipping, score.score, terminal)
            )

    for name in names:
        pos = [s.score for s in result.scores if s.indicator == name and s.tipping]
        neg = [s.score for s in result.scores if s.indicator == name and not s.tipping]
        if result.missing[name]:
            logger.warning(
                "indicator %s: %d missing cells, ROC over remaining runs",
                name,
                result.missing[name],
            )
        if not pos or not neg:
            raise ConfigurationError(
                f"indicator {name}: need scores from both classes "
                f"(got {len(pos)} tipping, {len(neg)} null)"
            )
        result.curves[name] = roc_curve(
            LabeledScores(np.asarray(pos), np.asarray(neg)), indicator=name
        )
    return result


def _slug(name):
    return name.replace(":", "-").replace(",", "-")


def write_roc_report(result, outdir):
    """One ``threshold,fpr,tpr`` CSV per indicator plus a summary JSON."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name in sorted(result.curves):
        curve = result.curves[name]
        with open(outdir / f"{_slug(name)}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            fh.write("threshold,fpr,tpr\n")
            for th, (fpr, tpr) in zip(curve.thresholds, curve.points):
                th_repr = "inf" if np.isinf(th) else repr(float(th))
                fh.write(f"{th_repr},{float(fpr)!r},{float(tpr)!r}\n")
        n_pos = sum(1 for s in result.scores if s.indicator == name and s.tipping)
        n_neg = sum(1 for s in result.scores if s.indicator == name and not s.tipping)
        summary[name] = {
            "auc": curve.auc,
            "n_pos": n_pos,
            "n_neg": n_neg,
            "missing": result.missing.get(name, 0),
        }
    with open(outdir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
