"""Error metrics and the repeated random-split evaluation protocol.

MAE/MSE/MRE are the plain per-sample means; R is the Pearson coefficient
(undefined when either vector has zero variance, reported as a flagged NaN
and excluded from protocol means).  MRE is stored as a fraction and only
rendered as a percentage in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import bnn, msbnn
from .data import Dataset
from .errors import DataError
from .features import Tier

PROTOCOL_PROPERTIES = ("mu", "alpha", "gap", "ln_beta")


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mre: float
    mse: float
    r: float
    r2: float
    n: int
    r_defined: bool = True


def metrics(pred, truth) -> MetricsReport:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise DataError("metrics needs two equal-length nonzero 1-D vectors")
    if np.any(truth == 0):
        raise DataError("MRE is undefined: truth contains a zero entry")
    err = truth - pred
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err ** 2))
    mre = float(np.mean(np.abs(err / truth)))
    sp = pred - pred.mean()
    st = truth - truth.mean()
    denom = math.sqrt(float(sp @ sp) * float(st @ st))
    if denom == 0.0:
        return MetricsReport(mae, mre, mse, float("nan"), float("nan"),
                             pred.size, r_defined=False)
    r = float((sp @ st) / denom)
    return MetricsReport(mae, mre, mse, r, r * r, pred.size)


@dataclass(frozen=True)
class SplitResult:
    seed: int
    train: dict[str, MetricsReport]
    test: dict[str, MetricsReport]


@dataclass(frozen=True)
class SplitProtocolReport:
    per_split: tuple[SplitResult, ...]
    mean_train: dict[str, MetricsReport]
    mean_test: dict[str, MetricsReport]
    n_splits: int
    test_fraction: float
    undefined_r_splits: dict[str, int]


def _mean_reports(reports: list[dict[str, MetricsReport]]):
    """Arithmetic mean per property; splits with undefined R are excluded
    from the R/R2 means only."""
    means: dict[str, MetricsReport] = {}
    undefined: dict[str, int] = {}
    for prop in PROTOCOL_PROPERTIES:
        rs = [rep[prop] for rep in reports]
        defined = [m for m in rs if m.r_defined]
        undefined[prop] = len(rs) - len(defined)
        r = float(np.mean([m.r for m in defined])) if defined else float("nan")
        r2 = float(np.mean([m.r2 for m in defined])) if defined else float("nan")
        means[prop] = MetricsReport(
            mae=float(np.mean([m.mae for m in rs])),
            mre=float(np.mean([m.mre for m in rs])),
            mse=float(np.mean([m.mse for m in rs])),
            r=r, r2=r2,
            n=int(round(float(np.mean([m.n for m in rs])))),
            r_defined=bool(defined),
        )
    return means, undefined


def split_indices(n: int, test_fraction: float, seed: int):
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n - n_test < 2:
        raise DataError(
            f"degenerate split: n={n}, test_fraction={test_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[n_test:], perm[:n_test]


def repeated_split_eval(ds: Dataset, vocab, tier: Tier,
                        cfg: bnn.TrainConfig = bnn.TrainConfig(),
                        n_splits: int = 100, test_fraction: float = 0.2,
                        base_seed: int = 0) -> SplitProtocolReport:
    """Average metrics over repeated seeded random train/test splits.

    Split i uses the derived seed base_seed + i for both the shuffle and
    the training run, so parallel and serial execution agree exactly.
    """
    if n_splits < 1:
        raise DataError("n_splits must be >= 1")
    tier = Tier(tier)
    x_all = msbnn.dataset_features(ds, vocab, tier)
    labels = {prop: ds.labels(col) for prop, col in
              zip(PROTOCOL_PROPERTIES, ("mu", "alpha_pol", "gap", "ln_beta"))}
    n = len(ds.records)
    per_split = []
    for i in range(n_splits):
        seed = base_seed + i
        tr, te = split_indices(n, test_fraction, seed)
        split_cfg = replace(cfg, seed=cfg.seed + i)
        model = msbnn.train_msbnn(ds, vocab, tier, split_cfg, train_idx=tr)
        side = {}
        for name, idx in (("train", tr), ("test", te)):
            pred = msbnn.predict_batch(model, x_all[idx])
            side[name] = {
                prop: metrics(pred[:, j], labels[prop][idx])
                for j, prop in enumerate(PROTOCOL_PROPERTIES)
            }
        per_split.append(SplitResult(seed, side["train"], side["test"]))
    mean_train, _ = _mean_reports([s.train for s in per_split])
    mean_test, undefined = _mean_reports([s.test for s in per_split])
    return SplitProtocolReport(tuple(per_split), mean_train, mean_test,
                               n_splits, test_fraction, undefined)


def format_report(report: SplitProtocolReport) -> str:
    """Delimited text table (one row per property and side), MRE shown as %."""
    lines = ["side\tproperty\tMAE\tMRE%\tMSE\tR\tR2\tn"]
    for side, means in (("test", report.mean_test), ("train", report.mean_train)):
        for prop in PROTOCOL_PROPERTIES:
            m = means[prop]
            lines.append(
                f"{side}\t{prop}\t{m.mae:.6g}\t{100 * m.mre:.6g}\t{m.mse:.6g}\t"
                f"{m.r:.6g}\t{m.r2:.6g}\t{m.n}")
    lines.append(f"# n_splits={report.n_splits} test_fraction={report.test_fraction}")
    return "\n".join(lines) + "\n"
