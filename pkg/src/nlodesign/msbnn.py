"""Four-stage chained property predictor.

Stages 1-3 map the feature vector to mu, alpha and the HOMO-LUMO gap;
stage 4 maps the feature vector plus those three intermediates (appended
in the order alpha, gap, mu) to ln(beta).  Stage 4 is trained with
ground-truth intermediates (teacher forcing) by default; inference always
chains the predicted intermediates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bnn
from .data import Dataset
from .errors import DataError
from .features import FeatureVector, Tier, assemble

COMPOSITE_FORMAT = "nlodesign-msbnn-1"
STAGE_NAMES = ("mu", "alpha", "gap", "lnbeta")


@dataclass(frozen=True)
class Prediction:
    mu: float
    alpha_pol: float
    gap: float
    ln_beta: float


@dataclass
class MsbnnModel:
    stage_mu: bnn.BnnModel
    stage_alpha: bnn.BnnModel
    stage_gap: bnn.BnnModel
    stage_lnbeta: bnn.BnnModel
    tier: Tier
    feature_width: int
    f3_width: int

    def stages(self) -> dict[str, bnn.BnnModel]:
        return {"mu": self.stage_mu, "alpha": self.stage_alpha,
                "gap": self.stage_gap, "lnbeta": self.stage_lnbeta}


def dataset_features(ds: Dataset, vocab, tier: Tier) -> np.ndarray:
    """Assembled feature matrix for every record of a dataset at one tier."""
    if tier == Tier.CLGC and ds.f3_width == 0:
        raise DataError("cLGC tier requested but the dataset has no f3 columns")
    rows = []
    for rec in ds.records:
        f3 = rec.f3 if tier == Tier.CLGC else None
        rows.append(assemble(rec.spec, vocab, f3).full)
    return np.array(rows)


def train_msbnn(ds: Dataset, vocab, tier: Tier,
                cfg: bnn.TrainConfig = bnn.TrainConfig(),
                train_idx=None, teacher_forcing: bool = True) -> MsbnnModel:
    """Train the four stages on the given rows (all rows when train_idx is None).

    teacher_forcing False feeds stage 4 with the chained stage-1..3
    predictions during training instead of the ground-truth intermediates.
    """
    tier = Tier(tier)
    x_all = dataset_features(ds, vocab, tier)
    if train_idx is None:
        train_idx = np.arange(len(ds.records))
    train_idx = np.asarray(train_idx, dtype=int)
    x = x_all[train_idx]
    labels = {name: ds.labels(prop)[train_idx]
              for name, prop in zip(STAGE_NAMES, ("mu", "alpha_pol", "gap", "ln_beta"))}

    stage_models: dict[str, bnn.BnnModel] = {}
    for i, name in enumerate(("mu", "alpha", "gap")):
        stage_models[name] = bnn.train(
            x, labels[name], _stage_cfg(cfg, offset=i))
    if teacher_forcing:
        inter = np.column_stack([labels["alpha"], labels["gap"], labels["mu"]])
    else:
        inter = np.column_stack([
            bnn.predict(stage_models["alpha"], x)[:, 0],
            bnn.predict(stage_models["gap"], x)[:, 0],
            bnn.predict(stage_models["mu"], x)[:, 0],
        ])
    x4 = np.hstack([x, inter])
    stage_models["lnbeta"] = bnn.train(x4, labels["lnbeta"], _stage_cfg(cfg, offset=3))
    return MsbnnModel(stage_models["mu"], stage_models["alpha"], stage_models["gap"],
                      stage_models["lnbeta"], tier, x_all.shape[1],
                      ds.f3_width if tier == Tier.CLGC else 0)


def _stage_cfg(cfg: bnn.TrainConfig, offset: int) -> bnn.TrainConfig:
    # distinct seeds per stage so the four nets start independently
    return bnn.TrainConfig(
        max_iterations=cfg.max_iterations,
        lm_damping_init=cfg.lm_damping_init,
        lm_damping_factor=cfg.lm_damping_factor,
        lm_damping_ceiling=cfg.lm_damping_ceiling,
        objective_tolerance=cfg.objective_tolerance,
        seed=cfg.seed * 4 + offset,
        hidden_sizes=cfg.hidden_sizes,
        bayesian=cfg.bayesian,
        alpha_init=cfg.alpha_init,
        beta_init=cfg.beta_init,
    )


def predict(model: MsbnnModel, fv: FeatureVector) -> Prediction:
    """Chained inference: ln(beta) sees the *predicted* intermediates."""
    if fv.tier != model.tier:
        raise DataError(f"feature tier {fv.tier.value} != model tier {model.tier.value}")
    x = fv.full
    if x.size != model.feature_width:
        raise DataError(f"feature width {x.size} != model width {model.feature_width}")
    mu = float(bnn.forward(model.stage_mu, x)[0])
    alpha = float(bnn.forward(model.stage_alpha, x)[0])
    gap = float(bnn.forward(model.stage_gap, x)[0])
    x4 = np.concatenate([x, [alpha, gap, mu]])
    ln_beta = float(bnn.forward(model.stage_lnbeta, x4)[0])
    return Prediction(mu, alpha, gap, ln_beta)


def predict_batch(model: MsbnnModel, x: np.ndarray) -> np.ndarray:
    """Chained inference over a feature matrix; columns (mu, alpha, gap, ln_beta)."""
    x = np.atleast_2d(x)
    if x.shape[1] != model.feature_width:
        raise DataError(f"feature width {x.shape[1]} != model width {model.feature_width}")
    mu = bnn.predict(model.stage_mu, x)[:, 0]
    alpha = bnn.predict(model.stage_alpha, x)[:, 0]
    gap = bnn.predict(model.stage_gap, x)[:, 0]
    x4 = np.hstack([x, np.column_stack([alpha, gap, mu])])
    ln_beta = bnn.predict(model.stage_lnbeta, x4)[:, 0]
    return np.column_stack([mu, alpha, gap, ln_beta])


def model_to_dict(model: MsbnnModel) -> dict:
    return {
        "format": COMPOSITE_FORMAT,
        "tier": model.tier.value,
        "feature_width": model.feature_width,
        "f3_width": model.f3_width,
        "stages": {name: bnn.model_to_dict(m) for name, m in model.stages().items()},
    }


def model_from_dict(d: dict) -> MsbnnModel:
    if d.get("format") != COMPOSITE_FORMAT:
        raise DataError(f"unsupported composite model format {d.get('format')!r}")
    stages = {name: bnn.model_from_dict(sd) for name, sd in d["stages"].items()}
    return MsbnnModel(stages["mu"], stages["alpha"], stages["gap"], stages["lnbeta"],
                      Tier(d["tier"]), int(d["feature_width"]), int(d["f3_width"]))


def save_msbnn(model: MsbnnModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1))


def load_msbnn(path: str | Path) -> MsbnnModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load composite model from {path}: {exc}") from exc
