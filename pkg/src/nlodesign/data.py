"""Dataset ingestion and synthetic data generation.

A dataset row holds a molecule's group count vectors, its precomputed
third-order descriptor columns (opaque reals), and the DFT property labels
(mu, alpha, HOMO-LUMO gap, beta and ln(beta)).  Files are tab-separated
text with a two-line header; see ``docs/formats.md``.

The beta unit convention inside the logarithm is declared per file:
ln_beta must equal ln(beta_hyp * unit_scale).  The bundled convention for
real corpora uses unit_scale = 1e4 (beta expressed in 1e-34 esu inside the
log); synthetic data uses unit_scale = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .vocab import REGION_NAMES, GroupVocabulary

MAGIC = "#nlodesign-dataset"
FORMAT_VERSION = "1"
LN_BETA_TOL = 1e-9
PROPERTY_NAMES = ("mu", "alpha_pol", "gap", "ln_beta")


@dataclass(frozen=True)
class MoleculeSpec:
    """Per-vocabulary-entry count vectors of one D-pi-A molecule."""

    n_d: tuple[int, ...]
    n_pi: tuple[int, ...]
    n_a: tuple[int, ...]
    n_dpi: tuple[int, ...]
    n_pia: tuple[int, ...]

    def validate(self, vocab: GroupVocabulary, require_dpa: bool = True) -> None:
        widths = vocab.region_widths
        pairs = [
            ("n_d", self.n_d, widths["donors"]),
            ("n_pi", self.n_pi, widths["bridges"]),
            ("n_a", self.n_a, widths["acceptors"]),
            ("n_dpi", self.n_dpi, len(vocab.connectors)),
            ("n_pia", self.n_pia, len(vocab.connectors)),
        ]
        for name, vec, want in pairs:
            if len(vec) != want:
                raise DatasetError(f"{name} has length {len(vec)}, vocabulary wants {want}")
            if any(v < 0 or int(v) != v for v in vec):
                raise DatasetError(f"{name} entries must be non-negative integers: {vec}")
        if require_dpa and not (sum(self.n_d) and sum(self.n_pi) and sum(self.n_a)):
            raise DatasetError(
                "a valid D-pi-A molecule needs at least one donor, bridge and acceptor"
            )

    def scaled(self, k: int) -> "MoleculeSpec":
        return MoleculeSpec(
            tuple(k * v for v in self.n_d),
            tuple(k * v for v in self.n_pi),
            tuple(k * v for v in self.n_a),
            tuple(k * v for v in self.n_dpi),
            tuple(k * v for v in self.n_pia),
        )


@dataclass(frozen=True)
class PropertyRecord:
    """DFT property labels: mu [Debye], alpha [Bohr^3], gap [eV], beta [1e-30 esu]."""

    mu: float
    alpha_pol: float
    gap: float
    beta_hyp: float
    ln_beta: float

    def validate(self, unit_scale: float) -> None:
        if not all(math.isfinite(v) for v in (self.mu, self.alpha_pol, self.gap,
                                              self.beta_hyp, self.ln_beta)):
            raise DatasetError("non-finite property value")
        if self.alpha_pol <= 0:
            raise DatasetError(f"alpha_pol must be > 0, got {self.alpha_pol}")
        if self.gap <= 0:
            raise DatasetError(f"gap must be > 0, got {self.gap}")
        expected = math.log(self.beta_hyp * unit_scale)
        if abs(self.ln_beta - expected) > LN_BETA_TOL:
            raise DatasetError(
                f"ln_beta={self.ln_beta} inconsistent with "
                f"ln(beta_hyp*{unit_scale})={expected}"
            )


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    spec: MoleculeSpec
    f3: tuple[float, ...]
    props: PropertyRecord


@dataclass(frozen=True)
class Dataset:
    records: tuple[DatasetRecord, ...]
    f3_width: int
    unit_scale: float = 1.0
    provenance: str = ""

    def __post_init__(self):
        if not self.records:
            raise DatasetError("dataset must be non-empty")
        for rec in self.records:
            if len(rec.f3) != self.f3_width:
                raise DatasetError(
                    f"record {rec.id}: f3 width {len(rec.f3)} != dataset {self.f3_width}"
                )

    def labels(self, prop: str) -> np.ndarray:
        return np.array([getattr(r.props, prop) for r in self.records])


def _column_names(vocab: GroupVocabulary, f3_width: int) -> list[str]:
    cols = ["id"]
    cols += [f"d:{g.name}" for g in vocab.donors]
    cols += [f"b:{g.name}" for g in vocab.bridges]
    cols += [f"a:{g.name}" for g in vocab.acceptors]
    cols += [f"dc:{c.name}" for c in vocab.connectors]
    cols += [f"ac:{c.name}" for c in vocab.connectors]
    cols += [f"f3:{i}" for i in range(f3_width)]
    cols += ["mu", "alpha", "gap", "beta", "ln_beta"]
    return cols


def load_dataset(path: str | Path, vocab: GroupVocabulary) -> Dataset:
    """Parse a dataset file, validating every record against the vocabulary."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset file {path}: {exc}") from exc
    if len(lines) < 3:
        raise DatasetError(f"{path}: dataset needs a two-line header plus rows")
    head = lines[0].split("\t")
    if head[0] != MAGIC or len(head) < 2 or head[1] != FORMAT_VERSION:
        raise DatasetError(f"{path}: bad magic/version line {lines[0]!r}")
    meta = {}
    for item in head[2:]:
        key, _, value = item.partition("=")
        meta[key] = value
    try:
        f3_width = int(meta["f3_width"])
        unit_scale = float(meta["unit_scale"])
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"{path}: header missing f3_width/unit_scale") from exc
    provenance = meta.get("provenance", "")

    expected_cols = _column_names(vocab, f3_width)
    cols = lines[1].split("\t")
    if cols != expected_cols:
        raise DatasetError(
            f"{path}: column header does not match vocabulary/f3_width "
            f"(expected {len(expected_cols)} columns, got {len(cols)})"
        )
    nd, nb, na = (len(vocab.donors), len(vocab.bridges), len(vocab.acceptors))
    nc = len(vocab.connectors)
    records = []
    for lineno, line in enumerate(lines[2:], 3):
        if not line.strip():
            continue
        f = line.split("\t")
        if len(f) != len(expected_cols):
            raise DatasetError(f"{path}:{lineno}: expected {len(expected_cols)} fields")
        i = 1
        try:
            n_d = tuple(int(v) for v in f[i:i + nd]); i += nd
            n_pi = tuple(int(v) for v in f[i:i + nb]); i += nb
            n_a = tuple(int(v) for v in f[i:i + na]); i += na
            n_dpi = tuple(int(v) for v in f[i:i + nc]); i += nc
            n_pia = tuple(int(v) for v in f[i:i + nc]); i += nc
            f3 = tuple(float(v) for v in f[i:i + f3_width]); i += f3_width
            mu, alpha, gap, beta, ln_beta = (float(v) for v in f[i:i + 5])
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from exc
        spec = MoleculeSpec(n_d, n_pi, n_a, n_dpi, n_pia)
        try:
            spec.validate(vocab)
            props = PropertyRecord(mu, alpha, gap, beta, ln_beta)
            props.validate(unit_scale)
        except DatasetError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from exc
        records.append(DatasetRecord(f[0], spec, f3, props))
    return Dataset(tuple(records), f3_width, unit_scale, provenance)


def serialize_dataset(ds: Dataset, vocab: GroupVocabulary) -> str:
    head = [MAGIC, FORMAT_VERSION, f"f3_width={ds.f3_width}",
            f"unit_scale={ds.unit_scale!r}"]
    if ds.provenance:
        head.append(f"provenance={ds.provenance}")
    lines = ["\t".join(head), "\t".join(_column_names(vocab, ds.f3_width))]
    for rec in ds.records:
        f = [rec.id]
        f += [str(v) for v in (*rec.spec.n_d, *rec.spec.n_pi, *rec.spec.n_a,
                               *rec.spec.n_dpi, *rec.spec.n_pia)]
        f += [repr(float(v)) for v in rec.f3]
        p = rec.props
        f += [repr(float(v))
              for v in (p.mu, p.alpha_pol, p.gap, p.beta_hyp, p.ln_beta)]
        lines.append("\t".join(f))
    return "\n".join(lines) + "\n"


def save_dataset(ds: Dataset, path: str | Path, vocab: GroupVocabulary) -> None:
    Path(path).write_text(serialize_dataset(ds, vocab))


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for a synthetic desk-scale dataset.

    mode "linear" makes every label affine in the assembled feature vector;
    mode "chained" keeps mu/alpha/gap affine but makes ln_beta a nonlinear
    function of those three intermediates, so staged prediction has a real
    structural advantage over a direct model.
    """

    n_records: int
    noise_sigma: float = 0.0
    f3_width: int = 4
    mode: str = "linear"
    lnbeta_range: tuple[float, float] = (0.0, 25.0)
    max_group_count: int = 2
    truth_seed: int = 2024

    def __post_init__(self):
        if self.n_records < 2:
            raise DatasetError("synthetic dataset needs at least 2 records")
        if self.mode not in ("linear", "chained"):
            raise DatasetError(f"unknown synth mode {self.mode!r}")
        if self.noise_sigma < 0:
            raise DatasetError("noise_sigma must be >= 0")


class SynthTruth:
    """The documented ground-truth label function g for synthetic data.

    mu, alpha and gap are affine in the assembled (f1, f2, f3) vector with
    non-negative coefficients, so positivity of alpha/gap holds for any
    non-negative feature vector.  ln_beta composes on top of the three
    intermediates per the configured mode.
    """

    def __init__(self, config: SynthConfig, feature_width: int):
        self.mode = config.mode
        rng = np.random.default_rng(config.truth_seed)
        d = feature_width
        self.w_mu = rng.uniform(0.0, 0.2, d)
        self.w_alpha = rng.uniform(0.0, 0.3, d)
        self.w_gap = rng.uniform(0.0, 0.05, d)
        self.mu0, self.alpha0, self.gap0 = 1.0, 5.0, 1.5

    def intermediates(self, x: np.ndarray) -> tuple[float, float, float]:
        x = np.asarray(x, dtype=float)
        mu = self.mu0 + float(self.w_mu @ x)
        alpha = self.alpha0 + float(self.w_alpha @ x)
        gap = self.gap0 + float(self.w_gap @ x)
        return mu, alpha, gap

    def lnbeta_from_intermediates(self, mu: float, alpha: float, gap: float) -> float:
        if self.mode == "linear":
            return 2.0 + 0.6 * mu + 0.3 * alpha + 0.5 * gap
        return 4.0 + 0.4 * mu + 0.2 * alpha + 8.0 / gap

    def __call__(self, x: np.ndarray) -> tuple[float, float, float, float]:
        mu, alpha, gap = self.intermediates(x)
        return mu, alpha, gap, self.lnbeta_from_intermediates(mu, alpha, gap)


def _random_spec(rng: np.random.Generator, vocab: GroupVocabulary,
                 max_count: int) -> MoleculeSpec:
    def region_counts(n: int) -> tuple[int, ...]:
        counts = [0] * n
        for idx in rng.choice(n, size=int(rng.integers(1, 3)), replace=False):
            counts[int(idx)] = int(rng.integers(1, max_count + 1))
        return tuple(counts)

    nc = len(vocab.connectors)
    dpi = [0] * nc
    pia = [0] * nc
    dpi[int(rng.integers(nc))] = 1
    pia[int(rng.integers(nc))] = 1
    return MoleculeSpec(
        region_counts(len(vocab.donors)),
        region_counts(len(vocab.bridges)),
        region_counts(len(vocab.acceptors)),
        tuple(dpi),
        tuple(pia),
    )


def synth_dataset(config: SynthConfig, vocab: GroupVocabulary, seed: int) -> Dataset:
    """Generate a deterministic synthetic dataset: labels = g(features) + noise."""
    from .features import assemble

    rng = np.random.default_rng(seed)
    lo, hi = config.lnbeta_range
    truth: SynthTruth | None = None
    records = []
    for i in range(config.n_records):
        spec = _random_spec(rng, vocab, config.max_group_count)
        f3 = tuple(float(v) for v in rng.uniform(0.0, 1.0, config.f3_width))
        fv = assemble(spec, vocab, f3)
        if truth is None:
            truth = SynthTruth(config, fv.full.size)
        mu, alpha, gap, lnb = truth(fv.full)
        if config.noise_sigma > 0:
            noise = rng.normal(0.0, config.noise_sigma, 4)
            mu += noise[0]
            alpha = max(alpha + noise[1], 1e-6)
            gap = max(gap + noise[2], 1e-6)
            lnb += noise[3]
        lnb = min(max(lnb, lo), hi)
        props = PropertyRecord(mu, alpha, gap, math.exp(lnb), lnb)
        records.append(DatasetRecord(f"synth-{i:05d}", spec, f3, props))
    return Dataset(tuple(records), config.f3_width, unit_scale=1.0,
                   provenance=f"synthetic mode={config.mode} seed={seed}")


def synth_truth(config: SynthConfig, vocab: GroupVocabulary) -> SynthTruth:
    """The exact label function used by synth_dataset for this config."""
    from .features import assemble

    probe = MoleculeSpec(
        (1,) + (0,) * (len(vocab.donors) - 1),
        (1,) + (0,) * (len(vocab.bridges) - 1),
        (1,) + (0,) * (len(vocab.acceptors) - 1),
        (1,) + (0,) * (len(vocab.connectors) - 1),
        (1,) + (0,) * (len(vocab.connectors) - 1),
    )
    width = assemble(probe, vocab, (0.0,) * config.f3_width).full.size
    return SynthTruth(config, width)
