"""Lewis-mode group-contribution encoders.

Tier-1 features are the raw count vectors; tier-2 features are conjugation
degrees plus count-weighted second-order descriptors; tier-3 descriptors
are ingested from the dataset, never computed here.  All functions are
pure and operate on immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import MoleculeSpec
from .errors import DataError
from .vocab import REGION_NAMES, GroupVocabulary


class Tier(str, Enum):
    LGC = "lgc"
    CLGC = "clgc"


@dataclass(frozen=True)
class ConjugationSummary:
    """Conjugation degrees of the bridge, donor and acceptor parts and their sum."""

    c_pi: float
    c_d: float
    c_a: float
    c_total: float


@dataclass(frozen=True)
class SecondOrderFeatures:
    """Whole-molecule descriptor and sub-group count vectors.

    Region slices are concatenated acceptors-first (acceptors, bridges,
    donors), matching the order the predictor was trained with.
    """

    n_des: np.ndarray
    n_g: np.ndarray


@dataclass(frozen=True)
class FeatureVector:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray | None
    tier: Tier

    @property
    def full(self) -> np.ndarray:
        parts = [self.f1, self.f2]
        if self.f3 is not None:
            parts.append(self.f3)
        return np.concatenate(parts)


def _counts(spec: MoleculeSpec, vocab: GroupVocabulary) -> dict[str, np.ndarray]:
    widths = vocab.region_widths
    vecs = {
        "donors": np.asarray(spec.n_d, dtype=float),
        "bridges": np.asarray(spec.n_pi, dtype=float),
        "acceptors": np.asarray(spec.n_a, dtype=float),
        "dpi": np.asarray(spec.n_dpi, dtype=float),
        "pia": np.asarray(spec.n_pia, dtype=float),
    }
    for region in REGION_NAMES:
        if vecs[region].size != widths[region]:
            raise DataError(
                f"{region} count vector length {vecs[region].size} != vocabulary "
                f"width {widths[region]}"
            )
    nc = len(vocab.connectors)
    if vecs["dpi"].size != nc or vecs["pia"].size != nc:
        raise DataError("connector count vector length does not match vocabulary")
    return vecs


def conjugation(spec: MoleculeSpec, vocab: GroupVocabulary) -> ConjugationSummary:
    """Dot the count vectors with the conjugation weight vectors."""
    n = _counts(spec, vocab)
    w_conn = np.array([c.conj_weight for c in vocab.connectors])
    w = {r: np.array([g.conj_weight for g in vocab.region(r)]) for r in REGION_NAMES}
    c_pi = float(w["bridges"] @ n["bridges"] + w_conn @ n["dpi"] + w_conn @ n["pia"])
    c_d = float(w["donors"] @ n["donors"])
    c_a = float(w["acceptors"] @ n["acceptors"])
    return ConjugationSummary(c_pi, c_d, c_a, c_pi + c_d + c_a)


def second_order(spec: MoleculeSpec, vocab: GroupVocabulary) -> SecondOrderFeatures:
    """Count-weighted sums of the per-group descriptor and sub-group rows.

    Each output column is a scalar dot product of the region's count vector
    with one weight column; regions concatenate acceptors, bridges, donors.
    """
    n = _counts(spec, vocab)
    des_parts, g_parts = [], []
    for region in ("acceptors", "bridges", "donors"):
        groups = vocab.region(region)
        des = np.array([g.des_weights for g in groups], dtype=float)
        gw = np.array([g.g_weights for g in groups], dtype=float)
        if des.size == 0:
            des = des.reshape(len(groups), 0)
        if gw.size == 0:
            gw = gw.reshape(len(groups), 0)
        des_parts.append(n[region] @ des)
        g_parts.append(n[region] @ gw)
    return SecondOrderFeatures(np.concatenate(des_parts), np.concatenate(g_parts))


def assemble(spec: MoleculeSpec, vocab: GroupVocabulary,
             f3=None) -> FeatureVector:
    """Build the tiered feature vector for one molecule.

    f1 concatenates (n_pi, n_dpi, n_pia, n_a, n_d); f2 concatenates
    (c_pi, c_d, c_a, c_total, n_des, n_g).  Presence of f3 selects the
    corrected (cLGC) tier.
    """
    n = _counts(spec, vocab)
    f1 = np.concatenate([n["bridges"], n["dpi"], n["pia"], n["acceptors"], n["donors"]])
    conj = conjugation(spec, vocab)
    so = second_order(spec, vocab)
    f2 = np.concatenate([[conj.c_pi, conj.c_d, conj.c_a, conj.c_total],
                         so.n_des, so.n_g])
    if f3 is None:
        return FeatureVector(f1, f2, None, Tier.LGC)
    f3 = np.asarray(f3, dtype=float)
    return FeatureVector(f1, f2, f3, Tier.CLGC)


def feature_width(vocab: GroupVocabulary, f3_width: int = 0) -> int:
    """Total assembled width for this vocabulary (and optional f3 block)."""
    widths = vocab.region_widths
    f1 = sum(widths.values()) + 2 * len(vocab.connectors)
    f2 = 4 + vocab.des_width + vocab.g_width
    return f1 + f2 + f3_width
