import math

import numpy as np
import pytest

from nlodesign.data import (Dataset, MoleculeSpec, PropertyRecord, SynthConfig,
                            load_dataset, save_dataset, serialize_dataset,
                            synth_dataset, synth_truth)
from nlodesign.errors import DatasetError
from nlodesign.features import assemble


def _spec(vocab, d=0, b=0, a=0, conn=0):
    def onehot(n, i):
        v = [0] * n
        v[i] = 1
        return tuple(v)
    c = onehot(len(vocab.connectors), conn)
    return MoleculeSpec(onehot(7, d), onehot(9, b), onehot(11, a), c, c)


def test_spec_validation_checks_widths(vocab):
    spec = MoleculeSpec((1,), (1,) * 9, (1,) * 11, (1, 0, 0), (1, 0, 0))
    with pytest.raises(DatasetError, match="n_d"):
        spec.validate(vocab)


def test_spec_validation_requires_all_three_parts(vocab):
    spec = MoleculeSpec((0,) * 7, (1,) + (0,) * 8, (1,) + (0,) * 10,
                        (1, 0, 0), (1, 0, 0))
    with pytest.raises(DatasetError, match="donor"):
        spec.validate(vocab)
    spec.validate(vocab, require_dpa=False)


def test_spec_negative_counts_rejected(vocab):
    spec = MoleculeSpec((-1,) + (0,) * 6, (1,) + (0,) * 8, (1,) + (0,) * 10,
                        (1, 0, 0), (1, 0, 0))
    with pytest.raises(DatasetError, match="non-negative"):
        spec.validate(vocab)


def test_property_record_consistency_gate():
    good = PropertyRecord(1.0, 2.0, 3.0, 100.0, math.log(100.0))
    good.validate(unit_scale=1.0)
    bad = PropertyRecord(1.0, 2.0, 3.0, 100.0, math.log(100.0) + 1e-6)
    with pytest.raises(DatasetError, match="ln_beta"):
        bad.validate(unit_scale=1.0)


def test_property_record_unit_scale_changes_the_gate():
    rec = PropertyRecord(1.0, 2.0, 3.0, 100.0, math.log(100.0 * 1e4))
    rec.validate(unit_scale=1e4)
    with pytest.raises(DatasetError):
        rec.validate(unit_scale=1.0)


def test_property_record_positivity():
    with pytest.raises(DatasetError, match="gap"):
        PropertyRecord(1.0, 2.0, -3.0, 100.0, math.log(100.0)).validate(1.0)
    with pytest.raises(DatasetError, match="alpha"):
        PropertyRecord(1.0, 0.0, 3.0, 100.0, math.log(100.0)).validate(1.0)


def test_synth_dataset_deterministic(vocab):
    cfg = SynthConfig(n_records=20, noise_sigma=0.2, f3_width=3)
    a = synth_dataset(cfg, vocab, seed=5)
    b = synth_dataset(cfg, vocab, seed=5)
    assert a == b
    c = synth_dataset(cfg, vocab, seed=6)
    assert a != c


def test_synth_labels_match_documented_truth(vocab):
    cfg = SynthConfig(n_records=30, noise_sigma=0.0, f3_width=2)
    ds = synth_dataset(cfg, vocab, seed=2)
    truth = synth_truth(cfg, vocab)
    for rec in ds.records:
        x = assemble(rec.spec, vocab, rec.f3).full
        mu, alpha, gap, lnb = truth(x)
        assert rec.props.mu == pytest.approx(mu, abs=1e-12)
        assert rec.props.alpha_pol == pytest.approx(alpha, abs=1e-12)
        assert rec.props.gap == pytest.approx(gap, abs=1e-12)
        assert rec.props.ln_beta == pytest.approx(lnb, abs=1e-12)


def test_dataset_round_trip_identity(small_dataset, vocab, tmp_path):
    p = tmp_path / "ds.tsv"
    save_dataset(small_dataset, p, vocab)
    again = load_dataset(p, vocab)
    assert again == small_dataset
    p2 = tmp_path / "ds2.tsv"
    save_dataset(again, p2, vocab)
    assert p.read_text() == p2.read_text()


def test_serialized_values_are_plain_decimal(small_dataset, vocab):
    text = serialize_dataset(small_dataset, vocab)
    assert "np.float" not in text


def test_loader_rejects_bad_magic(small_dataset, vocab, tmp_path):
    p = tmp_path / "ds.tsv"
    save_dataset(small_dataset, p, vocab)
    p.write_text(p.read_text().replace("#nlodesign-dataset", "#something"))
    with pytest.raises(DatasetError, match="magic"):
        load_dataset(p, vocab)


def test_loader_rejects_column_mismatch(small_dataset, vocab, tmp_path):
    p = tmp_path / "ds.tsv"
    save_dataset(small_dataset, p, vocab)
    lines = p.read_text().splitlines()
    lines[1] = lines[1].replace("d:NMe2", "d:XX")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="column"):
        load_dataset(p, vocab)


def test_loader_reports_offending_line(small_dataset, vocab, tmp_path):
    p = tmp_path / "ds.tsv"
    save_dataset(small_dataset, p, vocab)
    lines = p.read_text().splitlines()
    fields = lines[2].split("\t")
    fields[-1] = str(float(fields[-1]) + 0.5)  # break ln_beta consistency
    lines[2] = "\t".join(fields)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match=":3:"):
        load_dataset(p, vocab)


def test_dataset_f3_width_enforced(vocab):
    spec = _spec(vocab)
    props = PropertyRecord(1.0, 2.0, 3.0, 100.0, math.log(100.0))
    from nlodesign.data import DatasetRecord
    rec = DatasetRecord("x", spec, (0.1,), props)
    with pytest.raises(DatasetError, match="f3 width"):
        Dataset((rec,), f3_width=2)


def test_labels_column_extraction(small_dataset):
    y = small_dataset.labels("ln_beta")
    assert y.shape == (60,)
    assert np.all(np.isfinite(y))


def test_scaled_spec_multiplies_counts(vocab):
    spec = _spec(vocab)
    double = spec.scaled(2)
    assert sum(double.n_d) == 2 * sum(spec.n_d)
    assert sum(double.n_pia) == 2 * sum(spec.n_pia)
