import json

import numpy as np
import pytest

from nlodesign import evolve as ev
from nlodesign import msbnn
from nlodesign.errors import DataError
from nlodesign.features import assemble


def onemax_fitness(ind):
    v = float(ind.genome[:27].sum()) + 1e-6
    return ev.FitnessReport(v, 0.0, v)


def small_cfg(**kw):
    base = dict(population_size=40, generations=15, mutation_rate=0.01,
                crossover_mode="regional", seed=2, top_k=5)
    base.update(kw)
    return ev.EvolutionConfig(**base)


# -- genome layout and decoding ---------------------------------------------

def test_region_layout_covers_genome():
    spans = sorted((sl.start, sl.stop) for sl in ev.REGION_SLICES.values())
    assert spans == [(0, 7), (7, 16), (16, 27)]
    assert ev.FLAG_BIT == 27 and ev.GENOME_LENGTH == 28


def test_decode_multi_hot_counts(vocab):
    genome = np.zeros(28, dtype=np.uint8)
    genome[[0, 3, 7, 16, 20]] = 1
    spec = ev.decode(ev.Individual(genome), vocab)
    assert spec.n_d == (1, 0, 0, 1, 0, 0, 0)
    assert spec.n_pi[0] == 1 and sum(spec.n_pi) == 1
    assert spec.n_a[0] == 1 and spec.n_a[4] == 1 and sum(spec.n_a) == 2


def test_flag_bit_selects_connector(vocab):
    genome = np.zeros(28, dtype=np.uint8)
    spec0 = ev.decode(ev.Individual(genome), vocab)
    genome[27] = 1
    spec1 = ev.decode(ev.Individual(genome), vocab)
    assert spec0.n_dpi == (1, 0, 0) and spec0.n_pia == (1, 0, 0)
    assert spec1.n_dpi == (0, 1, 0) and spec1.n_pia == (0, 1, 0)


def test_constants_pin_connector_and_overlay_counts(vocab):
    constants = ev.ConstantBlock(connector="-C#C-",
                                 extra_counts=(("donors", "NMe2", 2),))
    genome = np.zeros(28, dtype=np.uint8)
    genome[27] = 1  # ignored: connector pinned
    spec = ev.decode(ev.Individual(genome), vocab, constants)
    assert spec.n_dpi == (0, 0, 1)
    assert spec.n_d[0] == 2


def test_constants_unknown_group_rejected(vocab):
    constants = ev.ConstantBlock(extra_counts=(("donors", "XX", 1),))
    with pytest.raises(DataError, match="unknown group"):
        ev.decode(ev.Individual(np.zeros(28, dtype=np.uint8)), vocab, constants)


# -- fitness algebra ----------------------------------------------------------

def test_composite_fitness_equals_f_y_when_unpenalized():
    for f_y in (1e-6, 0.5, 3.0, 1e4):
        assert ev.composite_fitness(f_y, 0.0) == pytest.approx(f_y, rel=1e-15)


def test_composite_fitness_vanishes_under_large_penalty():
    for f_y in (0.5, 3.0, 1e4):
        g = ev.composite_fitness(f_y, 1e6)
        assert g < 1e-5 * f_y


def test_composite_fitness_zero_desirability():
    assert ev.composite_fitness(0.0, 5.0) == 0.0


def test_maximize_mode_floors_at_epsilon():
    t = ev.FitnessTarget(mode="maximize_lnbeta", floor=10.0)
    assert t.f_y(25.0) == pytest.approx(15.0)
    assert t.f_y(5.0) == ev.F_Y_EPSILON


def test_match_mode_peaks_at_target():
    t = ev.FitnessTarget(mode="match_lnbeta", target_value=12.0, sigma=2.0)
    assert t.f_y(12.0) == pytest.approx(1.0)
    assert t.f_y(14.0) == pytest.approx(np.exp(-1.0))
    assert t.f_y(10.0) == t.f_y(14.0)


def test_structure_rules(vocab):
    genome = np.zeros(28, dtype=np.uint8)
    genome[[0, 7, 16]] = 1
    spec = ev.decode(ev.Individual(genome), vocab)
    rules = (
        ev.StructureRule("min_active", "donors", value=2, weight=3.0),
        ev.StructureRule("max_active", "acceptors", value=0, weight=2.0),
        ev.StructureRule("require_group", "bridges", group="thiophene", weight=5.0),
        ev.StructureRule("forbid_group", "donors", group="NMe2", weight=7.0),
    )
    # one donor active (short of 2 by 1), one acceptor over the max,
    # thiophene absent, NMe2 present once
    assert ev.structure_penalty(spec, vocab, rules) == pytest.approx(
        3.0 * 1 + 2.0 * 1 + 5.0 + 7.0 * 1)


def test_unknown_rule_kind_rejected():
    with pytest.raises(DataError):
        ev.StructureRule("sometimes", "donors")


# -- operators ----------------------------------------------------------------

def test_crossover_children_take_bits_from_parents():
    rng = np.random.default_rng(0)
    a = ev.Individual(np.zeros(28, dtype=np.uint8))
    b = ev.Individual(np.ones(28, dtype=np.uint8))
    for mode in ("regional", "global"):
        c1, c2 = ev.crossover(a, b, mode, np.random.default_rng(1))
        merged = c1.genome + c2.genome
        assert np.all(merged == 1), "children partition the parents' bits"


def test_regional_crossover_keeps_flag_whole():
    a = ev.Individual(np.zeros(28, dtype=np.uint8))
    b = ev.Individual(np.ones(28, dtype=np.uint8))
    c1, c2 = ev.crossover(a, b, "regional", np.random.default_rng(3))
    assert c1.genome[27] == 0 and c2.genome[27] == 1


def test_pins_survive_crossover_and_mutation():
    pins = {2: 1, 27: 0}
    a = ev.Individual(np.zeros(28, dtype=np.uint8))
    b = ev.Individual(np.ones(28, dtype=np.uint8))
    rng = np.random.default_rng(5)
    for _ in range(20):
        c1, c2 = ev.crossover(a, b, "regional", rng, pins)
        for c in (c1, c2):
            m = ev.mutate(c, 0.5, rng, pins)
            assert m.genome[2] == 1 and m.genome[27] == 0


def test_mutation_rate_zero_is_identity():
    ind = ev.Individual(np.random.default_rng(0).integers(0, 2, 28,
                                                          dtype=np.uint8))
    out = ev.mutate(ind, 0.0, np.random.default_rng(1))
    assert np.array_equal(out.genome, ind.genome)


# -- engine -------------------------------------------------------------------

def test_engine_trace_deterministic_and_monotone(vocab):
    cfg = small_cfg()
    traces = []
    for _ in range(2):
        eng = ev.EvolutionEngine(cfg, onemax_fitness, vocab)
        for _ in range(cfg.generations):
            eng.step()
        traces.append([(s.generation, s.best_g, s.mean_g, s.best_genome)
                       for s in eng.trace])
    assert traces[0] == traces[1]
    best = [t[1] for t in traces[0]]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert len(traces[0]) == cfg.generations + 1


def test_default_population_size_is_550():
    assert ev.EvolutionConfig().population_size == 550


def test_engine_honors_population_size(vocab):
    eng = ev.EvolutionEngine(small_cfg(population_size=550, generations=1),
                             onemax_fitness, vocab)
    assert len(eng.population) == 550
    eng.step()
    assert len(eng.population) == 550


def test_elites_survive_unchanged(vocab):
    cfg = small_cfg(mutation_rate=0.5)
    eng = ev.EvolutionEngine(cfg, onemax_fitness, vocab)
    best_before = max(ind.fitness for ind in eng.population)
    eng.step()
    assert max(ind.fitness for ind in eng.population) >= best_before


def test_candidates_ranked_unique_topk(vocab):
    cfg = small_cfg(top_k=5)
    eng = ev.EvolutionEngine(cfg, onemax_fitness, vocab)
    for _ in range(5):
        eng.step()
    cands = eng.candidates()
    assert len(cands) == 5
    assert len({c.genome for c in cands}) == 5
    gs = [c.g for c in cands]
    assert gs == sorted(gs, reverse=True)


def test_amend_applies_pins_to_population(vocab):
    eng = ev.EvolutionEngine(small_cfg(), onemax_fitness, vocab)
    eng.amend(constants=ev.ConstantBlock(pinned_bits=((0, 0), (1, 0))))
    for ind in eng.population:
        assert ind.genome[0] == 0 and ind.genome[1] == 0
    eng.step()
    for ind in eng.population:
        assert ind.genome[0] == 0 and ind.genome[1] == 0


def test_nonfinite_fitness_raises_numeric_error(vocab):
    def bad(ind):
        return ev.FitnessReport(1.0, 0.0, float("nan"))
    from nlodesign.errors import NumericError
    with pytest.raises(NumericError):
        ev.EvolutionEngine(small_cfg(), bad, vocab)


# -- model-scored fitness and rescoring --------------------------------------

def test_model_scored_fitness_requires_structural_tier(vocab, clgc_model):
    ind = ev.Individual(np.zeros(28, dtype=np.uint8))
    with pytest.raises(DataError):
        ev.fitness(ind, clgc_model, vocab, ev.FitnessTarget())


def test_model_scored_run_produces_candidates(vocab, lgc_model):
    cfg = small_cfg(population_size=30, generations=5,
                    target=ev.FitnessTarget(mode="maximize_lnbeta"),
                    constants=ev.ConstantBlock(connector="-C=C-"))
    result = ev.evolve(cfg, lgc_model, vocab)
    assert len(result.trace) == 6
    assert result.candidates
    for c in result.candidates:
        assert c.prediction is not None
        assert c.spec.n_dpi == (1, 0, 0)


def test_rescore_preserves_order_and_flags_missing(vocab, clgc_model,
                                                   small_dataset):
    specs = [small_dataset.records[0].spec, small_dataset.records[1].spec]
    lookup = {small_dataset.records[0].spec: small_dataset.records[0].f3}
    entries = ev.rescore(specs, clgc_model, vocab, lookup.get)
    assert [e.spec for e in entries] == specs
    assert not entries[0].missing_f3 and entries[0].prediction is not None
    assert entries[1].missing_f3 and entries[1].prediction is None


def test_rescore_rejects_structural_tier_model(vocab, lgc_model):
    with pytest.raises(DataError):
        ev.rescore([], lgc_model, vocab, lambda s: None)


def test_rescore_matches_direct_prediction(vocab, clgc_model, small_dataset):
    rec = small_dataset.records[0]
    entry = ev.rescore([rec.spec], clgc_model, vocab, {rec.spec: rec.f3}.get)[0]
    want = msbnn.predict(clgc_model, assemble(rec.spec, vocab, rec.f3))
    assert entry.prediction == want


# -- serialization ------------------------------------------------------------

def test_config_round_trip():
    cfg = small_cfg(
        target=ev.FitnessTarget(mode="match_lnbeta", target_value=12.0,
                                sigma=1.5, structure_rules=(
                                    ev.StructureRule("max_active", "donors",
                                                     value=2.0),)),
        constants=ev.ConstantBlock(pinned_bits=((27, 0),), connector="-C=C-",
                                   extra_counts=(("donors", "NMe2", 1),)))
    assert ev.config_from_dict(ev.config_to_dict(cfg)) == cfg


def test_run_artifact_round_trips_through_json(vocab, tmp_path):
    eng = ev.EvolutionEngine(small_cfg(generations=3), onemax_fitness, vocab)
    for _ in range(3):
        eng.step()
    path = tmp_path / "run.json"
    ev.save_result(eng.result(), path)
    payload = json.loads(path.read_text())
    assert payload["format"] == "nlodesign-run-1"
    assert len(payload["trace"]) == 4
    assert payload["trace"][0]["generation"] == 0
    assert payload["candidates"][0]["genome"] == list(
        eng.candidates()[0].genome)
