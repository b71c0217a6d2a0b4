"""Evolutionary search over the partitioned binary group genome.

The genome is 28 bits: donor region (bits 0-6), bridge region (7-15),
acceptor region (16-26) and one connector-flag bit (27).  Region bits are
multi-hot (bit set = group present once); fixed counts and the connector
choice can be overlaid through a constants block, whose pinned positions
are invariant under crossover and mutation.

Regional crossover recombines each region independently (single point per
region, connector flag inherited whole); global crossover uses one point
over the whole string.  Per-slot RNG streams derive from (seed,
generation, slot) so results do not depend on evaluation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import msbnn
from .data import MoleculeSpec
from .errors import DataError, NumericError
from .features import Tier, assemble
from .msbnn import MsbnnModel, Prediction
from .vocab import GroupVocabulary

REGION_SLICES = {"donors": slice(0, 7), "bridges": slice(7, 16),
                 "acceptors": slice(16, 27)}
FLAG_BIT = 27
GENOME_LENGTH = 28
F_Y_EPSILON = 1e-6


@dataclass(frozen=True)
class StructureRule:
    """One structural constraint contributing to the penalty f_x.

    kind is one of min_active / max_active (value = bound, region set),
    require_group / forbid_group (group named by (region, name)).
    """

    kind: str
    region: str
    value: float = 0.0
    group: str = ""
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("min_active", "max_active", "require_group",
                             "forbid_group"):
            raise DataError(f"unknown structure rule kind {self.kind!r}")
        if self.region not in REGION_SLICES:
            raise DataError(f"unknown region {self.region!r}")


@dataclass(frozen=True)
class FitnessTarget:
    """What f_y rewards: maximize ln(beta) above a floor, or match a value."""

    mode: str = "maximize_lnbeta"
    target_value: float = 0.0
    sigma: float = 1.0
    floor: float = 0.0
    structure_rules: tuple[StructureRule, ...] = ()

    def __post_init__(self):
        if self.mode not in ("maximize_lnbeta", "match_lnbeta"):
            raise DataError(f"unknown fitness mode {self.mode!r}")
        if self.mode == "match_lnbeta" and self.sigma <= 0:
            raise DataError("match mode needs sigma > 0")

    def f_y(self, ln_beta: float) -> float:
        if self.mode == "maximize_lnbeta":
            return max(F_Y_EPSILON, ln_beta - self.floor)
        return float(np.exp(-((ln_beta - self.target_value) ** 2) / self.sigma ** 2))


@dataclass(frozen=True)
class ConstantBlock:
    """Pinned structure: genome bits that never move, a forced connector
    choice, and extra fixed group counts overlaid on every decode."""

    pinned_bits: tuple[tuple[int, int], ...] = ()
    connector: str | None = None
    extra_counts: tuple[tuple[str, str, int], ...] = ()  # (region, group, count)

    def pinned_map(self) -> dict[int, int]:
        return {int(p): int(v) for p, v in self.pinned_bits}


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 550
    generations: int = 100
    mutation_rate: float = 0.02
    crossover_mode: str = "regional"
    elitism_count: int = 2
    tournament_size: int = 3
    target: FitnessTarget = FitnessTarget()
    constants: ConstantBlock = ConstantBlock()
    seed: int = 0
    top_k: int = 20

    def __post_init__(self):
        if self.population_size < 2:
            raise DataError("population_size must be >= 2")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise DataError("mutation_rate must be in [0, 1]")
        if self.crossover_mode not in ("regional", "global"):
            raise DataError(f"unknown crossover mode {self.crossover_mode!r}")
        if self.generations < 0:
            raise DataError("generations must be >= 0")


@dataclass
class Individual:
    genome: np.ndarray  # uint8, length 28
    fitness: float | None = None
    decoded: MoleculeSpec | None = None

    def __post_init__(self):
        self.genome = np.asarray(self.genome, dtype=np.uint8)
        if self.genome.size != GENOME_LENGTH:
            raise DataError(f"genome length must be {GENOME_LENGTH}")
        if self.fitness is not None and self.fitness < 0:
            raise DataError("fitness must be >= 0")

    def key(self) -> bytes:
        return self.genome.tobytes()


@dataclass(frozen=True)
class FitnessReport:
    f_y: float
    f_x: float
    g: float
    prediction: Prediction | None = None


def _connector_index(vocab: GroupVocabulary, name: str) -> int:
    for i, c in enumerate(vocab.connectors):
        if c.name == name:
            return i
    raise DataError(f"unknown connector {name!r}")


def decode(ind: Individual, vocab: GroupVocabulary,
           constants: ConstantBlock = ConstantBlock()) -> MoleculeSpec:
    """Genome bits to count vectors.  Infeasible structures still decode;
    feasibility is judged by the fitness penalty, never here."""
    g = np.asarray(ind.genome, dtype=int)
    widths = vocab.region_widths
    for region, sl in REGION_SLICES.items():
        if widths[region] != sl.stop - sl.start:
            raise DataError(
                f"vocabulary region {region} width {widths[region]} does not match "
                f"the genome layout ({sl.stop - sl.start})")
    counts = {region: g[sl].copy() for region, sl in REGION_SLICES.items()}
    for region, group, count in constants.extra_counts:
        names = [gr.name for gr in vocab.region(region)]
        if group not in names:
            raise DataError(f"constants refer to unknown group {region}/{group}")
        counts[region][names.index(group)] += count
    nc = len(vocab.connectors)
    conn = np.zeros(nc, dtype=int)
    if constants.connector is not None:
        conn[_connector_index(vocab, constants.connector)] = 1
    else:
        conn[min(int(g[FLAG_BIT]), nc - 1)] = 1
    return MoleculeSpec(
        tuple(int(v) for v in counts["donors"]),
        tuple(int(v) for v in counts["bridges"]),
        tuple(int(v) for v in counts["acceptors"]),
        tuple(int(v) for v in conn),
        tuple(int(v) for v in conn),
    )


def structure_penalty(spec: MoleculeSpec, vocab: GroupVocabulary,
                      rules) -> float:
    region_counts = {"donors": spec.n_d, "bridges": spec.n_pi, "acceptors": spec.n_a}
    total = 0.0
    for rule in rules:
        counts = region_counts[rule.region]
        names = [g.name for g in vocab.region(rule.region)]
        if rule.kind == "min_active":
            active = sum(1 for c in counts if c > 0)
            total += rule.weight * max(0.0, rule.value - active)
        elif rule.kind == "max_active":
            active = sum(1 for c in counts if c > 0)
            total += rule.weight * max(0.0, active - rule.value)
        elif rule.kind == "require_group":
            if rule.group not in names:
                raise DataError(f"rule names unknown group {rule.region}/{rule.group}")
            if counts[names.index(rule.group)] == 0:
                total += rule.weight
        elif rule.kind == "forbid_group":
            if rule.group not in names:
                raise DataError(f"rule names unknown group {rule.region}/{rule.group}")
            total += rule.weight * counts[names.index(rule.group)]
    return total


def composite_fitness(f_y: float, f_x: float) -> float:
    """G = 1 / (1/f_y + f_x); 0 when f_y is 0."""
    if f_y <= 0:
        return 0.0
    return 1.0 / (1.0 / f_y + f_x)


def fitness(ind: Individual, model: MsbnnModel, vocab: GroupVocabulary,
            target: FitnessTarget,
            constants: ConstantBlock = ConstantBlock()) -> FitnessReport:
    """Score one genome with the surrogate model and the structure rules."""
    if model.tier != Tier.LGC:
        raise DataError("the evolutionary search scores with an LGC-tier model")
    spec = decode(ind, vocab, constants)
    fv = assemble(spec, vocab, None)
    pred = msbnn.predict(model, fv)
    f_y = target.f_y(pred.ln_beta)
    f_x = structure_penalty(spec, vocab, target.structure_rules)
    return FitnessReport(f_y, f_x, composite_fitness(f_y, f_x), pred)


def _apply_pins(genome: np.ndarray, pinned: dict[int, int]) -> np.ndarray:
    for pos, val in pinned.items():
        genome[pos] = val
    return genome


def crossover(a: Individual, b: Individual, mode: str,
              rng: np.random.Generator,
              pinned: dict[int, int] | None = None) -> tuple[Individual, Individual]:
    """Single-point recombination, either within each region or globally."""
    ga, gb = a.genome, b.genome
    if ga.size != gb.size:
        raise DataError("parents disagree on genome layout")
    c1, c2 = ga.copy(), gb.copy()
    if mode == "regional":
        for sl in REGION_SLICES.values():
            width = sl.stop - sl.start
            p = sl.start + int(rng.integers(1, width))
            c1[p:sl.stop] = gb[p:sl.stop]
            c2[p:sl.stop] = ga[p:sl.stop]
        # connector flag inherited whole: c1 keeps a's, c2 keeps b's
    elif mode == "global":
        p = int(rng.integers(1, GENOME_LENGTH))
        c1[p:] = gb[p:]
        c2[p:] = ga[p:]
    else:
        raise DataError(f"unknown crossover mode {mode!r}")
    if pinned:
        _apply_pins(c1, pinned)
        _apply_pins(c2, pinned)
    return Individual(c1), Individual(c2)


def mutate(ind: Individual, rate: float, rng: np.random.Generator,
           pinned: dict[int, int] | None = None) -> Individual:
    """Independent per-bit flips; pinned positions never move."""
    if not 0.0 <= rate <= 1.0:
        raise DataError("mutation rate must be in [0, 1]")
    genome = ind.genome.copy()
    flips = rng.random(GENOME_LENGTH) < rate
    if pinned:
        for pos in pinned:
            flips[pos] = False
    genome[flips] ^= 1
    if pinned:
        _apply_pins(genome, pinned)
    return Individual(genome)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_g: float
    mean_g: float
    best_genome: tuple[int, ...]


@dataclass
class CandidateRecord:
    genome: tuple[int, ...]
    g: float
    f_y: float
    f_x: float
    spec: MoleculeSpec
    prediction: Prediction | None


@dataclass
class EvolutionResult:
    config: EvolutionConfig
    trace: list[GenerationStats]
    candidates: list[CandidateRecord]


class EvolutionEngine:
    """Resumable, generation-at-a-time evolution loop.

    The CLI runs it to completion; the HTTP service steps it one
    generation at a time so runs can be paused and steered.  Traces are a
    pure function of (config, seed) until constraints are amended.
    """

    def __init__(self, cfg: EvolutionConfig, fitness_fn, vocab: GroupVocabulary,
                 constants: ConstantBlock | None = None):
        self.cfg = cfg
        self.fitness_fn = fitness_fn
        self.vocab = vocab
        self.constants = constants if constants is not None else cfg.constants
        self.generation = 0
        self._seen: dict[bytes, CandidateRecord] = {}
        self.population = [
            Individual(_apply_pins(
                np.random.default_rng(
                    np.random.SeedSequence([cfg.seed, 0, i])).integers(
                        0, 2, GENOME_LENGTH, dtype=np.uint8),
                self.constants.pinned_map()))
            for i in range(cfg.population_size)
        ]
        self._reports = self._evaluate(self.population)
        self.trace: list[GenerationStats] = [self._stats()]

    def _evaluate(self, population) -> list[FitnessReport]:
        reports = []
        for ind in population:
            rep = self.fitness_fn(ind)
            if not np.isfinite(rep.g):
                raise NumericError(
                    f"non-finite fitness {rep.g} for genome "
                    f"{ind.genome.tolist()} at generation {self.generation}")
            ind.fitness = rep.g
            reports.append(rep)
            key = ind.key()
            prev = self._seen.get(key)
            if prev is None or rep.g > prev.g:
                self._seen[key] = CandidateRecord(
                    tuple(int(v) for v in ind.genome), rep.g, rep.f_y, rep.f_x,
                    decode(ind, self.vocab, self.constants), rep.prediction)
        return reports

    def _ranked_order(self):
        return sorted(range(len(self.population)),
                      key=lambda i: (-self.population[i].fitness,
                                     self.population[i].key()))

    def _stats(self) -> GenerationStats:
        order = self._ranked_order()
        best = self.population[order[0]]
        gs = [ind.fitness for ind in self.population]
        return GenerationStats(self.generation, float(best.fitness),
                               float(np.mean(gs)),
                               tuple(int(v) for v in best.genome))

    def step(self) -> GenerationStats:
        """Breed and evaluate one generation; returns its stats."""
        cfg = self.cfg
        pinned = self.constants.pinned_map()
        order = self._ranked_order()
        elites = [Individual(self.population[i].genome.copy())
                  for i in order[:cfg.elitism_count]]
        self.generation += 1
        children: list[Individual] = []
        slot = 0
        while len(children) < cfg.population_size - len(elites):
            rng = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, self.generation, slot]))
            parents = []
            for _ in range(2):
                picks = rng.integers(0, cfg.population_size, cfg.tournament_size)
                best = max(picks, key=lambda i: (self.population[int(i)].fitness,
                                                 -int(i)))
                parents.append(self.population[int(best)])
            c1, c2 = crossover(parents[0], parents[1], cfg.crossover_mode, rng,
                               pinned)
            children.append(mutate(c1, cfg.mutation_rate, rng, pinned))
            if len(children) < cfg.population_size - len(elites):
                children.append(mutate(c2, cfg.mutation_rate, rng, pinned))
            slot += 1
        self.population = elites + children
        self._reports = self._evaluate(self.population)
        stats = self._stats()
        self.trace.append(stats)
        return stats

    def amend(self, target: FitnessTarget | None = None,
              constants: ConstantBlock | None = None,
              fitness_fn=None) -> None:
        """Steer a paused run: swap the target/constants (and fitness) going
        forward.  Pins are applied to the current population immediately;
        everything already in the trace is untouched."""
        if constants is not None:
            self.constants = constants
        if fitness_fn is not None:
            self.fitness_fn = fitness_fn
        pinned = self.constants.pinned_map()
        if pinned:
            for ind in self.population:
                _apply_pins(ind.genome, pinned)
        self._reports = self._evaluate(self.population)

    def candidates(self) -> list[CandidateRecord]:
        ranked = sorted(self._seen.values(),
                        key=lambda c: (-c.g, bytes(c.genome)))
        return ranked[:self.cfg.top_k]

    def result(self) -> EvolutionResult:
        return EvolutionResult(self.cfg, list(self.trace), self.candidates())


def make_fitness(model: MsbnnModel, vocab: GroupVocabulary,
                 target: FitnessTarget, constants: ConstantBlock):
    def fn(ind: Individual) -> FitnessReport:
        return fitness(ind, model, vocab, target, constants)
    return fn


def evolve(cfg: EvolutionConfig, model: MsbnnModel,
           vocab: GroupVocabulary) -> EvolutionResult:
    """Run a full seeded evolution with msBNN-scored fitness."""
    engine = EvolutionEngine(
        cfg, make_fitness(model, vocab, cfg.target, cfg.constants), vocab)
    for _ in range(cfg.generations):
        engine.step()
    return engine.result()


@dataclass
class RescoreEntry:
    spec: MoleculeSpec
    prediction: Prediction | None
    missing_f3: bool = False


def rescore(candidates, clgc_model: MsbnnModel, vocab: GroupVocabulary,
            f3_provider) -> list[RescoreEntry]:
    """Re-predict candidate specs at the corrected (cLGC) tier.

    f3_provider maps a MoleculeSpec to its third-order vector, or None when
    unavailable; such candidates are flagged, never dropped.  Input order
    is preserved.
    """
    if clgc_model.tier != Tier.CLGC:
        raise DataError("rescore needs a cLGC-tier model")
    out = []
    for spec in candidates:
        f3 = f3_provider(spec)
        if f3 is None:
            out.append(RescoreEntry(spec, None, missing_f3=True))
            continue
        pred = msbnn.predict(clgc_model, assemble(spec, vocab, f3))
        out.append(RescoreEntry(spec, pred))
    return out


# ---------------------------------------------------------------------------
# Run artifact serialization
# ---------------------------------------------------------------------------


def target_to_dict(t: FitnessTarget) -> dict:
    return {
        "mode": t.mode, "target_value": t.target_value, "sigma": t.sigma,
        "floor": t.floor,
        "structure_rules": [
            {"kind": r.kind, "region": r.region, "value": r.value,
             "group": r.group, "weight": r.weight} for r in t.structure_rules],
    }


def target_from_dict(d: dict) -> FitnessTarget:
    return FitnessTarget(
        mode=d.get("mode", "maximize_lnbeta"),
        target_value=float(d.get("target_value", 0.0)),
        sigma=float(d.get("sigma", 1.0)),
        floor=float(d.get("floor", 0.0)),
        structure_rules=tuple(
            StructureRule(r["kind"], r["region"], float(r.get("value", 0.0)),
                          r.get("group", ""), float(r.get("weight", 1.0)))
            for r in d.get("structure_rules", [])),
    )


def constants_to_dict(c: ConstantBlock) -> dict:
    return {"pinned_bits": [list(p) for p in c.pinned_bits],
            "connector": c.connector,
            "extra_counts": [list(e) for e in c.extra_counts]}


def constants_from_dict(d: dict) -> ConstantBlock:
    return ConstantBlock(
        pinned_bits=tuple((int(p), int(v)) for p, v in d.get("pinned_bits", [])),
        connector=d.get("connector"),
        extra_counts=tuple((r, g, int(n)) for r, g, n in d.get("extra_counts", [])),
    )


def config_to_dict(cfg: EvolutionConfig) -> dict:
    return {
        "population_size": cfg.population_size, "generations": cfg.generations,
        "mutation_rate": cfg.mutation_rate, "crossover_mode": cfg.crossover_mode,
        "elitism_count": cfg.elitism_count, "tournament_size": cfg.tournament_size,
        "target": target_to_dict(cfg.target),
        "constants": constants_to_dict(cfg.constants),
        "seed": cfg.seed, "top_k": cfg.top_k,
    }


def config_from_dict(d: dict) -> EvolutionConfig:
    return EvolutionConfig(
        population_size=int(d.get("population_size", 550)),
        generations=int(d.get("generations", 100)),
        mutation_rate=float(d.get("mutation_rate", 0.02)),
        crossover_mode=d.get("crossover_mode", "regional"),
        elitism_count=int(d.get("elitism_count", 2)),
        tournament_size=int(d.get("tournament_size", 3)),
        target=target_from_dict(d.get("target", {})),
        constants=constants_from_dict(d.get("constants", {})),
        seed=int(d.get("seed", 0)),
        top_k=int(d.get("top_k", 20)),
    )


def _spec_to_dict(spec: MoleculeSpec) -> dict:
    return {"n_d": list(spec.n_d), "n_pi": list(spec.n_pi), "n_a": list(spec.n_a),
            "n_dpi": list(spec.n_dpi), "n_pia": list(spec.n_pia)}


def _prediction_to_dict(p: Prediction | None):
    if p is None:
        return None
    return {"mu": p.mu, "alpha_pol": p.alpha_pol, "gap": p.gap, "ln_beta": p.ln_beta}


def result_to_dict(result: EvolutionResult) -> dict:
    return {
        "format": "nlodesign-run-1",
        "config": config_to_dict(result.config),
        "trace": [
            {"generation": s.generation, "best_g": s.best_g, "mean_g": s.mean_g,
             "best_genome": list(s.best_genome)} for s in result.trace],
        "candidates": [
            {"genome": list(c.genome), "g": c.g, "f_y": c.f_y, "f_x": c.f_x,
             "spec": _spec_to_dict(c.spec),
             "prediction": _prediction_to_dict(c.prediction)}
            for c in result.candidates],
    }


def save_result(result: EvolutionResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result_to_dict(result), sort_keys=True, indent=1))
