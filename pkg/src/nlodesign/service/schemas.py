"""Pydantic request/response models; they mirror the core dataclasses
field-for-field so service payloads and in-process calls carry the same
numbers."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .. import evolve
from ..data import MoleculeSpec
from ..msbnn import Prediction


class MoleculeSpecModel(BaseModel):
    n_d: list[int]
    n_pi: list[int]
    n_a: list[int]
    n_dpi: list[int]
    n_pia: list[int]

    def to_spec(self) -> MoleculeSpec:
        return MoleculeSpec(tuple(self.n_d), tuple(self.n_pi), tuple(self.n_a),
                            tuple(self.n_dpi), tuple(self.n_pia))

    @classmethod
    def from_spec(cls, spec: MoleculeSpec) -> "MoleculeSpecModel":
        return cls(n_d=list(spec.n_d), n_pi=list(spec.n_pi), n_a=list(spec.n_a),
                   n_dpi=list(spec.n_dpi), n_pia=list(spec.n_pia))


class PredictRequest(BaseModel):
    spec: MoleculeSpecModel
    f3: list[float] | None = None


class PredictionModel(BaseModel):
    mu: float
    alpha_pol: float
    gap: float
    ln_beta: float

    @classmethod
    def from_prediction(cls, p: Prediction) -> "PredictionModel":
        return cls(mu=p.mu, alpha_pol=p.alpha_pol, gap=p.gap, ln_beta=p.ln_beta)


class StructureRuleModel(BaseModel):
    kind: str
    region: str
    value: float = 0.0
    group: str = ""
    weight: float = 1.0


class FitnessTargetModel(BaseModel):
    mode: str = "maximize_lnbeta"
    target_value: float = 0.0
    sigma: float = 1.0
    floor: float = 0.0
    structure_rules: list[StructureRuleModel] = Field(default_factory=list)

    def to_target(self) -> evolve.FitnessTarget:
        return evolve.target_from_dict(self.model_dump())


class ConstantBlockModel(BaseModel):
    pinned_bits: list[tuple[int, int]] = Field(default_factory=list)
    connector: str | None = None
    extra_counts: list[tuple[str, str, int]] = Field(default_factory=list)

    def to_constants(self) -> evolve.ConstantBlock:
        return evolve.constants_from_dict(self.model_dump())


class EvolutionConfigModel(BaseModel):
    population_size: int = 550
    generations: int = 100
    mutation_rate: float = 0.02
    crossover_mode: str = "regional"
    elitism_count: int = 2
    tournament_size: int = 3
    target: FitnessTargetModel = Field(default_factory=FitnessTargetModel)
    constants: ConstantBlockModel = Field(default_factory=ConstantBlockModel)
    seed: int = 0
    top_k: int = 20

    def to_config(self) -> evolve.EvolutionConfig:
        return evolve.config_from_dict(self.model_dump())


class CandidateModel(BaseModel):
    genome: list[int]
    g: float
    f_y: float
    f_x: float
    spec: MoleculeSpecModel
    prediction: PredictionModel | None

    @classmethod
    def from_record(cls, c: evolve.CandidateRecord) -> "CandidateModel":
        return cls(genome=list(c.genome), g=c.g, f_y=c.f_y, f_x=c.f_x,
                   spec=MoleculeSpecModel.from_spec(c.spec),
                   prediction=(PredictionModel.from_prediction(c.prediction)
                               if c.prediction else None))


class GenerationStatsModel(BaseModel):
    generation: int
    best_g: float
    mean_g: float
    best_genome: list[int]


class RunRecordModel(BaseModel):
    run_id: str
    state: str
    config: EvolutionConfigModel
    trace_so_far: list[GenerationStatsModel]
    candidates_so_far: list[CandidateModel]
    created: float
    updated: float


class ResumeRequest(BaseModel):
    target: FitnessTargetModel | None = None
    constants: ConstantBlockModel | None = None


class ModelLoadRequest(BaseModel):
    path: str
