/** Types mirroring the service's JSON payloads (see docs/api.md). */

export interface GroupInfo {
  name: string;
  conj_weight: number;
  des_weights: number[];
  g_weights: number[];
}

export interface ConnectorInfo {
  name: string;
  conj_weight: number;
}

export interface Vocabulary {
  schema_version: string;
  donors: GroupInfo[];
  bridges: GroupInfo[];
  acceptors: GroupInfo[];
  connectors: ConnectorInfo[];
  des_columns: Record<string, string[]>;
  g_columns: Record<string, string[]>;
}

export type Region = "donors" | "bridges" | "acceptors";
export const REGIONS: Region[] = ["donors", "bridges", "acceptors"];

export interface MoleculeSpec {
  n_d: number[];
  n_pi: number[];
  n_a: number[];
  n_dpi: number[];
  n_pia: number[];
}

export interface Prediction {
  mu: number;
  alpha_pol: number;
  gap: number;
  ln_beta: number;
}

export interface StructureRule {
  kind: "min_active" | "max_active" | "require_group" | "forbid_group";
  region: Region;
  value: number;
  group: string;
  weight: number;
}

export interface FitnessTarget {
  mode: "maximize_lnbeta" | "match_lnbeta";
  target_value: number;
  sigma: number;
  floor: number;
  structure_rules: StructureRule[];
}

export interface ConstantBlock {
  pinned_bits: [number, number][];
  connector: string | null;
  extra_counts: [string, string, number][];
}

export interface EvolutionConfig {
  population_size: number;
  generations: number;
  mutation_rate: number;
  crossover_mode: "regional" | "global";
  elitism_count: number;
  tournament_size: number;
  target: FitnessTarget;
  constants: ConstantBlock;
  seed: number;
  top_k: number;
}

export interface Candidate {
  genome: number[];
  g: number;
  f_y: number;
  f_x: number;
  spec: MoleculeSpec;
  prediction: Prediction | null;
}

export interface GenerationStats {
  generation: number;
  best_g: number;
  mean_g: number;
  best_genome: number[];
}

export type RunState = "queued" | "running" | "paused" | "done" | "failed";

export interface RunRecord {
  run_id: string;
  state: RunState;
  config: EvolutionConfig;
  trace_so_far: GenerationStats[];
  candidates_so_far: Candidate[];
  created: number;
  updated: number;
}

export interface StateEvent {
  seq: number;
  type: "state";
  state: RunState;
}

export interface GenerationEvent {
  seq: number;
  type: "generation";
  generation: number;
  best_g: number;
  mean_g: number;
  best_candidate: Candidate | null;
}

export type RunEvent = StateEvent | GenerationEvent;
