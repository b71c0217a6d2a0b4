/** Constraint editor model: what the chemist pins/forbids, and how that
 * serializes to the service's evolution-config schema.
 *
 * Genome layout (mirrors the service): one bit per donor, then per bridge,
 * then per acceptor, then one connector-choice flag bit. Bit indices are
 * derived from the fetched vocabulary, never hard-coded.
 */

import {
  REGIONS,
  type ConstantBlock,
  type EvolutionConfig,
  type FitnessTarget,
  type Region,
  type StructureRule,
  type Vocabulary,
} from "./types.js";

export type GroupPin = "free" | "pinned" | "forbidden";

export interface ConstraintSet {
  /** Per region, group name -> pin state (absent means free). */
  groups: Record<Region, Record<string, GroupPin>>;
  connector: string | null;
  minActive: Partial<Record<Region, number>>;
  maxActive: Partial<Record<Region, number>>;
  targetMode: "maximize_lnbeta" | "match_lnbeta";
  targetValue: number;
  sigma: number;
  floor: number;
}

export function emptyConstraints(): ConstraintSet {
  return {
    groups: { donors: {}, bridges: {}, acceptors: {} },
    connector: null,
    minActive: {},
    maxActive: {},
    targetMode: "maximize_lnbeta",
    targetValue: 0,
    sigma: 1,
    floor: 0,
  };
}

export function regionOffsets(vocab: Vocabulary): Record<Region, number> {
  return {
    donors: 0,
    bridges: vocab.donors.length,
    acceptors: vocab.donors.length + vocab.bridges.length,
  };
}

/** Validation messages that block submission; empty array means feasible. */
export function validateConstraints(
  c: ConstraintSet,
  vocab: Vocabulary,
): string[] {
  const errors: string[] = [];
  for (const region of REGIONS) {
    const names = vocab[region].map((g) => g.name);
    for (const name of Object.keys(c.groups[region])) {
      if (!names.includes(name)) {
        errors.push(`${region}: unknown group "${name}"`);
      }
    }
    const forbidden = names.filter((n) => c.groups[region][n] === "forbidden");
    if (forbidden.length === names.length) {
      errors.push(
        `${region}: every group is forbidden — no valid molecule exists`,
      );
    }
    const pinned = names.filter((n) => c.groups[region][n] === "pinned").length;
    const free = names.length - forbidden.length;
    const min = c.minActive[region];
    const max = c.maxActive[region];
    if (min !== undefined && min > free) {
      errors.push(`${region}: min active ${min} exceeds the ${free} allowed groups`);
    }
    if (max !== undefined && min !== undefined && max < min) {
      errors.push(`${region}: max active ${max} is below min active ${min}`);
    }
    if (max !== undefined && pinned > max) {
      errors.push(`${region}: ${pinned} groups pinned but max active is ${max}`);
    }
  }
  if (c.connector !== null &&
      !vocab.connectors.some((k) => k.name === c.connector)) {
    errors.push(`unknown connector "${c.connector}"`);
  }
  if (c.targetMode === "match_lnbeta" && c.sigma <= 0) {
    errors.push("match mode needs sigma > 0");
  }
  return errors;
}

export function toConstants(c: ConstraintSet, vocab: Vocabulary): ConstantBlock {
  const offsets = regionOffsets(vocab);
  const pinned_bits: [number, number][] = [];
  for (const region of REGIONS) {
    vocab[region].forEach((g, i) => {
      const pin = c.groups[region][g.name];
      if (pin === "pinned") pinned_bits.push([offsets[region] + i, 1]);
      if (pin === "forbidden") pinned_bits.push([offsets[region] + i, 0]);
    });
  }
  return { pinned_bits, connector: c.connector, extra_counts: [] };
}

export function toTarget(c: ConstraintSet): FitnessTarget {
  const structure_rules: StructureRule[] = [];
  for (const region of REGIONS) {
    const min = c.minActive[region];
    const max = c.maxActive[region];
    if (min !== undefined) {
      structure_rules.push({ kind: "min_active", region, value: min, group: "", weight: 1 });
    }
    if (max !== undefined) {
      structure_rules.push({ kind: "max_active", region, value: max, group: "", weight: 1 });
    }
  }
  return {
    mode: c.targetMode,
    target_value: c.targetValue,
    sigma: c.sigma,
    floor: c.floor,
    structure_rules,
  };
}

export interface RunSettings {
  populationSize: number;
  generations: number;
  mutationRate: number;
  crossoverMode: "regional" | "global";
  seed: number;
  topK: number;
}

export const DEFAULT_RUN_SETTINGS: RunSettings = {
  populationSize: 550,
  generations: 100,
  mutationRate: 0.02,
  crossoverMode: "regional",
  seed: 0,
  topK: 20,
};

/** Rebuild editor state from a serialized config (inverse of toConfig for
 * everything the editor can express), so reloading a config reproduces the
 * identical editor state. */
export function fromConfig(
  config: EvolutionConfig,
  vocab: Vocabulary,
): ConstraintSet {
  const c = emptyConstraints();
  const offsets = regionOffsets(vocab);
  for (const [bit, value] of config.constants.pinned_bits) {
    for (const region of REGIONS) {
      const i = bit - offsets[region];
      if (i >= 0 && i < vocab[region].length) {
        c.groups[region][vocab[region][i].name] =
          value === 1 ? "pinned" : "forbidden";
      }
    }
  }
  c.connector = config.constants.connector;
  for (const rule of config.target.structure_rules) {
    if (rule.kind === "min_active") c.minActive[rule.region] = rule.value;
    if (rule.kind === "max_active") c.maxActive[rule.region] = rule.value;
  }
  c.targetMode = config.target.mode;
  c.targetValue = config.target.target_value;
  c.sigma = config.target.sigma;
  c.floor = config.target.floor;
  return c;
}

/** Serialize the editor to exactly the service's config schema. */
export function toConfig(
  c: ConstraintSet,
  vocab: Vocabulary,
  run: RunSettings = DEFAULT_RUN_SETTINGS,
): EvolutionConfig {
  return {
    population_size: run.populationSize,
    generations: run.generations,
    mutation_rate: run.mutationRate,
    crossover_mode: run.crossoverMode,
    elitism_count: 2,
    tournament_size: 3,
    target: toTarget(c),
    constants: toConstants(c, vocab),
    seed: run.seed,
    top_k: run.topK,
  };
}
