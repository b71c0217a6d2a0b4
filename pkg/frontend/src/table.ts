/** Candidate table and what-if panel logic.
 *
 * Displayed property values carry the service's own byte tokens: the raw
 * response body is scanned for the literal tokens and they are attached to
 * each candidate before any sorting, so no number is ever re-formatted
 * client-side.
 */

import type { ConstraintSet } from "./constraints.js";
import {
  REGIONS,
  type Candidate,
  type MoleculeSpec,
  type Region,
  type Vocabulary,
} from "./types.js";

export type SortKey = "g" | "f_y" | "f_x" | "mu" | "alpha_pol" | "gap" | "ln_beta";

export interface DisplayCandidate {
  candidate: Candidate;
  /** Raw byte tokens per displayed field, from the service response. */
  tokens: Partial<Record<SortKey, string>>;
  /** Human-readable group composition, e.g. "NMe2 + thiophene -> CN". */
  composition: string;
}

function allTokens(raw: string, field: string): string[] {
  const re = new RegExp(`"${field}":\\s*(-?[0-9][^,}\\]]*)`, "g");
  const out: string[] = [];
  for (const m of raw.matchAll(re)) out.push(m[1]);
  return out;
}

function regionNames(counts: number[], groups: { name: string }[]): string {
  const parts: string[] = [];
  counts.forEach((c, i) => {
    if (c > 0) parts.push(c > 1 ? `${c}x ${groups[i].name}` : groups[i].name);
  });
  return parts.join(" + ");
}

export function describeComposition(spec: MoleculeSpec, vocab: Vocabulary): string {
  const donor = regionNames(spec.n_d, vocab.donors);
  const bridge = regionNames(spec.n_pi, vocab.bridges);
  const acceptor = regionNames(spec.n_a, vocab.acceptors);
  const conn = regionNames(spec.n_dpi, vocab.connectors);
  return `${donor} [${conn}] ${bridge} -> ${acceptor}`;
}

/** Attach display tokens from the raw run-record body.  Candidates appear in
 * the body in list order; each prediction field occurs once per candidate
 * with a non-null prediction, and "g"/"f_y"/"f_x" once per candidate. */
export function attachDisplayTokens(
  candidates: Candidate[],
  rawBody: string,
  vocab: Vocabulary,
): DisplayCandidate[] {
  const section = rawBody.slice(rawBody.indexOf('"candidates_so_far"'));
  const perCandidate: Record<"g" | "f_y" | "f_x", string[]> = {
    g: allTokens(section, "g"),
    f_y: allTokens(section, "f_y"),
    f_x: allTokens(section, "f_x"),
  };
  const perPrediction: Record<string, string[]> = {
    mu: allTokens(section, "mu"),
    alpha_pol: allTokens(section, "alpha_pol"),
    gap: allTokens(section, "gap"),
    ln_beta: allTokens(section, "ln_beta"),
  };
  let predIdx = 0;
  return candidates.map((candidate, i) => {
    const tokens: Partial<Record<SortKey, string>> = {
      g: perCandidate.g[i],
      f_y: perCandidate.f_y[i],
      f_x: perCandidate.f_x[i],
    };
    if (candidate.prediction !== null) {
      for (const f of ["mu", "alpha_pol", "gap", "ln_beta"] as const) {
        tokens[f] = perPrediction[f][predIdx];
      }
      predIdx += 1;
    }
    return {
      candidate,
      tokens,
      composition: describeComposition(candidate.spec, vocab),
    };
  });
}

function sortValue(c: Candidate, key: SortKey): number {
  if (key === "g" || key === "f_y" || key === "f_x") return c[key];
  return c.prediction ? c.prediction[key] : Number.NEGATIVE_INFINITY;
}

export function sortCandidates(
  rows: DisplayCandidate[],
  key: SortKey,
  descending = true,
): DisplayCandidate[] {
  const sign = descending ? -1 : 1;
  return [...rows].sort(
    (a, b) => sign * (sortValue(a.candidate, key) - sortValue(b.candidate, key)),
  );
}

// -- what-if panel ------------------------------------------------------------

export interface GroupSwap {
  region: Region;
  /** Group to remove one count of ("" to only add). */
  from: string;
  /** Group to add one count of ("" to only remove). */
  to: string;
}

export type WhatIfResult =
  | { ok: true; spec: MoleculeSpec }
  | { ok: false; error: string };

const SPEC_FIELD: Record<Region, "n_d" | "n_pi" | "n_a"> = {
  donors: "n_d",
  bridges: "n_pi",
  acceptors: "n_a",
};

/** Build the molecule spec for a one-group swap on a candidate.  Swaps that
 * would disturb a pinned constant are blocked with an explanation instead
 * of producing a request. */
export function whatIfSpec(
  candidate: Candidate,
  swap: GroupSwap,
  vocab: Vocabulary,
  constraints: ConstraintSet,
): WhatIfResult {
  if (!REGIONS.includes(swap.region)) {
    return { ok: false, error: `unknown region "${swap.region}"` };
  }
  const groups = vocab[swap.region];
  const counts = [...candidate.spec[SPEC_FIELD[swap.region]]];
  const pinOf = (name: string) => constraints.groups[swap.region][name];

  if (swap.from) {
    const i = groups.findIndex((g) => g.name === swap.from);
    if (i < 0) return { ok: false, error: `unknown group "${swap.from}"` };
    if (counts[i] <= 0) {
      return { ok: false, error: `"${swap.from}" is not present in this candidate` };
    }
    if (pinOf(swap.from) === "pinned" && counts[i] === 1) {
      return {
        ok: false,
        error: `"${swap.from}" is pinned as a constant; removing its last copy would violate the pin`,
      };
    }
    counts[i] -= 1;
  }
  if (swap.to) {
    const j = groups.findIndex((g) => g.name === swap.to);
    if (j < 0) return { ok: false, error: `unknown group "${swap.to}"` };
    if (pinOf(swap.to) === "forbidden") {
      return {
        ok: false,
        error: `"${swap.to}" is forbidden by the current constraints`,
      };
    }
    counts[j] += 1;
  }
  return {
    ok: true,
    spec: { ...candidate.spec, [SPEC_FIELD[swap.region]]: counts },
  };
}
