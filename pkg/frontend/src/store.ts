/** Single state store for a design session.
 *
 * The reducer is a pure function of (state, event), so rendering a recorded
 * event stream and rendering the same events live produce identical state:
 * replay(events) === events.reduce(reduce, initialState()).
 */

import { rawToken, type ParsedEvent } from "./ndjson.js";
import type { Candidate, RunState } from "./types.js";

export interface TracePoint {
  seq: number;
  generation: number;
  bestG: number;
  meanG: number;
  /** Display tokens, byte-for-byte from the service's event line. */
  bestGRaw: string;
  meanGRaw: string;
  bestCandidate: Candidate | null;
}

export interface SessionState {
  runState: RunState | null;
  lastSeq: number;
  trace: TracePoint[];
  stateLog: { seq: number; state: RunState }[];
}

export function initialState(): SessionState {
  return { runState: null, lastSeq: -1, trace: [], stateLog: [] };
}

/** Apply one event. Events at or before lastSeq are duplicates from a
 * reconnect and are dropped, keeping trace indices strictly increasing. */
export function reduce(state: SessionState, pe: ParsedEvent): SessionState {
  const { event, raw } = pe;
  if (event.seq <= state.lastSeq) return state;
  if (event.type === "state") {
    return {
      ...state,
      lastSeq: event.seq,
      runState: event.state,
      stateLog: [...state.stateLog, { seq: event.seq, state: event.state }],
    };
  }
  const point: TracePoint = {
    seq: event.seq,
    generation: event.generation,
    bestG: event.best_g,
    meanG: event.mean_g,
    bestGRaw: rawToken(raw, "best_g") ?? String(event.best_g),
    meanGRaw: rawToken(raw, "mean_g") ?? String(event.mean_g),
    bestCandidate: event.best_candidate,
  };
  return {
    ...state,
    lastSeq: event.seq,
    trace: [...state.trace, point],
  };
}

export function replay(events: ParsedEvent[]): SessionState {
  return events.reduce(reduce, initialState());
}
