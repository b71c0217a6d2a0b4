import { describe, expect, it } from "vitest";

import { parseEventLog, type ParsedEvent } from "../src/ndjson.js";
import { initialState, reduce, replay } from "../src/store.js";

/** Build a deterministic recorded stream: state events around a monotone
 * best-g series, exactly like the service emits (sorted keys, seq field). */
function recordedStream(generations: number): ParsedEvent[] {
  const lines: string[] = ['{"seq": 0, "state": "running", "type": "state"}'];
  let best = 0.5;
  for (let g = 0; g <= generations; g++) {
    best += g % 3 === 0 ? 0.25 : 0; // non-decreasing under elitism
    const mean = best - 0.3;
    lines.push(
      `{"best_candidate": null, "best_g": ${best}, "generation": ${g}, ` +
        `"mean_g": ${mean}, "seq": ${g + 1}, "type": "generation"}`,
    );
  }
  lines.push(
    `{"seq": ${generations + 2}, "state": "done", "type": "state"}`,
  );
  return parseEventLog(lines.join("\n"));
}

describe("session store", () => {
  it("replay of a recorded 50-event stream yields a 50-point series", () => {
    const events = recordedStream(49); // 1 state + 50 generations + 1 state
    const state = replay(events);
    expect(state.trace).toHaveLength(50);
    expect(state.runState).toBe("done");
    const best = state.trace.map((p) => p.bestG);
    for (let i = 1; i < best.length; i++) {
      expect(best[i]).toBeGreaterThanOrEqual(best[i - 1]);
    }
  });

  it("rendering live equals replaying the same history from scratch", () => {
    const events = recordedStream(20);
    let live = initialState();
    for (const e of events) live = reduce(live, e);
    expect(live).toEqual(replay(events));
  });

  it("drops duplicate events after a reconnect overlap", () => {
    const events = recordedStream(10);
    // simulate disconnect after event 5 and a resume that re-sends 3..end
    const overlapping = [...events.slice(0, 6), ...events.slice(3)];
    expect(replay(overlapping)).toEqual(replay(events));
    const seqs = replay(overlapping).trace.map((p) => p.seq);
    expect([...seqs].sort((a, b) => a - b)).toEqual(seqs); // strictly increasing
    expect(new Set(seqs).size).toBe(seqs.length);
  });

  it("keeps the service's byte tokens for display", () => {
    const events = parseEventLog(
      '{"best_candidate": null, "best_g": 1e-06, "generation": 0, ' +
        '"mean_g": 2.0000000000000004, "seq": 0, "type": "generation"}',
    );
    const state = replay(events);
    expect(state.trace[0].bestGRaw).toBe("1e-06");
    expect(state.trace[0].meanGRaw).toBe("2.0000000000000004");
  });

  it("a pause produces a state event before any further generations", () => {
    const events = parseEventLog(
      [
        '{"seq": 0, "state": "running", "type": "state"}',
        '{"best_candidate": null, "best_g": 1.0, "generation": 0, "mean_g": 0.5, "seq": 1, "type": "generation"}',
        '{"seq": 2, "state": "paused", "type": "state"}',
        '{"seq": 3, "state": "running", "type": "state"}',
        '{"best_candidate": null, "best_g": 1.5, "generation": 1, "mean_g": 0.7, "seq": 4, "type": "generation"}',
      ].join("\n"),
    );
    const state = replay(events);
    const pauseSeq = state.stateLog.find((s) => s.state === "paused")!.seq;
    const afterPause = state.trace.filter((p) => p.seq > pauseSeq);
    expect(afterPause.map((p) => p.generation)).toEqual([1]);
  });
});
