import { describe, expect, it } from "vitest";

import {
  LineBuffer,
  parseEventLine,
  parseEventLog,
  rawToken,
} from "../src/ndjson.js";

describe("LineBuffer", () => {
  it("reassembles lines across arbitrary chunk boundaries", () => {
    const buf = new LineBuffer();
    const lines = [
      ...buf.push('{"seq": 0, "ty'),
      ...buf.push('pe": "state"}\n{"seq": 1'),
      ...buf.push(', "type": "generation"}\n'),
    ];
    expect(lines).toEqual([
      '{"seq": 0, "type": "state"}',
      '{"seq": 1, "type": "generation"}',
    ]);
    expect(buf.rest()).toBe("");
  });

  it("keeps an unterminated final line in rest()", () => {
    const buf = new LineBuffer();
    expect(buf.push('{"a": 1}\n{"b":')).toEqual(['{"a": 1}']);
    expect(buf.rest()).toBe('{"b":');
  });
});

describe("rawToken", () => {
  it("returns the exact byte token the service wrote", () => {
    const line =
      '{"best_g": 1e-06, "generation": 3, "mean_g": 0.30000000000000004, "seq": 4, "type": "generation"}';
    // JSON.stringify(1e-6) would render "0.000001" - the raw token must win
    expect(rawToken(line, "best_g")).toBe("1e-06");
    expect(rawToken(line, "mean_g")).toBe("0.30000000000000004");
    expect(rawToken(line, "generation")).toBe("3");
    expect(rawToken(line, "missing")).toBeNull();
  });
});

describe("parseEventLog", () => {
  it("rejects malformed events", () => {
    expect(() => parseEventLine('{"no": "seq"}')).toThrow(/malformed/);
  });

  it("parses a recorded artifact including a trailing partial-newline line", () => {
    const log =
      '{"seq": 0, "state": "running", "type": "state"}\n' +
      '{"best_g": 2.5, "generation": 0, "mean_g": 1.0, "seq": 1, "type": "generation"}';
    const events = parseEventLog(log);
    expect(events).toHaveLength(2);
    expect(events[1].event.seq).toBe(1);
    expect(events[1].raw).toContain('"best_g": 2.5');
  });
});
