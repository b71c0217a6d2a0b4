/** Line-delimited JSON decoding.
 *
 * The UI never re-derives a number it shows: alongside the parsed event we
 * keep the raw JSON line, and displayed values are the exact byte tokens
 * from that line (see rawToken).
 */

import type { RunEvent } from "./types.js";

export interface ParsedEvent {
  event: RunEvent;
  raw: string;
}

/** Extract the literal token of a top-level numeric/string field from a
 * compact JSON line, exactly as the service wrote it. */
export function rawToken(raw: string, field: string): string | null {
  const m = raw.match(new RegExp(`"${field}":\\s*(-?[0-9][^,}\\]]*|"[^"]*")`));
  return m ? m[1] : null;
}

/** Incremental splitter: feed arbitrary chunks, get complete lines. */
export class LineBuffer {
  private pending = "";

  push(chunk: string): string[] {
    this.pending += chunk;
    const lines = this.pending.split("\n");
    this.pending = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }

  /** Any trailing, unterminated partial line (normally empty at stream end). */
  rest(): string {
    return this.pending.trim();
  }
}

export function parseEventLine(line: string): ParsedEvent {
  const event = JSON.parse(line) as RunEvent;
  if (typeof event.seq !== "number" || typeof event.type !== "string") {
    throw new Error(`malformed run event: ${line}`);
  }
  return { event, raw: line };
}

/** Decode a full recorded stream (e.g. a run-*.jsonl artifact). */
export function parseEventLog(text: string): ParsedEvent[] {
  const buf = new LineBuffer();
  const out = buf.push(text).map(parseEventLine);
  const rest = buf.rest();
  if (rest) out.push(parseEventLine(rest));
  return out;
}
