/** Wire shapes shared with the simulator: WebSocket messages and JSONL logs.
 *
 * Everything the console knows arrives as one of these. Timestamps ride as
 * nanosecond counts; the socket encodes them as decimal strings because
 * 64-bit values do not survive JavaScript Number, so they are kept as
 * bigint here and converted to float seconds only for display math.
 */

export interface Msg {
  topic: string;
  tNs: bigint;
  payload: unknown;
}

export function tSeconds(m: Msg): number {
  return Number(m.tNs) / 1e9;
}

/** Parse one WebSocket text frame; null for anything malformed. */
export function parseWsMessage(text: string): Msg | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const d = doc as Record<string, unknown>;
  if (typeof d.topic !== "string") return null;
  if (typeof d.timestamp_ns !== "string") return null;
  let tNs: bigint;
  try {
    tNs = BigInt(d.timestamp_ns);
  } catch {
    return null;
  }
  return { topic: d.topic, tNs, payload: d.payload };
}

export function serializeCommand(topic: string, payload: unknown): string {
  return JSON.stringify({ topic, payload });
}

/** Parse one recorded log line ({"seq","t_ns","topic","payload"}). */
export function parseLogLine(line: string): Msg | null {
  const trimmed = line.trim();
  if (!trimmed) return null;
  let doc: unknown;
  try {
    doc = JSON.parse(trimmed);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const d = doc as Record<string, unknown>;
  if (typeof d.topic !== "string") return null;
  // json numbers are safe here: log timestamps stay far below 2^53 ns
  if (typeof d.t_ns !== "number" || !Number.isFinite(d.t_ns)) return null;
  return { topic: d.topic, tNs: BigInt(Math.trunc(d.t_ns)), payload: d.payload };
}

export interface LogParse {
  messages: Msg[];
  skipped: number;
}

/** Parse a whole JSONL log; corrupt lines are counted, never fatal. */
export function parseLog(text: string): LogParse {
  const messages: Msg[] = [];
  let skipped = 0;
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const msg = parseLogLine(line);
    if (msg === null) skipped += 1;
    else messages.push(msg);
  }
  return { messages, skipped };
}

// command topics the gateway accepts from the console
export const T_PILOT = "/cmd/pilot";
export const T_ARM = "/cmd/arm";
export const T_TOKEN = "/cmd/token";
export const T_MODE = "/cmd/mode";
export const T_SETPOINT = "/cmd/setpoint";
export const T_PATCH = "/sim/patch";

export const TOKENS = ["NEXT", "PREV", "SELECT", "BACK", "START_STOP"] as const;
export type Token = (typeof TOKENS)[number];
