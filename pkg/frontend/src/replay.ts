/** Feed a recorded log through the same dispatch path the socket uses.
 *
 * The console cannot tell a replayed file from a live run, which is the
 * stateless-view guarantee made testable: hand this function a log and a
 * store and every widget fills in with no simulator anywhere.
 */

import { Msg, parseLog } from "./protocol.js";

export interface ReplayStats {
  messages: number;
  skipped: number;
  finalT: number;
}

export function replayLogText(
  text: string,
  dispatch: (msg: Msg) => void,
): ReplayStats {
  const { messages, skipped } = parseLog(text);
  let finalT = 0;
  for (const msg of messages) {
    dispatch(msg);
    const t = Number(msg.tNs) / 1e9;
    if (t > finalT) finalT = t;
  }
  return { messages: messages.length, skipped, finalT };
}
