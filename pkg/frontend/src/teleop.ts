/** 20 Hz fly-by-wire sender with the session-end safety rule.
 *
 * While enabled (connected and armed) every tick publishes the axes
 * resolved from the held keys, including explicit all-zero inputs when
 * nothing is held: the vehicle must never coast on a stale command, and
 * the receiver does no key-repeat inference. Ending the session emits
 * exactly one final all-zero input followed by a disarm request.
 */

import { axesFromKeys, isTeleopKey } from "./keymap.js";
import { T_ARM, T_PILOT } from "./protocol.js";

export const SEND_HZ = 20;
export const SEND_INTERVAL_MS = 1000 / SEND_HZ;

export type Sender = (topic: string, payload: unknown) => void;

export interface TeleopTimer {
  setInterval(fn: () => void, ms: number): unknown;
  clearInterval(handle: unknown): void;
}

export class Teleop {
  private pressed = new Set<string>();
  private handle: unknown = null;
  private enabled = false;
  private ended = false;

  constructor(
    private send: Sender,
    private timer: TeleopTimer = globalThis,
  ) {}

  /** Gate from the session: connected and armed. */
  setEnabled(on: boolean): void {
    if (on === this.enabled) return;
    this.enabled = on;
    if (on) {
      this.ended = false;
      this.tick();
      this.handle = this.timer.setInterval(() => this.tick(), SEND_INTERVAL_MS);
    } else {
      this.stopTimer();
      this.pressed.clear();
    }
  }

  get active(): boolean {
    return this.enabled;
  }

  /** Returns true when the key belongs to teleop and was consumed. */
  keyDown(key: string): boolean {
    const k = normalize(key);
    if (!isTeleopKey(k)) return false;
    if (k === " ") {
      this.emergencyStop();
      return true;
    }
    if (this.enabled) this.pressed.add(k);
    return true;
  }

  keyUp(key: string): boolean {
    const k = normalize(key);
    if (!isTeleopKey(k)) return false;
    this.pressed.delete(k);
    return true;
  }

  /** Space bar: zero everything and ask to disarm, but keep the session. */
  emergencyStop(): void {
    if (!this.enabled) return;
    this.pressed.clear();
    this.send(T_PILOT, { axes: axesFromKeys(this.pressed) });
    this.send(T_ARM, { armed: false });
  }

  /**
   * Session end (disconnect, page unload, explicit stop). Sends the final
   * zero + disarm pair at most once, and only if sending is still possible.
   */
  end(canSend: boolean): void {
    this.stopTimer();
    this.pressed.clear();
    if (this.ended) return;
    this.ended = true;
    const wasEnabled = this.enabled;
    this.enabled = false;
    if (wasEnabled && canSend) {
      this.send(T_PILOT, { axes: axesFromKeys(this.pressed) });
      this.send(T_ARM, { armed: false });
    }
  }

  private tick(): void {
    if (!this.enabled) return;
    this.send(T_PILOT, { axes: axesFromKeys(this.pressed) });
  }

  private stopTimer(): void {
    if (this.handle !== null) {
      this.timer.clearInterval(this.handle);
      this.handle = null;
    }
  }
}

function normalize(key: string): string {
  return key.length === 1 ? key.toLowerCase() : key;
}
