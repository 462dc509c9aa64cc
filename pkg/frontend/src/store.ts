/** Console view-model: the single place bus messages become UI state.
 *
 * Strictly stateless with respect to simulation truth: every field here is
 * a restatement of a received message, so driving this store from a live
 * socket or a replayed log file produces the same view. Commands the
 * console sends never touch it; the arming mirror follows bus traffic
 * only, so a refused command cannot flip the indicator.
 */

import { renderHreye, HreyeView } from "./hreye.js";
import { Msg, tSeconds } from "./protocol.js";

export const STALE_AFTER_S = 1.0;
export const DEPTH_STRIP_POINTS = 600;

export interface PoseView {
  depth: number | null;
  roll: number | null;
  pitch: number | null;
  yaw: number | null;
  yawRate: number | null;
}

export interface ThrusterBars {
  ids: string[];
  thrusts: number[];
  pwm: number[];
  saturated: boolean;
  scale: number;
}

export interface BatteryView {
  voltage: number;
  current: number;
  energyWh: number;
  fraction: number;
}

export interface SirenEntry {
  t: number;
  say: string;
}

export interface TargetView {
  visible: boolean;
  range: number | null;
  azimuth: number | null;
  elevation: number | null;
  klass: string | null;
}

function num(v: unknown): number | null {
  return typeof v === "number" && Number.isFinite(v) ? v : null;
}

function rec(payload: unknown): Record<string, unknown> | null {
  return typeof payload === "object" && payload !== null
    ? (payload as Record<string, unknown>)
    : null;
}

export class ConsoleStore {
  pose: PoseView = { depth: null, roll: null, pitch: null, yaw: null, yawRate: null };
  depthStrip: { t: number; depth: number }[] = [];
  thrusters: ThrusterBars | null = null;
  battery: BatteryView | null = null;
  hreye: HreyeView | null = null;
  oledFront: string[] = [];
  oledSide: string[] = [];
  siren: SirenEntry[] = [];
  target: TargetView | null = null;
  armed: boolean | null = null;
  mode: string | null = null;

  /** newest message time per topic, sim seconds, for staleness checks */
  private lastSeen = new Map<string, number>();
  /** message counts per topic for the rate panel */
  private counts = new Map<string, number>();
  private latestT = 0;

  apply(msg: Msg): void {
    const t = tSeconds(msg);
    this.latestT = Math.max(this.latestT, t);
    this.lastSeen.set(msg.topic, t);
    this.counts.set(msg.topic, (this.counts.get(msg.topic) ?? 0) + 1);
    const p = rec(msg.payload);

    switch (msg.topic) {
      case "/sim/estimate": {
        if (!p) return;
        this.pose = {
          depth: num(p.depth),
          roll: num(p.roll),
          pitch: num(p.pitch),
          yaw: num(p.yaw),
          yawRate: num(p.yaw_rate),
        };
        return;
      }
      case "/sensors/depth": {
        const depth = p ? num(p.depth) : null;
        if (depth === null) return;
        this.depthStrip.push({ t, depth });
        if (this.depthStrip.length > DEPTH_STRIP_POINTS) this.depthStrip.shift();
        return;
      }
      case "/actuators/thrusters": {
        if (!p || !Array.isArray(p.ids) || !Array.isArray(p.thrusts)) return;
        this.thrusters = {
          ids: p.ids.filter((x): x is string => typeof x === "string"),
          thrusts: p.thrusts.filter((x): x is number => typeof x === "number"),
          pwm: this.thrusters?.pwm ?? [],
          saturated: p.saturated === true,
          scale: num(p.scale) ?? 1,
        };
        return;
      }
      case "/actuators/pwm": {
        if (!p || !Array.isArray(p.pwm)) return;
        const pwm = p.pwm.filter((x): x is number => typeof x === "number");
        if (this.thrusters) this.thrusters.pwm = pwm;
        else this.thrusters = { ids: [], thrusts: [], pwm, saturated: false, scale: 1 };
        return;
      }
      case "/sensors/battery": {
        if (!p) return;
        const voltage = num(p.voltage);
        const current = num(p.current);
        const energyWh = num(p.energy_wh);
        const fraction = num(p.fraction);
        if (voltage === null || energyWh === null) return;
        this.battery = {
          voltage,
          current: current ?? 0,
          energyWh,
          fraction: fraction ?? 0,
        };
        return;
      }
      case "/uhri/hreye": {
        this.hreye = renderHreye(msg.payload);
        return;
      }
      case "/uhri/oled/front": {
        if (p && Array.isArray(p.lines)) {
          this.oledFront = p.lines.map(String);
          this.mirrorFromStatusLine(this.oledFront[0]);
        }
        return;
      }
      case "/uhri/oled/side": {
        if (p && Array.isArray(p.lines)) this.oledSide = p.lines.map(String);
        return;
      }
      case "/uhri/siren": {
        const say = p ? p.say : null;
        if (typeof say === "string") this.siren.push({ t, say });
        return;
      }
      case "/perception/target": {
        if (!p) return;
        this.target = {
          visible: p.visible === true,
          range: num(p.range),
          azimuth: num(p.azimuth),
          elevation: num(p.elevation),
          klass: typeof p.class === "string" ? p.class : null,
        };
        return;
      }
      case "/sim/event": {
        if (!p) return;
        if (p.event === "arm") this.armed = p.armed === true;
        if (p.event === "mode" && typeof p.mode === "string") this.mode = p.mode;
        return;
      }
      default:
        return; // counted for the rate panel, otherwise unrendered
    }
  }

  /** The 1 Hz OLED keepalive carries arming state; use it as the mirror
   * baseline so a console joining mid-run is not stuck on "unknown". */
  private mirrorFromStatusLine(line: string | undefined): void {
    if (!line || !line.startsWith("State ")) return;
    const word = line.slice("State ".length);
    if (word === "IDLE") {
      this.armed = false;
      this.mode = "idle";
    } else if (word === "ARMED") {
      this.armed = true;
      this.mode = "idle";
    } else {
      this.armed = true;
      this.mode = word.toLowerCase();
    }
  }

  /** Topics that went quiet, judged against the newest message seen. */
  isStale(topic: string): boolean {
    const seen = this.lastSeen.get(topic);
    if (seen === undefined) return true;
    return this.latestT - seen > STALE_AFTER_S;
  }

  /** Observed mean rate in Hz over the whole feed, for the rates panel. */
  topicRates(): Map<string, number> {
    const rates = new Map<string, number>();
    if (this.latestT <= 0) return rates;
    for (const [topic, count] of this.counts) {
      rates.set(topic, count / this.latestT);
    }
    return rates;
  }

  get simTime(): number {
    return this.latestT;
  }
}
