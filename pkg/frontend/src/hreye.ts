/** LED-ring widget model: two concentric rings, 24 outer and 16 inner.
 *
 * The mapping from LED index to screen position is bijective and
 * order-preserving: index 0 sits at twelve o'clock and indices advance
 * clockwise. A frame with the wrong ring sizes renders a fault badge
 * instead of a guess; the indicator lying is worse than it admitting
 * confusion.
 */

export const OUTER_LEDS = 24;
export const INNER_LEDS = 16;

export type Rgb = [number, number, number];

export interface Dot {
  ring: "outer" | "inner";
  index: number;
  x: number; // unit circle, +x right +y up, screen-ready
  y: number;
  color: Rgb;
}

export interface HreyeView {
  fault: string | null;
  dots: Dot[];
}

const OUTER_RADIUS = 1.0;
const INNER_RADIUS = 0.62;

function ringDot(ring: "outer" | "inner", index: number, count: number, radius: number, color: Rgb): Dot {
  const angle = Math.PI / 2 - (2 * Math.PI * index) / count; // clockwise from top
  return {
    ring,
    index,
    x: radius * Math.cos(angle),
    y: radius * Math.sin(angle),
    color,
  };
}

function asRgb(value: unknown): Rgb | null {
  if (!Array.isArray(value) || value.length !== 3) return null;
  const [r, g, b] = value;
  if (typeof r !== "number" || typeof g !== "number" || typeof b !== "number") return null;
  if ([r, g, b].some((c) => !Number.isFinite(c) || c < 0 || c > 255)) return null;
  return [r, g, b];
}

/** Build the dot list for one frame payload, or a fault description. */
export function renderHreye(payload: unknown): HreyeView {
  if (typeof payload !== "object" || payload === null) {
    return { fault: "malformed frame", dots: [] };
  }
  const p = payload as Record<string, unknown>;
  const outer = p.outer;
  const inner = p.inner;
  if (!Array.isArray(outer) || outer.length !== OUTER_LEDS) {
    return { fault: `outer ring must have ${OUTER_LEDS} entries`, dots: [] };
  }
  if (!Array.isArray(inner) || inner.length !== INNER_LEDS) {
    return { fault: `inner ring must have ${INNER_LEDS} entries`, dots: [] };
  }
  const dots: Dot[] = [];
  for (let i = 0; i < OUTER_LEDS; i++) {
    const color = asRgb(outer[i]);
    if (color === null) return { fault: `outer[${i}] is not an rgb triple`, dots: [] };
    dots.push(ringDot("outer", i, OUTER_LEDS, OUTER_RADIUS, color));
  }
  for (let i = 0; i < INNER_LEDS; i++) {
    const color = asRgb(inner[i]);
    if (color === null) return { fault: `inner[${i}] is not an rgb triple`, dots: [] };
    dots.push(ringDot("inner", i, INNER_LEDS, INNER_RADIUS, color));
  }
  return { fault: null, dots };
}
