/** Fixed keyboard layout for fly-by-wire, documented in docs/console.md.
 *
 * Axes are body-frame [surge, sway, heave, roll, pitch, yaw], each in
 * [-1, 1]. Opposing keys held together cancel to zero; unknown keys are
 * ignored so browser shortcuts pass through untouched.
 */

export const AXES = 6;

interface Binding {
  axis: number;
  value: 1 | -1;
}

// KeyboardEvent.key values, letters lowercased by the caller
const BINDINGS: Record<string, Binding> = {
  w: { axis: 0, value: 1 },
  s: { axis: 0, value: -1 },
  a: { axis: 1, value: -1 },
  d: { axis: 1, value: 1 },
  r: { axis: 2, value: -1 }, // ascend: heave is positive-down
  f: { axis: 2, value: 1 },
  q: { axis: 5, value: -1 },
  e: { axis: 5, value: 1 },
  ArrowUp: { axis: 4, value: 1 },
  ArrowDown: { axis: 4, value: -1 },
  ArrowLeft: { axis: 3, value: -1 },
  ArrowRight: { axis: 3, value: 1 },
};

export function isTeleopKey(key: string): boolean {
  return key in BINDINGS || key === " ";
}

/** Resolve the currently pressed key set to six axis values. */
export function axesFromKeys(pressed: ReadonlySet<string>): number[] {
  const axes = new Array(AXES).fill(0);
  for (const key of pressed) {
    const b = BINDINGS[key];
    if (b) axes[b.axis] += b.value;
  }
  return axes.map((v) => Math.max(-1, Math.min(1, v)));
}

export const ALL_ZERO: readonly number[] = Object.freeze(new Array(AXES).fill(0));

export function isAllZero(axes: readonly number[]): boolean {
  return axes.every((v) => v === 0);
}
