/** DOM wiring: everything stateful lives in the store/session/teleop
 * modules; this file only moves data between them and the page.
 */

import { renderHreye } from "./hreye.js";
import { Msg, T_TOKEN, TOKENS, Token } from "./protocol.js";
import { buildPatch, submitPatch } from "./reconfig.js";
import { replayLogText } from "./replay.js";
import { Session } from "./session.js";
import { ConsoleStore } from "./store.js";
import { Teleop } from "./teleop.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const store = new ConsoleStore();
const session = new Session((url) => new WebSocket(url));
const teleop = new Teleop((topic, payload) => session.send(topic, payload));

let lastArmed: boolean | null = null;

session.onMessage = (msg: Msg) => {
  store.apply(msg);
  if (store.armed !== lastArmed) {
    lastArmed = store.armed;
    teleop.setEnabled(session.state === "connected" && store.armed === true);
  }
};

session.onState = (state) => {
  el("conn").textContent = state;
  el("conn").className = state;
  teleop.setEnabled(state === "connected" && store.armed === true);
  for (const b of document.querySelectorAll<HTMLButtonElement>("button[data-token]")) {
    b.disabled = state !== "connected";
  }
};

// the one safety rule: session end emits zero axes + disarm exactly once
session.onDisconnect = (canStillSend) => teleop.end(canStillSend);
window.addEventListener("beforeunload", () => session.close());

// -- keyboard -------------------------------------------------------------

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  if (document.activeElement instanceof HTMLInputElement) return;
  if (teleop.keyDown(ev.key)) ev.preventDefault();
  const token = TOKEN_KEYS[ev.key];
  if (token && session.state === "connected") sendToken(token);
});
window.addEventListener("keyup", (ev) => {
  if (teleop.keyUp(ev.key)) ev.preventDefault();
});

// -- token panel ----------------------------------------------------------

const TOKEN_KEYS: Record<string, Token> = {
  "1": "NEXT", "2": "PREV", "3": "SELECT", "4": "BACK", "5": "START_STOP",
};

function sendToken(token: Token): void {
  session.send(T_TOKEN, { token });
}

for (const token of TOKENS) {
  const button = document.querySelector<HTMLButtonElement>(`button[data-token="${token}"]`);
  if (button) button.addEventListener("click", () => sendToken(token));
}

// -- connect / replay controls ---------------------------------------------

el<HTMLButtonElement>("connect").addEventListener("click", () => {
  const url = el<HTMLInputElement>("ws-url").value;
  session.connect(url);
});
el<HTMLButtonElement>("disconnect").addEventListener("click", () => session.close());

el<HTMLInputElement>("log-file").addEventListener("change", async (ev) => {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  const stats = replayLogText(await file.text(), (m) => store.apply(m));
  el("replay-info").textContent =
    `${stats.messages} messages, ${stats.skipped} skipped, ${stats.finalT.toFixed(1)} s`;
  render();
});

// -- reconfiguration editor --------------------------------------------------

el<HTMLButtonElement>("patch-submit").addEventListener("click", async () => {
  const density = parseFloat(el<HTMLInputElement>("density").value);
  const removeRaw = el<HTMLInputElement>("remove-thrusters").value.trim();
  const doc = buildPatch({
    waterDensity: Number.isFinite(density) ? density : undefined,
    removeThrusters: removeRaw ? removeRaw.split(",").map((s) => s.trim()) : undefined,
  });
  const base = el<HTMLInputElement>("http-url").value;
  const result = await submitPatch(base, doc);
  const note = el("patch-result");
  note.textContent = result.applied ? "applied" : result.detail;
  note.className = result.applied ? "ok" : "err";
});

// -- rendering ----------------------------------------------------------------

function fmt(v: number | null, digits = 2): string {
  return v === null ? "--" : v.toFixed(digits);
}

function drawHreye(): void {
  const canvas = el<HTMLCanvasElement>("hreye");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const view = store.hreye ?? renderHreye(null);
  el("hreye-fault").textContent = view.fault ?? "";
  const cx = canvas.width / 2;
  const cy = canvas.height / 2;
  const scale = Math.min(cx, cy) * 0.85;
  for (const dot of view.dots) {
    ctx.beginPath();
    ctx.arc(cx + dot.x * scale, cy - dot.y * scale, dot.ring === "outer" ? 6 : 5, 0, 2 * Math.PI);
    ctx.fillStyle = `rgb(${dot.color[0]},${dot.color[1]},${dot.color[2]})`;
    ctx.fill();
    ctx.strokeStyle = "#333";
    ctx.stroke();
  }
}

function drawDepthStrip(): void {
  const canvas = el<HTMLCanvasElement>("depth-strip");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pts = store.depthStrip;
  if (pts.length < 2) return;
  const t1 = pts[pts.length - 1]!.t;
  const t0 = pts[0]!.t;
  const depths = pts.map((p) => p.depth);
  const dMin = Math.min(...depths) - 0.1;
  const dMax = Math.max(...depths) + 0.1;
  ctx.beginPath();
  for (let i = 0; i < pts.length; i++) {
    const p = pts[i]!;
    const x = ((p.t - t0) / Math.max(t1 - t0, 1e-9)) * canvas.width;
    const y = ((p.depth - dMin) / (dMax - dMin)) * canvas.height;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.strokeStyle = "#06c";
  ctx.lineWidth = 2;
  ctx.stroke();
  ctx.fillStyle = "#888";
  ctx.fillText(`${dMin.toFixed(2)} m`, 4, canvas.height - 4);
  ctx.fillText(`${dMax.toFixed(2)} m`, 4, 12);
}

function render(): void {
  const pose = store.pose;
  el("pose").textContent =
    `depth ${fmt(pose.depth)} m  roll ${fmt(pose.roll)}  pitch ${fmt(pose.pitch)}` +
    `  yaw ${fmt(pose.yaw)}  yaw' ${fmt(pose.yawRate)}`;
  setStale("pose-panel", store.isStale("/sim/estimate"));

  const bars = el("thruster-bars");
  bars.innerHTML = "";
  if (store.thrusters) {
    store.thrusters.ids.forEach((id, i) => {
      const n = store.thrusters!.thrusts[i] ?? 0;
      const us = store.thrusters!.pwm[i];
      const row = document.createElement("div");
      row.className = "bar-row";
      const span = document.createElement("span");
      span.textContent = `${id} ${n.toFixed(1)} N${us !== undefined ? ` ${us.toFixed(0)} us` : ""}`;
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.style.width = `${Math.min(Math.abs(n) / 40, 1) * 100}%`;
      bar.style.background = n >= 0 ? "#2a7" : "#a52";
      row.append(span, bar);
      bars.append(row);
    });
  }
  setStale("thruster-panel", store.isStale("/actuators/thrusters"));

  if (store.battery) {
    el("battery").textContent =
      `${store.battery.voltage.toFixed(1)} V  ${store.battery.current.toFixed(1)} A  ` +
      `${store.battery.energyWh.toFixed(1)} Wh (${(store.battery.fraction * 100).toFixed(0)}%)`;
  }
  setStale("battery-panel", store.isStale("/sensors/battery"));

  el("oled-front").textContent = store.oledFront.join("\n");
  el("oled-side").textContent = store.oledSide.join("\n");
  el("siren").textContent = store.siren
    .slice(-8)
    .map((s) => `[${s.t.toFixed(1)}s] ${s.say}`)
    .join("\n");
  el("armed").textContent =
    store.armed === null ? "unknown" : store.armed ? `ARMED (${store.mode})` : "disarmed";

  const rates = [...store.topicRates().entries()]
    .sort((a, b) => a[0].localeCompare(b[0]))
    .map(([topic, hz]) => `${topic} ${hz.toFixed(1)} Hz`)
    .join("\n");
  el("rates").textContent = rates;

  drawHreye();
  drawDepthStrip();
}

function setStale(id: string, stale: boolean): void {
  el(id).classList.toggle("stale", stale);
}

setInterval(render, 100);
render();
