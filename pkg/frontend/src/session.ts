/** WebSocket session: connection state, outbound commands, inbound fanout.
 *
 * The socket type is injected so tests can drive the session without a
 * browser. Outbound sends coalesce latest-wins per topic inside one event
 * loop turn; command topics are low rate, so this only matters when the
 * UI floods (a held slider), never for teleop ticks.
 */

import { Msg, parseWsMessage, serializeCommand } from "./protocol.js";

export type SessionState = "disconnected" | "connecting" | "connected";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  // event types stay loose: browser WebSocket and the node "ws" package
  // disagree on the event classes, and the session only reads .data
  onopen: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

const OPEN = 1;

export class Session {
  state: SessionState = "disconnected";
  private sock: SocketLike | null = null;
  private pending = new Map<string, unknown>();
  private flushScheduled = false;

  onMessage: (msg: Msg) => void = () => {};
  onState: (state: SessionState) => void = () => {};
  /** Fires exactly once per established connection as it goes away. */
  onDisconnect: (canStillSend: boolean) => void = () => {};

  constructor(private makeSocket: SocketFactory) {}

  connect(url: string): void {
    if (this.state !== "disconnected") return;
    this.setState("connecting");
    const sock = this.makeSocket(url);
    this.sock = sock;
    sock.onopen = () => this.setState("connected");
    sock.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const msg = parseWsMessage(ev.data);
      if (msg) this.onMessage(msg);
    };
    sock.onclose = () => this.dropped();
    sock.onerror = () => {
      // error is followed by close in browsers; treat a never-opened
      // socket as immediately dropped so the UI does not hang connecting
      if (this.state === "connecting") this.dropped();
    };
  }

  /** User-initiated teardown; gives listeners a last chance to send. */
  close(): void {
    const sock = this.sock;
    if (!sock) return;
    if (this.state === "connected") {
      this.onDisconnect(true);
      this.flush();
    }
    this.sock = null;
    sock.onclose = null;
    sock.close();
    this.setState("disconnected");
  }

  send(topic: string, payload: unknown): void {
    if (this.state !== "connected") return;
    this.pending.set(topic, payload);
    if (!this.flushScheduled) {
      this.flushScheduled = true;
      queueMicrotask(() => this.flush());
    }
  }

  private flush(): void {
    this.flushScheduled = false;
    const sock = this.sock;
    if (!sock || sock.readyState !== OPEN) {
      this.pending.clear();
      return;
    }
    for (const [topic, payload] of this.pending) {
      sock.send(serializeCommand(topic, payload));
    }
    this.pending.clear();
  }

  private dropped(): void {
    if (!this.sock) return;
    this.sock = null;
    const hadConnection = this.state === "connected";
    this.setState("disconnected");
    if (hadConnection) this.onDisconnect(false);
  }

  private setState(s: SessionState): void {
    if (s === this.state) return;
    this.state = s;
    this.onState(s);
  }
}
