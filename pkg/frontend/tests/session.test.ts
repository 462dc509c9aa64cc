import { describe, expect, it } from "vitest";

import { Session, SocketLike } from "../src/session.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  readyState = 0;
  onopen: ((ev: any) => void) | null = null;
  onclose: ((ev: any) => void) | null = null;
  onerror: ((ev: any) => void) | null = null;
  onmessage: ((ev: any) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closed = true;
    this.readyState = 3;
  }
  open(): void {
    this.readyState = 1;
    this.onopen?.({});
  }
  drop(): void {
    this.readyState = 3;
    this.onclose?.({});
  }
  receive(text: string): void {
    this.onmessage?.({ data: text });
  }
}

function rig() {
  const sockets: FakeSocket[] = [];
  const session = new Session(() => {
    const s = new FakeSocket();
    sockets.push(s);
    return s;
  });
  return { session, sockets };
}

const flush = () => new Promise<void>((resolve) => queueMicrotask(resolve));

describe("session", () => {
  it("tracks connection state", () => {
    const { session, sockets } = rig();
    const states: string[] = [];
    session.onState = (s) => states.push(s);
    session.connect("ws://x");
    sockets[0]!.open();
    sockets[0]!.drop();
    expect(states).toEqual(["connecting", "connected", "disconnected"]);
  });

  it("drops sends while not connected", async () => {
    const { session, sockets } = rig();
    session.send("/cmd/pilot", { axes: [0, 0, 0, 0, 0, 0] });
    await flush();
    expect(sockets).toHaveLength(0);
    session.connect("ws://x");
    session.send("/cmd/pilot", { axes: [1, 0, 0, 0, 0, 0] });
    await flush();
    expect(sockets[0]!.sent).toHaveLength(0); // still connecting
  });

  it("coalesces same-topic sends within one turn, latest wins", async () => {
    const { session, sockets } = rig();
    session.connect("ws://x");
    sockets[0]!.open();
    session.send("/cmd/setpoint", { depth: 1 });
    session.send("/cmd/setpoint", { depth: 2 });
    session.send("/cmd/arm", { armed: true });
    await flush();
    const sent = sockets[0]!.sent.map((s) => JSON.parse(s));
    expect(sent).toHaveLength(2);
    expect(sent[0]).toEqual({ topic: "/cmd/setpoint", payload: { depth: 2 } });
    expect(sent[1]).toEqual({ topic: "/cmd/arm", payload: { armed: true } });
  });

  it("hands parsed messages to the listener and skips junk", () => {
    const { session, sockets } = rig();
    const got: string[] = [];
    session.onMessage = (m) => got.push(m.topic);
    session.connect("ws://x");
    sockets[0]!.open();
    sockets[0]!.receive('{"topic": "/sensors/depth", "timestamp_ns": "1", "payload": {}}');
    sockets[0]!.receive("junk");
    expect(got).toEqual(["/sensors/depth"]);
  });

  it("reports a user close with sending still possible", () => {
    const { session, sockets } = rig();
    let sawCanSend: boolean | null = null;
    session.onDisconnect = (canSend) => (sawCanSend = canSend);
    session.connect("ws://x");
    sockets[0]!.open();
    session.close();
    expect(sawCanSend).toBe(true);
    expect(sockets[0]!.closed).toBe(true);
  });

  it("final sends from the disconnect hook reach the wire on close", async () => {
    const { session, sockets } = rig();
    session.onDisconnect = (canSend) => {
      if (canSend) {
        session.send("/cmd/pilot", { axes: [0, 0, 0, 0, 0, 0] });
        session.send("/cmd/arm", { armed: false });
      }
    };
    session.connect("ws://x");
    sockets[0]!.open();
    session.close();
    await flush();
    const topics = sockets[0]!.sent.map((s) => JSON.parse(s).topic);
    expect(topics).toEqual(["/cmd/pilot", "/cmd/arm"]);
  });

  it("reports a dropped connection with sending impossible, exactly once", () => {
    const { session, sockets } = rig();
    let calls = 0;
    let sawCanSend: boolean | null = null;
    session.onDisconnect = (canSend) => {
      calls += 1;
      sawCanSend = canSend;
    };
    session.connect("ws://x");
    sockets[0]!.open();
    sockets[0]!.drop();
    sockets[0]!.drop();
    expect(calls).toBe(1);
    expect(sawCanSend).toBe(false);
  });

  it("never fires disconnect for a connection that never opened", () => {
    const { session, sockets } = rig();
    let calls = 0;
    session.onDisconnect = () => (calls += 1);
    session.connect("ws://x");
    sockets[0]!.onerror?.({});
    expect(calls).toBe(0);
    expect(session.state).toBe("disconnected");
  });
});
