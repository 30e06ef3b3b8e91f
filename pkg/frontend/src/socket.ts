/** Reconnecting socket wrapper around the JSON protocol.
 *
 * Reconnects with doubling backoff (0.5 s up to 8 s) after a drop, so the
 * session resumes when the service restarts. Sends report success so
 * callers can surface dropped inputs while disconnected.
 */

import type { ClientMessage, ServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SocketHandlers {
  onMessage: (msg: ServerMessage) => void;
  onStatus: (status: "connecting" | "open" | "lost") => void;
}

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;
const SOCKET_OPEN = 1;

export class CockpitSocket {
  private ws: SocketLike | null = null;
  private backoffMs = BACKOFF_START_MS;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(
    private readonly url: string,
    private readonly handlers: SocketHandlers,
    private readonly factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    if (this.closed) return;
    this.handlers.onStatus("connecting");
    let ws: SocketLike;
    try {
      ws = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.handlers.onStatus("open");
    };
    ws.onmessage = (ev) => {
      try {
        this.handlers.onMessage(JSON.parse(String(ev.data)) as ServerMessage);
      } catch {
        /* non-JSON frames are dropped */
      }
    };
    ws.onerror = () => {
      /* the close handler owns recovery */
    };
    ws.onclose = () => {
      if (this.ws !== ws) return;
      this.ws = null;
      if (!this.closed) {
        this.handlers.onStatus("lost");
        this.scheduleReconnect();
      }
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer !== null) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
  }

  /** Returns false when the message had to be dropped (not connected). */
  send(msg: ClientMessage): boolean {
    if (!this.ws || this.ws.readyState !== SOCKET_OPEN) return false;
    try {
      this.ws.send(JSON.stringify(msg));
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.ws?.close();
  }
}
