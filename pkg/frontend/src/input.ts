/** Pointer and keyboard bindings.
 *
 * Pointer motion is the gaze, throttled to 50 Hz. Holding keys 1-6 streams
 * the matching EMG intent every 50 ms, standing in for sustained muscle
 * activation so the confirmation dwell is operable by hand. Tab cycles
 * candidates, Space releases.
 */

import type { ClientMessage } from "./protocol.js";

export const GAZE_MIN_GAP_MS = 20; // 50 Hz ceiling
export const INTENT_REPEAT_MS = 50;

export type SendFn = (msg: ClientMessage) => boolean;

export class InputController {
  private lastGazeAt = -Infinity;
  private heldGesture: number | null = null;
  private repeatTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly send: SendFn,
    private readonly onDropped: () => void,
  ) {}

  private deliver(msg: ClientMessage): void {
    if (!this.send(msg)) this.onDropped();
  }

  /** Gaze coordinates are in scene pixels; callers map from client space. */
  pointerMoved(x: number, y: number, nowMs: number): boolean {
    if (nowMs - this.lastGazeAt < GAZE_MIN_GAP_MS) return false;
    this.lastGazeAt = nowMs;
    this.deliver({ type: "gaze", x, y });
    return true;
  }

  keyDown(key: string, repeat = false): void {
    if (repeat) return; // the interval below does the repeating
    if (key >= "1" && key <= "6") {
      const gesture = Number(key) - 1;
      if (this.heldGesture === gesture) return;
      this.stopRepeat();
      this.heldGesture = gesture;
      this.deliver({ type: "emg_intent", gesture });
      this.repeatTimer = setInterval(
        () => this.deliver({ type: "emg_intent", gesture }),
        INTENT_REPEAT_MS,
      );
    } else if (key === "Tab") {
      this.deliver({ type: "cycle" });
    } else if (key === " " || key === "Space") {
      this.deliver({ type: "release" });
    }
  }

  keyUp(key: string): void {
    if (key >= "1" && key <= "6" && this.heldGesture === Number(key) - 1) {
      this.stopRepeat();
    }
  }

  private stopRepeat(): void {
    if (this.repeatTimer !== null) {
      clearInterval(this.repeatTimer);
      this.repeatTimer = null;
    }
    this.heldGesture = null;
  }

  detach(): void {
    this.stopRepeat();
  }
}
