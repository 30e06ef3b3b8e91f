/** Cockpit entry point: wire socket, inputs, and the render loop.
 *
 * The endpoint defaults to /ws on the serving host and can be overridden
 * with ?ws=ws://host:port/ws. Broadcasts are coalesced: the loop paints
 * the latest view model once per animation frame.
 */

import { CockpitSocket } from "./socket.js";
import { InputController } from "./input.js";
import {
  applyServerMessage,
  countDroppedInput,
  initialViewModel,
  setConnection,
} from "./state.js";
import { drawScene, renderPanels } from "./render.js";

function endpoint(): string {
  const param = new URLSearchParams(window.location.search).get("ws");
  if (param) return param;
  const scheme = window.location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${window.location.host}/ws`;
}

function main(): void {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const panels = {
    badge: document.getElementById("badge")!,
    banner: document.getElementById("banner")!,
    candidates: document.getElementById("candidates")!,
    bars: Array.from(document.querySelectorAll<HTMLElement>(".bar-fill")),
    rejected: document.getElementById("rejected")!,
    latency: document.getElementById("latency")!,
  };

  let vm = initialViewModel();
  let gaze: { x: number; y: number } | null = null;

  const socket = new CockpitSocket(endpoint(), {
    onMessage: (msg) => {
      vm = applyServerMessage(vm, msg);
      if (msg.type === "scene") {
        canvas.width = msg.width;
        canvas.height = msg.height;
      }
    },
    onStatus: (status) => {
      vm = setConnection(vm, status);
    },
  });
  socket.connect();

  const input = new InputController(
    (msg) => socket.send(msg),
    () => {
      vm = countDroppedInput(vm);
    },
  );

  canvas.addEventListener("pointermove", (ev) => {
    if (!vm.scene) return;
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * vm.scene.width;
    const y = ((ev.clientY - rect.top) / rect.height) * vm.scene.height;
    gaze = { x, y };
    input.pointerMoved(x, y, performance.now());
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Tab" || ev.key === " ") ev.preventDefault();
    input.keyDown(ev.key, ev.repeat);
  });
  window.addEventListener("keyup", (ev) => input.keyUp(ev.key));

  const paint = () => {
    drawScene(ctx, vm, gaze);
    renderPanels(panels, vm);
    requestAnimationFrame(paint);
  };
  requestAnimationFrame(paint);
}

main();
