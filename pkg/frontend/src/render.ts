/** Canvas + DOM painting of the view model. Pure output: nothing here
 * feeds back into control decisions. */

import type { CockpitViewModel } from "./state.js";
import { GESTURE_NAMES } from "./protocol.js";

export interface Panels {
  badge: HTMLElement;
  banner: HTMLElement;
  candidates: HTMLElement;
  bars: HTMLElement[];
  rejected: HTMLElement;
  latency: HTMLElement;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  vm: CockpitViewModel,
  gaze: { x: number; y: number } | null,
): void {
  const { canvas } = ctx;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!vm.scene) return;
  const sx = canvas.width / vm.scene.width;
  const sy = canvas.height / vm.scene.height;

  for (const obj of vm.scene.objects) {
    const [x, y, w, h] = obj.bbox_px;
    const fixated = vm.fixated === obj.id;
    ctx.strokeStyle = fixated ? "#ffd166" : "#4c6a8a";
    ctx.lineWidth = fixated ? 3 : 1;
    ctx.fillStyle = fixated ? "rgba(255,209,102,0.18)" : "rgba(76,106,138,0.12)";
    ctx.fillRect(x * sx, y * sy, w * sx, h * sy);
    ctx.strokeRect(x * sx, y * sy, w * sx, h * sy);
    ctx.fillStyle = fixated ? "#ffd166" : "#9db4cc";
    ctx.font = "11px sans-serif";
    ctx.fillText(`${obj.id} ${obj.class}`, x * sx + 2, y * sy - 3);
  }
  if (gaze) {
    ctx.strokeStyle = "#ef476f";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(gaze.x * sx, gaze.y * sy, 7, 0, 2 * Math.PI);
    ctx.moveTo(gaze.x * sx - 11, gaze.y * sy);
    ctx.lineTo(gaze.x * sx + 11, gaze.y * sy);
    ctx.moveTo(gaze.x * sx, gaze.y * sy - 11);
    ctx.lineTo(gaze.x * sx, gaze.y * sy + 11);
    ctx.stroke();
  }
}

export function renderPanels(panels: Panels, vm: CockpitViewModel): void {
  panels.badge.textContent = vm.controllerState;
  panels.badge.dataset.state = vm.controllerState;

  if (vm.connection === "open") {
    panels.banner.hidden = true;
  } else {
    panels.banner.hidden = false;
    panels.banner.textContent =
      vm.connection === "lost"
        ? `connection lost, retrying... (${vm.droppedInputs} inputs dropped)`
        : "connecting...";
  }

  const rows = vm.candidates.map((c, i) => {
    const mark = i === vm.highlighted ? "&#9656;" : "&nbsp;";
    const pct = Math.round(c.score * 100);
    const key = c.gesture !== null ? `[${c.gesture + 1}]` : "[-]";
    return `<li class="${i === vm.highlighted ? "focus" : ""}">` +
      `${mark} ${key} ${c.label} <span>${pct}%</span></li>`;
  });
  panels.candidates.innerHTML =
    rows.join("") || "<li class='empty'>fixate an object</li>";

  vm.setpoints.forEach((value, i) => {
    const bar = panels.bars[i];
    if (bar) bar.style.height = `${Math.round(value * 100)}%`;
  });

  panels.rejected.textContent = String(vm.rejected);
  panels.latency.textContent =
    vm.latencyUs === null ? "-" : `${(vm.latencyUs / 1000).toFixed(2)} ms`;

  const label = vm.controllerLabel;
  if (label !== null && GESTURE_NAMES[label]) {
    panels.badge.textContent += ` · ${GESTURE_NAMES[label]}`;
  }
}
