/** Pure view-model reducer over server broadcasts.
 *
 * The cockpit never simulates controller logic: everything rendered comes
 * from the latest server message applied here.
 */

import type {
  CandidateEntry,
  SceneMessage,
  ServerMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "lost";

export interface CockpitViewModel {
  connection: ConnectionStatus;
  scene: SceneMessage | null;
  controllerState: string;
  controllerLabel: number | null;
  progress: number | null;
  fixated: number | null;
  candidates: CandidateEntry[];
  highlighted: number;
  setpoints: number[];
  rejected: number;
  latencyUs: number | null;
  lastError: string | null;
  droppedInputs: number;
  broadcasts: number;
}

export function initialViewModel(): CockpitViewModel {
  return {
    connection: "connecting",
    scene: null,
    controllerState: "Idle",
    controllerLabel: null,
    progress: null,
    fixated: null,
    candidates: [],
    highlighted: 0,
    setpoints: [0, 0, 0, 0, 0, 0],
    rejected: 0,
    latencyUs: null,
    lastError: null,
    droppedInputs: 0,
    broadcasts: 0,
  };
}

export function applyServerMessage(
  vm: CockpitViewModel,
  msg: ServerMessage,
): CockpitViewModel {
  switch (msg.type) {
    case "scene":
      return { ...vm, scene: msg };
    case "state": {
      const kMax = vm.scene ? vm.scene.k_max : 3;
      return {
        ...vm,
        controllerState: msg.controller.state,
        controllerLabel: msg.controller.label ?? null,
        progress: msg.controller.progress ?? null,
        fixated: msg.fixated,
        candidates: msg.candidates.slice(0, kMax),
        highlighted: msg.controller.highlighted ?? 0,
        setpoints: msg.setpoints,
        rejected: msg.rejected,
        latencyUs: msg.latency_us,
        broadcasts: vm.broadcasts + 1,
      };
    }
    case "error":
      return { ...vm, lastError: msg.code };
    default:
      return vm;
  }
}

export function setConnection(
  vm: CockpitViewModel,
  connection: ConnectionStatus,
): CockpitViewModel {
  return { ...vm, connection };
}

export function countDroppedInput(vm: CockpitViewModel): CockpitViewModel {
  return { ...vm, droppedInputs: vm.droppedInputs + 1 };
}
