import { describe, expect, it } from "vitest";

import {
  applyServerMessage,
  countDroppedInput,
  initialViewModel,
  setConnection,
} from "../src/state.js";
import type {
  SceneMessage,
  ServerMessage,
  StateMessage,
} from "../src/protocol.js";

const scene: SceneMessage = {
  type: "scene",
  width: 960,
  height: 720,
  k_max: 3,
  objects: [
    { id: 0, class: "cup", bbox_px: [100, 100, 60, 80], grasp_size_m: 0.08 },
  ],
};

function stateMsg(partial: Partial<StateMessage> = {}): StateMessage {
  return {
    type: "state",
    controller: { state: "Idle" },
    fixated: null,
    candidates: [],
    setpoints: [0, 0, 0, 0, 0, 0],
    rejected: 0,
    latency_us: null,
    ...partial,
  };
}

describe("view model reducer", () => {
  it("stores the scene document", () => {
    const vm = applyServerMessage(initialViewModel(), scene);
    expect(vm.scene?.objects).toHaveLength(1);
    expect(vm.scene?.k_max).toBe(3);
  });

  it("applies state broadcasts", () => {
    let vm = applyServerMessage(initialViewModel(), scene);
    vm = applyServerMessage(
      vm,
      stateMsg({
        controller: { state: "Armed", object_id: 0, highlighted: 1 },
        fixated: 0,
        candidates: [
          { id: 1, label: "cylindrical_grip", gesture: 1, score: 0.6 },
          { id: 3, label: "tripod_pinch", gesture: 3, score: 0.4 },
        ],
        rejected: 2,
        latency_us: 850,
      }),
    );
    expect(vm.controllerState).toBe("Armed");
    expect(vm.fixated).toBe(0);
    expect(vm.candidates).toHaveLength(2);
    expect(vm.highlighted).toBe(1);
    expect(vm.rejected).toBe(2);
    expect(vm.latencyUs).toBe(850);
    expect(vm.broadcasts).toBe(1);
  });

  it("never displays more candidates than k_max", () => {
    let vm = applyServerMessage(initialViewModel(), scene);
    const crowded = Array.from({ length: 5 }, (_, i) => ({
      id: i,
      label: `p${i}`,
      gesture: i,
      score: 0.2,
    }));
    vm = applyServerMessage(vm, stateMsg({ candidates: crowded }));
    expect(vm.candidates.length).toBeLessThanOrEqual(3);
  });

  it("records protocol errors without crashing", () => {
    const vm = applyServerMessage(initialViewModel(), {
      type: "error",
      code: "bad_message",
    });
    expect(vm.lastError).toBe("bad_message");
  });

  it("ignores unknown message types", () => {
    const vm = initialViewModel();
    const unknown = { type: "warp" } as unknown as ServerMessage;
    expect(applyServerMessage(vm, unknown)).toEqual(vm);
  });

  it("tracks connection status and dropped inputs", () => {
    let vm = setConnection(initialViewModel(), "lost");
    expect(vm.connection).toBe("lost");
    vm = countDroppedInput(countDroppedInput(vm));
    expect(vm.droppedInputs).toBe(2);
  });

  it("setpoints follow broadcasts only", () => {
    let vm = applyServerMessage(initialViewModel(), scene);
    vm = applyServerMessage(
      vm,
      stateMsg({ setpoints: [0.8, 0.8, 0.8, 0.8, 0.8, 0.2] }),
    );
    expect(vm.setpoints).toEqual([0.8, 0.8, 0.8, 0.8, 0.8, 0.2]);
  });
});
