/** Wire protocol spoken with the controller service. */

export interface CandidateEntry {
  id: number;
  label: string;
  gesture: number | null;
  score: number;
}

export interface ControllerInfo {
  state: string;
  object_id?: number;
  highlighted?: number;
  label?: number;
  hold_windows?: number;
  progress?: number;
}

export interface StateMessage {
  type: "state";
  controller: ControllerInfo;
  fixated: number | null;
  candidates: CandidateEntry[];
  setpoints: number[];
  rejected: number;
  latency_us: number | null;
}

export interface SceneObjectInfo {
  id: number;
  class: string;
  bbox_px: [number, number, number, number];
  grasp_size_m: number;
}

export interface SceneMessage {
  type: "scene";
  width: number;
  height: number;
  objects: SceneObjectInfo[];
  k_max: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
}

export type ServerMessage = StateMessage | SceneMessage | ErrorMessage;

export type ClientMessage =
  | { type: "gaze"; x: number; y: number }
  | { type: "emg_intent"; gesture: number }
  | { type: "cycle" }
  | { type: "release" };

export const GESTURE_NAMES = [
  "rest",
  "cylindrical grip",
  "lateral pinch",
  "tripod pinch",
  "open hand",
  "index point",
];
