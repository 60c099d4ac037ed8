/** Shared wire types mirroring the service API. */

export type ConditionMode =
  | "FIRST_FRAME_RGB"
  | "FIRST_FRAME_MULTIMODAL"
  | "POINT"
  | "TRAJ_2D"
  | "TRAJ_3D"
  | "TRAJ_3D_FEAT";

export const ALL_MODES: ConditionMode[] = [
  "FIRST_FRAME_RGB",
  "FIRST_FRAME_MULTIMODAL",
  "POINT",
  "TRAJ_2D",
  "TRAJ_3D",
  "TRAJ_3D_FEAT",
];

/** Does the mode consume a trajectory (POINT and above on the ladder)? */
export function modeNeedsTrajectory(mode: ConditionMode): boolean {
  return mode !== "FIRST_FRAME_RGB" && mode !== "FIRST_FRAME_MULTIMODAL";
}

/** One trajectory sample: integer pixels plus relative depth in [0, 1]. */
export type TrajPoint = [number, number, number];

export interface TrajectoryJSON {
  points: TrajPoint[];
}

/** Freehand stroke vertex with its depth slider value. */
export interface SketchVertex {
  x: number;
  y: number;
  d: number;
}

export interface GenerateRequest {
  mode: ConditionMode;
  episode_id: string;
  trajectory?: TrajectoryJSON;
  caption?: string;
  checkpoint: string;
  steps: number;
  guidance_scale: number;
  seed: number;
}

export interface Job {
  id: string;
  kind: string;
  state: "QUEUED" | "RUNNING" | "DONE" | "FAILED";
  payload: Record<string, unknown>;
  result: { result: string; caption: string; meta: ResultMeta } | null;
  error: string | null;
}

export interface ResultMeta {
  frames: number;
  height: number;
  width: number;
  fps: number;
  depth: boolean;
  mode: ConditionMode;
  caption: string;
}

export interface EpisodeEntry {
  dir: string;
  seed: number;
}

export interface EpisodeList {
  episodes: EpisodeEntry[];
  frames: number;
  height: number;
  width: number;
  fps: number;
}

export interface ApiErrorBody {
  error: string;
  field?: string;
}
