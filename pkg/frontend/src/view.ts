/**
 * Pure view state for the participant console: a force bar between two
 * target lines plus a phase prompt. Rendering is a separate, thin DOM
 * layer; everything observable about a rendered frame is computed here so
 * it can be tested headlessly.
 */

import { ParticipantFrame } from "./protocol.js";

export interface ViewState {
  connected: boolean;
  barValue: number;   // newtons
  target: number;
  band: number;
  prompt: string;
  trial: number;
  block: number;
  done: boolean;
}

export const initialViewState: ViewState = {
  connected: false,
  barValue: 0,
  target: 0,
  band: 0.5,
  prompt: "connecting...",
  trial: -1,
  block: -1,
  done: false,
};

export function applyFrame(state: ViewState, frame: ParticipantFrame): ViewState {
  return {
    connected: true,
    barValue: frame.f_mean,
    target: frame.target_n,
    band: frame.band_n,
    prompt: frame.done ? "session complete" : frame.prompt,
    trial: frame.trial,
    block: frame.block,
    done: frame.done,
  };
}

export function connectionLost(state: ViewState): ViewState {
  return { ...state, connected: false, prompt: "reconnecting..." };
}

export interface BarGeometry {
  fraction: number;      // bar height as a fraction of full scale
  targetLow: number;     // lower target line, fraction of full scale
  targetHigh: number;    // upper target line
  inBand: boolean;
}

export const FULL_SCALE_N = 20;

/** Bar and target-line positions, clamped to the displayable range. */
export function barGeometry(state: ViewState,
                            fullScale: number = FULL_SCALE_N): BarGeometry {
  const clamp = (v: number) => Math.min(Math.max(v, 0), 1);
  const fraction = clamp(state.barValue / fullScale);
  const targetLow = clamp((state.target - state.band) / fullScale);
  const targetHigh = clamp((state.target + state.band) / fullScale);
  return {
    fraction,
    targetLow,
    targetHigh,
    inBand: Math.abs(state.barValue - state.target) <= state.band,
  };
}
