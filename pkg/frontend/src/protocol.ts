/**
 * Wire protocol of the session service.
 *
 * Two WebSocket channels ship newline-less JSON frames:
 *   /participant  — projected frames only (this schema deliberately has
 *                   no tactor, stimulus or per-side fields)
 *   /experimenter — full frames
 *
 * Input messages are {"grip": newtons} sent on either channel.
 */

export interface ParticipantFrame {
  t: number;
  f_mean: number;
  target_n: number;
  band_n: number;
  prompt: string;
  trial: number;
  block: number;
  done: boolean;
}

export interface ExperimenterFrame extends ParticipantFrame {
  phase: string;
  f_grip_1: number;
  f_grip_2: number;
  tactor_x_mm: number;
  stimulus_active: boolean;
}

export const PARTICIPANT_FIELDS = [
  "t", "f_mean", "target_n", "band_n", "prompt", "trial", "block", "done",
] as const;

/** Fields that would leak the stimulus; the participant decoder rejects them. */
export const FORBIDDEN_PARTICIPANT_FIELDS = [
  "phase", "f_grip_1", "f_grip_2", "tactor_x_mm", "tactor_y_mm",
  "stimulus_active", "stimulus_onset_t", "stimulus_end_t",
] as const;

function requireNumber(obj: Record<string, unknown>, key: string): number {
  const value = obj[key];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new Error(`frame field ${key} is not a finite number`);
  }
  return value;
}

/**
 * Decode a participant frame, enforcing the projection at runtime: a frame
 * carrying any stimulus-revealing field is rejected outright, so a
 * misconfigured server cannot leak through this client.
 */
export function decodeParticipantFrame(raw: unknown): ParticipantFrame {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("frame is not an object");
  }
  const obj = raw as Record<string, unknown>;
  for (const key of FORBIDDEN_PARTICIPANT_FIELDS) {
    if (key in obj) {
      throw new Error(`participant frame contains forbidden field ${key}`);
    }
  }
  return {
    t: requireNumber(obj, "t"),
    f_mean: requireNumber(obj, "f_mean"),
    target_n: requireNumber(obj, "target_n"),
    band_n: requireNumber(obj, "band_n"),
    prompt: String(obj.prompt ?? ""),
    trial: requireNumber(obj, "trial"),
    block: requireNumber(obj, "block"),
    done: Boolean(obj.done),
  };
}

export function decodeExperimenterFrame(raw: unknown): ExperimenterFrame {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("frame is not an object");
  }
  const obj = raw as Record<string, unknown>;
  return {
    t: requireNumber(obj, "t"),
    f_mean: requireNumber(obj, "f_mean"),
    target_n: requireNumber(obj, "target_n"),
    band_n: requireNumber(obj, "band_n"),
    prompt: String(obj.prompt ?? ""),
    trial: requireNumber(obj, "trial"),
    block: requireNumber(obj, "block"),
    done: Boolean(obj.done),
    phase: String(obj.phase ?? ""),
    f_grip_1: requireNumber(obj, "f_grip_1"),
    f_grip_2: requireNumber(obj, "f_grip_2"),
    tactor_x_mm: requireNumber(obj, "tactor_x_mm"),
    stimulus_active: Boolean(obj.stimulus_active),
  };
}

export function gripMessage(grip: number): string {
  return JSON.stringify({ grip });
}
