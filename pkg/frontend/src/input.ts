/**
 * Pointer/keyboard grip input.
 *
 * A vertical drag (or up/down keys) maps to a grip force in [0, 20] N.
 * The value HOLDS when input stops -- grip is a sustained posture, not a
 * spring-loaded control. Messages are coalesced to at most one per
 * min-send interval, with periodic keepalive resends of the held value so
 * the service's stall detector sees a live channel.
 */

export interface InputConfig {
  maxGrip: number;          // newtons at the top of the range
  sensitivity: number;      // newtons per pixel of vertical drag
  keyStep: number;          // newtons per arrow-key press
  minSendIntervalMs: number;  // coalescing floor (<= 100 Hz)
  keepaliveMs: number;      // resend the held value this often
}

export const defaultInputConfig: InputConfig = {
  maxGrip: 20,
  sensitivity: 0.05,
  keyStep: 0.25,
  minSendIntervalMs: 10,
  keepaliveMs: 100,
};

export class GripInput {
  grip = 0;
  private dragging = false;
  private lastY = 0;
  private lastSentValue: number | null = null;
  private lastSendAt = -Infinity;

  constructor(private send: (grip: number) => void,
              private config: InputConfig = defaultInputConfig,
              private now: () => number = () => performance.now()) {}

  private clamp(value: number): number {
    return Math.min(Math.max(value, 0), this.config.maxGrip);
  }

  pointerDown(y: number): void {
    this.dragging = true;
    this.lastY = y;
  }

  pointerMove(y: number): void {
    if (!this.dragging) return;
    // dragging up (smaller y) increases grip
    this.grip = this.clamp(this.grip + (this.lastY - y) * this.config.sensitivity);
    this.lastY = y;
    this.maybeSend();
  }

  pointerUp(): void {
    this.dragging = false; // value holds
  }

  key(direction: 1 | -1): void {
    this.grip = this.clamp(this.grip + direction * this.config.keyStep);
    this.maybeSend();
  }

  setGrip(value: number): void {
    this.grip = this.clamp(value);
    this.maybeSend();
  }

  /** Call periodically (e.g. each animation frame) for keepalive resends. */
  tick(): void {
    const t = this.now();
    if (t - this.lastSendAt >= this.config.keepaliveMs) {
      this.forceSend();
    }
  }

  private maybeSend(): void {
    const t = this.now();
    if (this.grip === this.lastSentValue) return;
    if (t - this.lastSendAt < this.config.minSendIntervalMs) return;
    this.forceSend();
  }

  private forceSend(): void {
    this.send(this.grip);
    this.lastSentValue = this.grip;
    this.lastSendAt = this.now();
  }
}
