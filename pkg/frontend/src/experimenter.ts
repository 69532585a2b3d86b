/**
 * Experimenter console: full telemetry -- numeric panel, rolling per-side
 * force traces and a tactor-position strip.
 */

import { ExperimenterFrame, decodeExperimenterFrame } from "./protocol.js";

const HISTORY = 600; // ~18 s at 33 Hz

const els = {
  phase: document.getElementById("phase") as HTMLElement,
  numbers: document.getElementById("numbers") as HTMLElement,
  forces: document.getElementById("forces") as HTMLCanvasElement,
  tactor: document.getElementById("tactor") as HTMLCanvasElement,
};

const history: ExperimenterFrame[] = [];
let latest: ExperimenterFrame | null = null;

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? "8765";
  return `ws://${host}:${port}/experimenter`;
}

function connect(): void {
  const socket = new WebSocket(wsUrl());
  socket.onmessage = (event) => {
    latest = decodeExperimenterFrame(JSON.parse(event.data));
    history.push(latest);
    if (history.length > HISTORY) history.shift();
  };
  socket.onclose = () => setTimeout(connect, 1000);
}

function drawTrace(canvas: HTMLCanvasElement,
                   series: Array<{ value: number; color: string }[]>,
                   low: number, high: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!series.length) return;
  const nLines = series[0].length;
  for (let line = 0; line < nLines; line += 1) {
    ctx.beginPath();
    ctx.strokeStyle = series[series.length - 1][line].color;
    series.forEach((row, k) => {
      const x = (k / (HISTORY - 1)) * width;
      const y = height - ((row[line].value - low) / (high - low)) * height;
      if (k === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

function render(): void {
  if (latest) {
    els.phase.textContent = `${latest.phase}${latest.stimulus_active ? " (tactor moving)" : ""}`;
    els.numbers.textContent =
      `trial ${latest.trial + 1}  target ${latest.target_n.toFixed(1)} N  ` +
      `mean ${latest.f_mean.toFixed(2)} N  ` +
      `finger ${latest.f_grip_1.toFixed(2)} N  thumb ${latest.f_grip_2.toFixed(2)} N  ` +
      `tactor ${latest.tactor_x_mm.toFixed(3)} mm`;
    drawTrace(els.forces, history.map((f) => [
      { value: f.f_grip_1, color: "#d95f02" },
      { value: f.f_grip_2, color: "#1b9e77" },
      { value: f.f_mean, color: "#222" },
    ]), 0, 12);
    drawTrace(els.tactor, history.map((f) => [
      { value: f.tactor_x_mm, color: "#7570b3" },
    ]), -0.2, 1.7);
  }
  requestAnimationFrame(render);
}

connect();
requestAnimationFrame(render);
