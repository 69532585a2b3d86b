/**
 * Participant console: force bar between target lines, phase prompts,
 * drag/arrow-key grip input. Connects to /participant only; the decoder
 * rejects any frame that carries stimulus-revealing fields.
 */

import { decodeParticipantFrame, gripMessage } from "./protocol.js";
import { GripInput } from "./input.js";
import { ViewState, applyFrame, barGeometry, connectionLost,
         initialViewState } from "./view.js";

const els = {
  bar: document.getElementById("bar") as HTMLElement,
  bandLow: document.getElementById("band-low") as HTMLElement,
  bandHigh: document.getElementById("band-high") as HTMLElement,
  prompt: document.getElementById("prompt") as HTMLElement,
  trial: document.getElementById("trial") as HTMLElement,
  overlay: document.getElementById("overlay") as HTMLElement,
};

let state: ViewState = initialViewState;
let socket: WebSocket | null = null;
let input: GripInput | null = null;

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? "8765";
  return `ws://${host}:${port}/participant`;
}

export function render(view: ViewState): void {
  const geo = barGeometry(view);
  els.bar.style.height = `${(geo.fraction * 100).toFixed(2)}%`;
  els.bar.classList.toggle("in-band", geo.inBand);
  els.bandLow.style.bottom = `${(geo.targetLow * 100).toFixed(2)}%`;
  els.bandHigh.style.bottom = `${(geo.targetHigh * 100).toFixed(2)}%`;
  els.prompt.textContent = view.prompt;
  els.trial.textContent = view.trial >= 0 ? `trial ${view.trial + 1}` : "";
  els.overlay.style.display = view.connected ? "none" : "flex";
}

function connect(): void {
  socket = new WebSocket(wsUrl());
  input = new GripInput((grip) => {
    if (socket && socket.readyState === WebSocket.OPEN) {
      socket.send(gripMessage(grip));
    }
  });

  socket.onmessage = (event) => {
    state = applyFrame(state, decodeParticipantFrame(JSON.parse(event.data)));
  };
  socket.onclose = () => {
    state = connectionLost(state);
    input = null; // input disabled while disconnected
    setTimeout(connect, 1000);
  };
}

window.addEventListener("pointerdown", (e) => input?.pointerDown(e.clientY));
window.addEventListener("pointermove", (e) => input?.pointerMove(e.clientY));
window.addEventListener("pointerup", () => input?.pointerUp());
window.addEventListener("keydown", (e) => {
  if (e.key === "ArrowUp") input?.key(1);
  if (e.key === "ArrowDown") input?.key(-1);
});

function loop(): void {
  input?.tick();
  render(state);
  requestAnimationFrame(loop);
}

connect();
requestAnimationFrame(loop);
