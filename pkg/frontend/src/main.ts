/** Dashboard wiring: SSE -> reducer -> throttled panel renders; controls -> POST. */

import { ControlClient, ControlError } from "./control.js";
import { drawCoherence } from "./panels/coherence.js";
import { drawGraph } from "./panels/graph.js";
import { drawSignals } from "./panels/signals.js";
import { drawSpectra } from "./panels/spectra.js";
import { SseClient } from "./sse.js";
import {
  displayedCoherence,
  initialState,
  reduce,
  renderedThresholds,
  type ViewState,
} from "./state.js";

const RENDER_INTERVAL_MS = 100; // panels repaint at <= 10 Hz

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main(): void {
  const base = window.location.origin;
  const control = new ControlClient(base);
  let state: ViewState = initialState();
  let renderQueued = false;
  let lastRender = 0;

  const banner = el<HTMLDivElement>("banner");
  const coherenceLabel = el<HTMLDivElement>("coherence-label");
  const canvases = {
    signals: el<HTMLCanvasElement>("signals"),
    spectra: el<HTMLCanvasElement>("spectra"),
    graph: el<HTMLCanvasElement>("graph"),
    coherence: el<HTMLCanvasElement>("coherence"),
  };
  const thetaOn = el<HTMLInputElement>("theta-on");
  const thetaOff = el<HTMLInputElement>("theta-off");
  const thetaReadout = el<HTMLSpanElement>("theta-readout");
  const pairSelect = el<HTMLSelectElement>("pair-select");
  const pinButton = el<HTMLButtonElement>("pin");
  const unpinButton = el<HTMLButtonElement>("unpin");
  const pauseButton = el<HTMLButtonElement>("pause");
  const modeSelect = el<HTMLSelectElement>("mode");
  const controlMessage = el<HTMLSpanElement>("control-message");

  function showControlError(err: unknown): void {
    const message =
      err instanceof ControlError
        ? err.offline
          ? "engine offline; command not sent"
          : err.message
        : String(err);
    controlMessage.textContent = message;
    controlMessage.classList.add("error");
  }

  function clearControlMessage(): void {
    controlMessage.textContent = "";
    controlMessage.classList.remove("error");
  }

  function render(): void {
    renderQueued = false;
    lastRender = performance.now();
    banner.textContent = `connection: ${state.connection}` +
      (state.lastTick !== null ? ` | tick ${state.lastTick}` : "") +
      (state.paused ? " | ingest paused" : "");
    banner.className = state.connection === "live" ? "banner live" : "banner down";

    drawSignals(canvases.signals, state.signals);
    drawSpectra(canvases.spectra, state.spectra);
    drawGraph(canvases.graph, state.graph);
    drawCoherence(canvases.coherence, displayedCoherence(state), (text) => {
      coherenceLabel.textContent = text;
    });

    const acked = renderedThresholds(state);
    if (acked && !state.pendingThresholds) {
      // sliders always show the engine's acknowledged values
      thetaOn.value = acked.on.toFixed(2);
      thetaOff.value = acked.off.toFixed(2);
    }
    thetaReadout.textContent = acked
      ? `on=${acked.on.toFixed(2)} off=${acked.off.toFixed(2)}` +
        (state.pendingThresholds ? " (applying...)" : "")
      : "";
    pauseButton.textContent = state.paused ? "resume" : "pause";

    if (state.graph && pairSelect.options.length !== expectedPairCount(state)) {
      rebuildPairOptions(state);
    }
  }

  function expectedPairCount(s: ViewState): number {
    const nodes = s.graph?.nodes.length ?? 0;
    return (nodes * (nodes - 1)) / 2;
  }

  function rebuildPairOptions(s: ViewState): void {
    const nodes = s.graph?.nodes ?? [];
    pairSelect.innerHTML = "";
    for (let i = 0; i < nodes.length; i++) {
      for (let j = i + 1; j < nodes.length; j++) {
        const option = document.createElement("option");
        option.value = `${nodes[i]}|${nodes[j]}`;
        option.textContent = `${nodes[i]} - ${nodes[j]}`;
        pairSelect.appendChild(option);
      }
    }
  }

  function scheduleRender(): void {
    if (renderQueued) return;
    renderQueued = true;
    const wait = Math.max(0, RENDER_INTERVAL_MS - (performance.now() - lastRender));
    window.setTimeout(() => requestAnimationFrame(render), wait);
  }

  function dispatch(action: Parameters<typeof reduce>[1]): void {
    state = reduce(state, action);
    scheduleRender();
  }

  const sse = new SseClient({
    url: `${base}/events`,
    onEvent: (name, data) => dispatch({ type: "sse", event: name, data }),
    onStatus: (status) => dispatch({ type: "connection", status }),
  });
  sse.connect();

  const sendThresholds = () => {
    const on = Number(thetaOn.value);
    const off = Number(thetaOff.value);
    dispatch({ type: "thresholds-sent", on, off });
    control
      .setThreshold(on, off)
      .then(clearControlMessage)
      .catch(showControlError);
  };
  thetaOn.addEventListener("change", sendThresholds);
  thetaOff.addEventListener("change", sendThresholds);

  pinButton.addEventListener("click", () => {
    const [a, b] = pairSelect.value.split("|");
    control.pinPair(a, b).then(clearControlMessage).catch(showControlError);
  });
  unpinButton.addEventListener("click", () => {
    const [a, b] = pairSelect.value.split("|");
    control.unpinPair(a, b).then(clearControlMessage).catch(showControlError);
  });
  pauseButton.addEventListener("click", () => {
    const action = state.paused ? control.resume() : control.pause();
    action.then(clearControlMessage).catch(showControlError);
  });
  modeSelect.addEventListener("change", () => {
    control
      .setMode(modeSelect.value as "magnitude" | "complex")
      .then(clearControlMessage)
      .catch(showControlError);
  });
}

main();
