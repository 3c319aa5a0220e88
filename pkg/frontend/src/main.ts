/** DOM wiring for the studio page: canvas, transport controls, and the
 * library panel for picking source strokes to insert or replace with. */

import { StudioApi } from "./api.js";
import { renderCanvas } from "./canvasRenderer.js";
import { SessionStore } from "./session.js";
import type { StrokePayload } from "./types.js";
import { strokePoints, boundsOfPoints, fitViewport, toPixels } from "./viewport.js";

const api = new StudioApi(
  (window as { SKETCHHARP_API?: string }).SKETCHHARP_API ?? "",
);
const store = new SessionStore(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("canvas");
const ctx = canvas.getContext("2d")!;
const stepBtn = el<HTMLButtonElement>("step");
const autoBtn = el<HTMLButtonElement>("autoplay");
const pauseBtn = el<HTMLButtonElement>("pause");
const eraseBtn = el<HTMLButtonElement>("erase");
const retractBtn = el<HTMLButtonElement>("retract");
const insertBtn = el<HTMLButtonElement>("insert");
const replaceBtn = el<HTMLButtonElement>("replace");
const newBtn = el<HTMLButtonElement>("new-session");
const seedInput = el<HTMLInputElement>("seed");
const categorySelect = el<HTMLSelectElement>("category");
const libraryDiv = el<HTMLDivElement>("library");
const toast = el<HTMLDivElement>("toast");

function drawLibraryThumb(stroke: StrokePayload, node: HTMLCanvasElement): void {
  const c = node.getContext("2d")!;
  c.clearRect(0, 0, node.width, node.height);
  const pts = strokePoints(stroke);
  const vp = fitViewport(boundsOfPoints(pts), node.width, node.height, 6);
  c.strokeStyle = "#1a1a1a";
  c.lineWidth = 1.5;
  c.beginPath();
  pts.forEach((p, i) => {
    const px = toPixels(vp, p.x, p.y);
    if (i === 0) c.moveTo(px.x, px.y);
    else c.lineTo(px.x, px.y);
  });
  c.stroke();
}

async function refreshLibrary(): Promise<void> {
  const category = categorySelect.value;
  if (!category) return;
  const { strokes } = await api.libraryStrokes(category, 8);
  libraryDiv.replaceChildren();
  for (const stroke of strokes) {
    const thumb = document.createElement("canvas");
    thumb.width = 72;
    thumb.height = 72;
    thumb.className = "thumb";
    thumb.draggable = true;
    drawLibraryThumb(stroke, thumb);
    thumb.addEventListener("click", () => {
      store.selectLibraryStroke(stroke);
      for (const other of Array.from(libraryDiv.children)) other.classList.remove("selected");
      thumb.classList.add("selected");
    });
    thumb.addEventListener("dragstart", (ev) => {
      store.selectLibraryStroke(stroke);
      ev.dataTransfer?.setData("text/plain", "stroke");
    });
    libraryDiv.appendChild(thumb);
  }
}

canvas.addEventListener("dragover", (ev) => ev.preventDefault());
canvas.addEventListener("drop", (ev) => {
  ev.preventDefault();
  void store.insertSelected();
});

stepBtn.addEventListener("click", () => void store.step());
autoBtn.addEventListener("click", () => store.startAutoPlay(350));
pauseBtn.addEventListener("click", () => store.pause());
eraseBtn.addEventListener("click", () => void store.dispatchEdit({ op: "erase" }));
retractBtn.addEventListener("click", () => void store.dispatchEdit({ op: "retract" }));
insertBtn.addEventListener("click", () => void store.insertSelected());
replaceBtn.addEventListener("click", () => {
  const chosen = store.state.selectedLibraryStroke;
  if (chosen) void store.dispatchEdit({ op: "replace", stroke: chosen.actions });
});
newBtn.addEventListener("click", () => {
  const seed = Number.parseInt(seedInput.value, 10);
  const chosen = store.state.selectedLibraryStroke;
  void store.create(
    chosen
      ? { sketch: [chosen], seed: Number.isFinite(seed) ? seed : undefined }
      : { code: Array.from({ length: 128 }, () => Math.random() * 2 - 1), seed: Number.isFinite(seed) ? seed : undefined },
  );
});
categorySelect.addEventListener("change", () => void refreshLibrary());

store.subscribe((state) => {
  renderCanvas(ctx, state, canvas.width, canvas.height);
  const active = state.sessionId !== null && !state.finished && !state.busy;
  stepBtn.disabled = !active || state.mode === "auto-play";
  autoBtn.disabled = !active || state.mode === "auto-play";
  pauseBtn.disabled = state.mode !== "auto-play";
  eraseBtn.disabled = !active;
  replaceBtn.disabled = !active || state.selectedLibraryStroke === null;
  insertBtn.disabled = !active || state.selectedLibraryStroke === null;
  retractBtn.disabled = !store.canRetract();
  toast.textContent = state.lastError ?? "";
  toast.classList.toggle("visible", state.lastError !== null);
});

async function start(): Promise<void> {
  const { categories } = await api.libraryCategories().catch(() => ({ categories: [] }));
  categorySelect.replaceChildren(
    ...categories.map((c) => {
      const option = document.createElement("option");
      option.value = c;
      option.textContent = c;
      return option;
    }),
  );
  if (categories.length > 0) await refreshLibrary();
  renderCanvas(ctx, store.state, canvas.width, canvas.height);
}

void start();
