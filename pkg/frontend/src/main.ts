// DOM wiring for the campaign operator dashboard. All rendering decisions
// come from the pure view-model in state.ts; this file only touches the DOM
// and the ApiClient.

import { ApiClient, ApiError } from "./api.js";
import type { CampaignView } from "./api.js";
import {
  buildSeries,
  formatProtocol,
  projectTerminalState,
  sliceGrid,
  validateObservation,
} from "./state.js";
import { PALETTE, predictiveBand, probabilityPaths } from "./charts.js";
import type { Viewport } from "./charts.js";

const VP: Viewport = { width: 560, height: 240, pad: 28 };

const api = new ApiClient();
let currentId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function clearErrors(): void {
  document.querySelectorAll(".field-error").forEach((n) => n.remove());
}

function showFieldError(field: string, message: string): void {
  const host =
    document.querySelector(`[data-field="${field}"]`) ?? el("observe-form");
  const note = document.createElement("span");
  note.className = "field-error";
  note.textContent = message;
  host.appendChild(note);
}

function renderChart(svgId: string, paths: string[], names: string[]): void {
  const svg = el<HTMLElement>(svgId);
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${VP.width} ${VP.height}`);
  paths.forEach((d, j) => {
    const p = document.createElementNS("http://www.w3.org/2000/svg", "path");
    p.setAttribute("d", d);
    p.setAttribute("fill", "none");
    p.setAttribute("stroke", PALETTE[j % PALETTE.length]);
    p.setAttribute("stroke-width", "2");
    p.setAttribute("data-model", names[j]);
    svg.appendChild(p);
  });
}

async function renderPredictive(view: CampaignView): Promise<void> {
  const dim = Number(el<HTMLSelectElement>("slice-dim").value) || 0;
  const pinned = view.design_bounds.map(([lo, hi]) => (lo + hi) / 2);
  const grid = sliceGrid(view.design_bounds, dim, pinned, 50);
  const rows = await Promise.all(grid.map((x) => api.predictive(view.id, x)));
  const svg = el<HTMLElement>("predictive-chart");
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${VP.width} ${VP.height}`);
  const axis = grid.map((x) => x[dim]);
  view.model_names.forEach((name, j) => {
    const mu = rows.map((r) => r[j].mu[0]);
    const va = rows.map((r) => r[j].var[0]);
    const { mean, band } = predictiveBand(axis, mu, va, VP);
    const bandEl = document.createElementNS(
      "http://www.w3.org/2000/svg",
      "path",
    );
    bandEl.setAttribute("d", band);
    bandEl.setAttribute("fill", PALETTE[j % PALETTE.length]);
    bandEl.setAttribute("fill-opacity", "0.15");
    svg.appendChild(bandEl);
    const line = document.createElementNS("http://www.w3.org/2000/svg", "path");
    line.setAttribute("d", mean);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", PALETTE[j % PALETTE.length]);
    line.setAttribute("data-model", name);
    svg.appendChild(line);
  });
}

function render(view: CampaignView): void {
  el("status").textContent = view.status;
  el("round").textContent = String(view.round);
  const term = projectTerminalState(view);
  const banner = el("banner");
  banner.textContent = term.banner ?? "";
  banner.classList.toggle("winner", term.winnerName !== null);

  const proposalBox = el("proposal");
  if (view.latest_proposal) {
    proposalBox.textContent = formatProtocol(view.latest_proposal.x_star);
  } else {
    proposalBox.textContent = "(no proposal yet)";
  }

  (
    ["propose-btn", "observe-btn"] as const
  ).forEach((id) => {
    el<HTMLButtonElement>(id).disabled = term.actionsDisabled;
  });

  const series = buildSeries(view);
  renderChart("pi-chart", probabilityPaths(series.pi, VP), series.modelNames);
  renderChart("w-chart", probabilityPaths(series.w, VP), series.modelNames);

  const legend = el("legend");
  legend.innerHTML = "";
  view.model_names.forEach((name, j) => {
    const row = document.createElement("span");
    row.textContent = name + (term.winnerName === name ? " (winner)" : "");
    row.style.color = PALETTE[j % PALETTE.length];
    if (term.winnerName === name) row.classList.add("winner");
    legend.appendChild(row);
  });

  const dimSel = el<HTMLSelectElement>("slice-dim");
  if (dimSel.options.length !== view.design_bounds.length) {
    dimSel.innerHTML = "";
    view.design_bounds.forEach((_, i) => {
      const o = document.createElement("option");
      o.value = String(i);
      o.textContent = `x${i + 1}`;
      dimSel.appendChild(o);
    });
  }
  void renderPredictive(view);
}

async function refresh(): Promise<void> {
  if (!currentId) return;
  render(await api.getCampaign(currentId));
}

function wire(): void {
  el("create-btn").addEventListener("click", async () => {
    clearErrors();
    try {
      const view = await api.createCampaign({
        case: el<HTMLSelectElement>("case-select").value,
        seed: Number(el<HTMLInputElement>("seed-input").value) || 0,
      });
      currentId = view.id;
      render(view);
    } catch (e) {
      if (e instanceof ApiError) showFieldError("create", String(e.detail));
      else throw e;
    }
  });

  el("propose-btn").addEventListener("click", async () => {
    if (!currentId) return;
    clearErrors();
    try {
      await api.propose(currentId);
    } catch (e) {
      if (e instanceof ApiError) showFieldError("propose", String(e.detail));
      else throw e;
    }
    await refresh();
  });

  el("copy-btn").addEventListener("click", () => {
    void navigator.clipboard.writeText(el("proposal").textContent ?? "");
  });

  el("observe-btn").addEventListener("click", async () => {
    if (!currentId) return;
    clearErrors();
    const view = await api.getCampaign(currentId);
    const xText = el<HTMLInputElement>("x-input").value.split(",");
    const yText = el<HTMLInputElement>("y-input").value.split(",");
    const errors = validateObservation(view, xText, yText);
    if (errors.length > 0) {
      errors.forEach((err) => showFieldError(err.field, err.message));
      return;
    }
    try {
      await api.observe(currentId, xText.map(Number), yText.map(Number));
    } catch (e) {
      if (e instanceof ApiError && typeof e.detail === "object" && e.detail) {
        const d = e.detail as { field?: string; message?: string };
        showFieldError(d.field ?? "observe", d.message ?? "rejected");
      } else {
        throw e;
      }
    }
    await refresh();
  });

  el("slice-dim").addEventListener("change", () => void refresh());
}

if (typeof document !== "undefined" && document.getElementById("create-btn")) {
  wire();
}
