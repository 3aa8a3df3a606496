/**
 * Browser wiring. All behavior lives in the tested modules (api, rows,
 * meter, session, charts); this file only draws state and forwards events.
 */

import { ApiError, Client, EngineRequest, PreferencesResponse } from "./api.js";
import { UiSession } from "./session.js";
import { BAND_LOW, previewConsistent, withinBand } from "./meter.js";
import {
  ChartView,
  DiagnosticsView,
  FanView,
  LineView,
  MeasureView,
  ScatterView,
  fanChart,
  marginalScatter,
  preferenceViews,
} from "./charts.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const BOARD = { width: 860, height: 420, pad: 34 };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svg(tag: string, attrs: Record<string, string | number> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

function linScale(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

// ---------------------------------------------------------------------------
// marker board
// ---------------------------------------------------------------------------

class Board {
  readonly root: SVGSVGElement;
  private session: UiSession;
  private onDrag: (marker: number, row: number) => void;
  private dragging: number | null = null;

  constructor(session: UiSession, onDrag: (marker: number, row: number) => void) {
    this.session = session;
    this.onDrag = onDrag;
    this.root = svg("svg", {
      viewBox: `0 0 ${BOARD.width} ${BOARD.height}`,
      class: "board",
    }) as SVGSVGElement;
    this.root.addEventListener("pointermove", (e) => this.pointerMove(e));
    this.root.addEventListener("pointerup", () => (this.dragging = null));
    this.root.addEventListener("pointerleave", () => (this.dragging = null));
    this.draw();
  }

  private rowY(row: number): number {
    const grid = this.session.grid;
    const usable = BOARD.height - 2 * BOARD.pad;
    return BOARD.height - BOARD.pad - (row / (grid.rowCount - 1)) * usable;
  }

  private yRow(y: number): number {
    const grid = this.session.grid;
    const usable = BOARD.height - 2 * BOARD.pad;
    const frac = (BOARD.height - BOARD.pad - y) / usable;
    return Math.min(Math.max(Math.round(frac * (grid.rowCount - 1)), 0), grid.rowCount - 1);
  }

  private markerX(i: number): number {
    const n = this.session.markerRows.length;
    const usable = BOARD.width - 2 * BOARD.pad;
    return BOARD.pad + ((i + 0.5) / n) * usable;
  }

  private pointerMove(e: PointerEvent): void {
    if (this.dragging === null) return;
    const rect = this.root.getBoundingClientRect();
    const y = ((e.clientY - rect.top) / rect.height) * BOARD.height;
    this.onDrag(this.dragging, this.yRow(y));
  }

  draw(): void {
    this.root.replaceChildren();
    const grid = this.session.grid;
    const everyNth = Math.max(1, Math.round(grid.rowCount / 10));
    for (let row = 0; row < grid.rowCount; row += everyNth) {
      const y = this.rowY(row);
      this.root.append(
        svg("line", { x1: BOARD.pad, x2: BOARD.width - BOARD.pad, y1: y, y2: y, class: "row" }),
        Object.assign(svg("text", { x: 4, y: y + 4, class: "rowlabel" }), {
          textContent: `${grid.percents[row]}%`,
        }),
      );
    }
    const refY = this.rowY(grid.referenceRow);
    this.root.append(
      svg("line", {
        x1: BOARD.pad,
        x2: BOARD.width - BOARD.pad,
        y1: refY,
        y2: refY,
        class: "row reference",
      }),
    );
    const surviving = this.session.survivingMarker;
    this.session.markerRows.forEach((row, i) => {
      if (surviving !== null) {
        // after the reveal only the surviving marker remains
        if (i !== 0) return;
        row = surviving.row;
      }
      const dot = svg("circle", {
        cx: this.markerX(i),
        cy: this.rowY(row),
        r: 6,
        class: surviving !== null ? "marker realized" : "marker",
      });
      dot.addEventListener("pointerdown", (e) => {
        if (this.session.phase === "placing" || this.session.phase === "submittable") {
          this.dragging = i;
          e.preventDefault();
        }
      });
      this.root.append(dot);
    });
  }
}

// ---------------------------------------------------------------------------
// chart rendering
// ---------------------------------------------------------------------------

function renderLine(view: LineView): SVGElement {
  const tx = view.logLog ? view.x.map(Math.log) : view.x;
  const ty = view.logLog ? view.y.map(Math.log) : view.y;
  const sx = linScale([Math.min(...tx), Math.max(...tx)], [BOARD.pad, BOARD.width - BOARD.pad]);
  const sy = linScale([Math.min(...ty), Math.max(...ty)], [BOARD.height - BOARD.pad, BOARD.pad]);
  const d = tx.map((v, i) => `${i ? "L" : "M"}${sx(v).toFixed(1)},${sy(ty[i]).toFixed(1)}`).join("");
  const root = svg("svg", { viewBox: `0 0 ${BOARD.width} ${BOARD.height}`, class: "chart" });
  root.append(
    svg("path", { d, class: "series" }),
    Object.assign(svg("text", { x: BOARD.pad, y: 18, class: "title" }), {
      textContent: view.name + (view.logLog ? " (log–log)" : ""),
    }),
  );
  return root;
}

function renderScatter(view: ScatterView): SVGElement {
  const sx = linScale(
    [Math.min(...view.points.map((p) => p.x)), Math.max(...view.points.map((p) => p.x))],
    [BOARD.pad, BOARD.width - BOARD.pad],
  );
  const sy = linScale(
    [Math.min(...view.points.map((p) => p.y)), Math.max(...view.points.map((p) => p.y))],
    [BOARD.height - BOARD.pad, BOARD.pad],
  );
  const root = svg("svg", { viewBox: `0 0 ${BOARD.width} ${BOARD.height}`, class: "chart" });
  for (const p of view.points) {
    root.append(svg("circle", { cx: sx(p.x), cy: sy(p.y), r: 4, class: "point" }));
  }
  const label = view.degenerate
    ? "inferred marginal utility — degenerate placement (tied levels)"
    : "inferred marginal utility";
  root.append(Object.assign(svg("text", { x: BOARD.pad, y: 18, class: "title" }), { textContent: label }));
  return root;
}

function renderMeasure(view: MeasureView): SVGElement {
  const root = svg("svg", { viewBox: `0 0 ${BOARD.width} ${BOARD.height}`, class: "chart" });
  const ys = view.points.map((p) => p.y);
  const ms = view.points.map((p) => p.mass);
  const sx = linScale([Math.min(...ys, 0), Math.max(...ys, 1)], [BOARD.pad, BOARD.width - BOARD.pad]);
  const sy = linScale([0, Math.max(...ms, 1e-12)], [BOARD.height - BOARD.pad, BOARD.pad]);
  if (view.form === "atomic") {
    for (const p of view.points) {
      root.append(
        svg("line", { x1: sx(p.y), x2: sx(p.y), y1: sy(0), y2: sy(p.mass), class: "atom" }),
        svg("circle", { cx: sx(p.y), cy: sy(p.mass), r: 5, class: "point" }),
      );
    }
  } else {
    const d = view.points
      .map((p, i) => `${i ? "L" : "M"}${sx(p.y).toFixed(1)},${sy(p.mass).toFixed(1)}`)
      .join("");
    root.append(svg("path", { d, class: "series" }));
  }
  root.append(
    Object.assign(svg("text", { x: BOARD.pad, y: 18, class: "title" }), {
      textContent: `preference measure (${view.form}); total mass ${view.totalMass.toFixed(4)}`,
    }),
  );
  return root;
}

function renderFan(view: FanView): SVGElement {
  const root = svg("svg", { viewBox: `0 0 ${BOARD.width} ${BOARD.height}`, class: "chart" });
  const allY = view.bands.flatMap((b) => [...b.lo, ...b.hi]);
  const sx = linScale([view.times[0], view.times[view.times.length - 1]], [BOARD.pad, BOARD.width - BOARD.pad]);
  const sy = linScale([Math.min(...allY), Math.max(...allY)], [BOARD.height - BOARD.pad, BOARD.pad]);
  for (const band of view.bands) {
    const up = view.times.map((t, i) => `${i ? "L" : "M"}${sx(t).toFixed(1)},${sy(band.hi[i]).toFixed(1)}`);
    const down = [...view.times]
      .reverse()
      .map((t, i) => `L${sx(t).toFixed(1)},${sy(band.lo[view.times.length - 1 - i]).toFixed(1)}`);
    root.append(svg("path", { d: up.join("") + down.join("") + "Z", class: "band" }));
  }
  const mid = view.times.map((t, i) => `${i ? "L" : "M"}${sx(t).toFixed(1)},${sy(view.median[i]).toFixed(1)}`);
  root.append(
    svg("path", { d: mid.join(""), class: "series" }),
    Object.assign(svg("text", { x: BOARD.pad, y: 18, class: "title" }), {
      textContent: "optimal wealth fan (5–95% and 25–75% bands, median)",
    }),
  );
  return root;
}

function renderDiagnostics(view: DiagnosticsView): HTMLElement {
  const panel = el("div", { class: "diagnostics" });
  panel.append(
    el("h3", {}, `refused (${view.status}): ${view.cause}`),
    el("p", {}, view.message),
  );
  const list = el("dl", {});
  for (const [key, value] of view.details) {
    list.append(el("dt", {}, key), el("dd", {}, value));
  }
  panel.append(list);
  return panel;
}

function renderViews(host: HTMLElement, views: ChartView[]): void {
  host.replaceChildren();
  for (const view of views) {
    switch (view.kind) {
      case "line":
        host.append(renderLine(view));
        break;
      case "marginal-scatter":
        host.append(renderScatter(view));
        break;
      case "measure":
        host.append(renderMeasure(view));
        break;
      case "fan":
        host.append(renderFan(view));
        break;
      case "diagnostics":
        host.append(renderDiagnostics(view));
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// application
// ---------------------------------------------------------------------------

function apiBase(): string {
  const fromQuery = new URLSearchParams(location.search).get("api");
  if (fromQuery !== null) return fromQuery;
  return location.protocol === "file:" ? "http://127.0.0.1:8000" : "";
}

async function main(): Promise<void> {
  const client = new Client(apiBase());
  const app = document.getElementById("app")!;

  const controls = el("div", { class: "controls" });
  const meterWrap = el("div", { class: "meter" });
  const meterFill = el("div", { class: "fill" });
  const meterLabel = el("span", { class: "label" }, "—");
  meterWrap.append(meterFill, meterLabel);
  const submitBtn = el("button", { disabled: "" }, "Submit placement");
  const revealBtn = el("button", { disabled: "" }, "Reveal outcome");
  const errorLine = el("p", { class: "error" });
  const boardHost = el("div", { class: "boardhost" });
  const resultHost = el("div", { class: "results" });
  const engineHost = el("div", { class: "results" });

  controls.append(meterWrap, submitBtn, revealBtn, errorLine);
  app.append(controls, boardHost, resultHost, engineHost);

  const session = await UiSession.create(client, {
    n_states: 100,
    budget: 1.0,
    mu: 0.07,
    sigma: 0.2,
    r: 0.03,
  });

  let board: Board;
  const refresh = () => {
    meterLabel.textContent = `cost ${session.meterText} of budget`;
    meterFill.style.width = `${Math.min(session.preview * 100, 100)}%`;
    meterFill.classList.toggle("inband", withinBand(session.preview));
    if (!previewConsistent(session.preview, session.serverFraction)) {
      // the server is authoritative; show its number when the preview drifts
      meterLabel.textContent = `cost ${(session.serverFraction * 100).toFixed(2)}% of budget (server)`;
    }
    submitBtn.toggleAttribute("disabled", !session.canSubmit);
    revealBtn.toggleAttribute("disabled", !session.canReveal);
    errorLine.textContent = session.lastError
      ? `${session.lastError.cause}: ${session.lastError.message}`
      : "";
    board.draw();
  };

  let pending: Promise<unknown> = Promise.resolve();
  board = new Board(session, (marker, row) => {
    // optimistic: the local move and meter update render immediately; the
    // server response (or revert) re-renders when it lands
    pending = pending
      .then(() => session.placeMarkers([{ marker, row }]))
      .catch(() => undefined)
      .then(refresh);
    refresh();
  });
  boardHost.append(board.root);

  submitBtn.addEventListener("click", async () => {
    try {
      const points = await session.submit();
      renderViews(resultHost, [marginalScatter(points)]);
    } catch {
      // inline error already recorded on the session
    }
    refresh();
  });

  revealBtn.addEventListener("click", async () => {
    try {
      const outcome = await session.reveal(Math.floor(Math.random() * 2 ** 31));
      resultHost.append(
        el("p", { class: "outcome" }, `state ${outcome.state}: wealth ${outcome.wealth.toFixed(4)}`),
      );
    } catch {
      // inline error already recorded
    }
    refresh();
  });

  refresh();

  // ---- continuous-time result views ---------------------------------------

  const market = { mu: 0.07, r: 0.03, sigma: 0.2, horizon: 1.0 };
  const lognormalAtOne: EngineRequest = {
    market,
    distribution: { family: "lognormal" },
    x0: 1.0,
  };

  const buttons = el("div", { class: "controls" });
  const mkButton = (label: string, run: () => Promise<ChartView[]>) => {
    const btn = el("button", {}, label);
    btn.addEventListener("click", async () => {
      try {
        renderViews(engineHost, await run());
      } catch (e) {
        if (e instanceof ApiError) renderViews(engineHost, preferenceViews(e));
        else throw e;
      }
    });
    buttons.append(btn);
  };

  mkButton("Inferred preferences (fixed horizon)", async () => {
    const resp: PreferencesResponse | ApiError = await client
      .preferences(lognormalAtOne)
      .catch((e) => (e instanceof ApiError ? e : Promise.reject(e)));
    return preferenceViews(resp);
  });
  mkButton("Forward criterion measure", async () => {
    const resp: PreferencesResponse | ApiError = await client
      .preferences({ ...lognormalAtOne, mode: "forward" })
      .catch((e) => (e instanceof ApiError ? e : Promise.reject(e)));
    return preferenceViews(resp);
  });
  mkButton("Wealth fan (10k paths)", async () => {
    const sim = await client.simulate({ ...lognormalAtOne, paths: 10_000, seed: 7, checks: [] });
    return [fanChart(sim.times, sim.fan.wealth)];
  });
  app.append(buttons);
}

main().catch((e) => {
  const app = document.getElementById("app");
  if (app) app.textContent = `failed to start: ${e}`;
  console.error(e);
});
