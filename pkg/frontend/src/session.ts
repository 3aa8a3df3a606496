/**
 * UI-side builder session: marker placement with an optimistic cost meter,
 * band-gated submit, and the realized-outcome reveal.
 *
 * The server is the source of truth. Drags update the local rows and preview
 * meter immediately; every mutation is sent to the service and the session
 * re-renders from the response. A rejected mutation reverts the optimistic
 * change and keeps the structured error for inline display.
 */

import {
  ApiError,
  BuilderApi,
  BuilderCreateRequest,
  MarginalPointsDoc,
  SessionDoc,
  SessionStatus,
} from "./api.js";
import { RowGrid, RowGridSpec, gridForSession } from "./rows.js";
import { formatMeter, previewFraction, withinBand } from "./meter.js";

export type Phase = "placing" | "submittable" | "submitted" | "revealed";

/** one marker dragged onto a row */
export type MarkerDrag = { marker: number; row: number };

export type InlineError = { status: number; cause: string; message: string };

export function phaseOfStatus(status: SessionStatus): Phase {
  switch (status) {
    case "editing":
      return "placing";
    case "submittable":
      return "submittable";
    case "submitted":
      return "submitted";
    case "realized":
      return "revealed";
  }
}

export class UiSession {
  readonly api: BuilderApi;
  readonly grid: RowGrid;

  /** last authoritative server state */
  doc: SessionDoc;
  /** marker positions per row (always exactly one row index per marker) */
  markerRows: number[];
  /** client-side meter value; reconciled against doc.cost_fraction */
  preview: number;
  /** last rejected mutation, for inline display; cleared by the next success */
  lastError: InlineError | null = null;
  /** inferred marginal utility, present once submitted */
  marginalPoints: MarginalPointsDoc | null = null;
  /** the single surviving outcome, present once revealed */
  realized: { state: number; wealth: number } | null = null;

  private constructor(api: BuilderApi, doc: SessionDoc, grid: RowGrid) {
    this.api = api;
    this.grid = grid;
    this.doc = doc;
    this.markerRows = doc.markers.map((w) => grid.rowOfWealth(w));
    this.preview = previewFraction(doc.markers, doc.state_prices, doc.budget);
  }

  static async create(
    api: BuilderApi,
    params: BuilderCreateRequest,
    gridSpec?: Omit<RowGridSpec, "referenceWealth">,
  ): Promise<UiSession> {
    const doc = await api.createBuilder(params);
    return new UiSession(api, doc, gridForSession(doc, gridSpec));
  }

  // -- state derived purely from the last server response --------------------

  get phase(): Phase {
    return phaseOfStatus(this.doc.status);
  }

  get serverFraction(): number {
    return this.doc.cost_fraction;
  }

  get canSubmit(): boolean {
    return this.doc.status === "submittable";
  }

  get canReveal(): boolean {
    return this.doc.status === "submitted";
  }

  get meterText(): string {
    return formatMeter(this.preview);
  }

  /** wealth level each marker currently sits on, from its row */
  get markerLevels(): number[] {
    return this.markerRows.map((row) => this.grid.wealthOfRow(row));
  }

  /** after reveal: where the one surviving marker sits */
  get survivingMarker(): { row: number; wealth: number } | null {
    if (this.realized === null) return null;
    return {
      row: this.grid.rowOfWealth(this.realized.wealth),
      wealth: this.realized.wealth,
    };
  }

  private reconcile(doc: SessionDoc): void {
    this.doc = doc;
    this.markerRows = doc.markers.map((w) => this.grid.rowOfWealth(w));
    this.preview = previewFraction(doc.markers, doc.state_prices, doc.budget);
    this.lastError = null;
  }

  private recordError(e: unknown): never {
    if (e instanceof ApiError) {
      this.lastError = {
        status: e.status,
        cause: e.payload.cause,
        message: e.payload.message,
      };
    }
    throw e;
  }

  // -- mutations --------------------------------------------------------------

  /**
   * Apply drag events: move markers onto rows, update the preview meter
   * immediately, then persist and re-render from the authoritative response.
   * A rejection reverts the local placement.
   */
  async placeMarkers(drags: MarkerDrag[]): Promise<SessionDoc> {
    if (this.phase !== "placing" && this.phase !== "submittable") {
      throw new Error(`markers are frozen in phase ${this.phase}`);
    }
    const before = [...this.markerRows];
    const beforePreview = this.preview;
    for (const { marker, row } of drags) {
      if (!Number.isInteger(marker) || marker < 0 || marker >= this.markerRows.length) {
        throw new Error(`no marker ${marker}`);
      }
      // drags may overshoot the grid; snap into range
      this.markerRows[marker] = Math.min(Math.max(row, 0), this.grid.rowCount - 1);
    }
    const levels = this.markerLevels;
    this.preview = previewFraction(levels, this.doc.state_prices, this.doc.budget);
    try {
      const doc = await this.api.setMarkers(this.doc.id, levels);
      this.reconcile(doc);
      return doc;
    } catch (e) {
      this.markerRows = before;
      this.preview = beforePreview;
      this.recordError(e);
    }
  }

  /** move every marker onto one row */
  placeAll(row: number): Promise<SessionDoc> {
    return this.placeMarkers(this.markerRows.map((_, i) => ({ marker: i, row })));
  }

  /**
   * Scripted spreading: scale the current levels so the meter lands exactly
   * on `fraction` (cost is linear in the levels). Falls back to an even
   * ladder when the placement is flat, since scaling a flat-zero placement
   * goes nowhere. Sends exact levels — the row view snaps for display only.
   */
  async spreadToFraction(fraction: number): Promise<SessionDoc> {
    if (!(fraction > 0)) throw new Error("target fraction must be positive");
    let levels = this.markerLevels;
    let cost = previewFraction(levels, this.doc.state_prices, this.doc.budget);
    if (cost <= 0) {
      const n = levels.length;
      levels = levels.map((_, i) => ((i + 1) / n) * this.grid.referenceWealth);
      cost = previewFraction(levels, this.doc.state_prices, this.doc.budget);
    }
    const scaled = levels.map((w) => (w * fraction) / cost);
    this.preview = previewFraction(scaled, this.doc.state_prices, this.doc.budget);
    try {
      const doc = await this.api.setMarkers(this.doc.id, scaled);
      this.reconcile(doc);
      // keep the exact preview rather than the row-snapped recomputation:
      // scripted levels live between rows
      this.preview = previewFraction(doc.markers, doc.state_prices, doc.budget);
      return doc;
    } catch (e) {
      this.recordError(e);
    }
  }

  /**
   * The manual elicitation loop, scripted: nudge one marker one row at a time
   * until the meter displays the target (two-decimal percent), preferring the
   * single move that lands closest. Pure client-side planning over the
   * preview meter, then one round trip to persist. Returns the drags applied.
   */
  async nudgeToDisplay(targetFraction: number, maxMoves = 2000): Promise<MarkerDrag[]> {
    const target = formatMeter(targetFraction);
    const rows = [...this.markerRows];
    const drags: MarkerDrag[] = [];
    const fractionOf = (rs: number[]) =>
      previewFraction(
        rs.map((r) => this.grid.wealthOfRow(r)),
        this.doc.state_prices,
        this.doc.budget,
      );
    for (let move = 0; move < maxMoves; move++) {
      const current = fractionOf(rows);
      if (formatMeter(current) === target) break;
      let best: { marker: number; row: number; gap: number } | null = null;
      for (let m = 0; m < rows.length; m++) {
        for (const step of [-1, 1]) {
          const row = rows[m] + step;
          if (row < 0 || row >= this.grid.rowCount) continue;
          const trial = [...rows];
          trial[m] = row;
          const gap = Math.abs(fractionOf(trial) - targetFraction);
          if (best === null || gap < best.gap) best = { marker: m, row, gap };
        }
      }
      if (best === null || best.gap >= Math.abs(current - targetFraction)) {
        break; // no single move improves; the grid cannot get closer
      }
      rows[best.marker] = best.row;
      drags.push({ marker: best.marker, row: best.row });
    }
    if (drags.length > 0) await this.placeMarkers(drags);
    return drags;
  }

  /** lock the placement; the server re-checks the band (races lose here) */
  async submit(): Promise<MarginalPointsDoc> {
    try {
      const resp = await this.api.submit(this.doc.id);
      this.doc = resp.session;
      this.marginalPoints = resp.marginal_points;
      this.lastError = null;
      return resp.marginal_points;
    } catch (e) {
      this.recordError(e);
    }
  }

  /** draw the single surviving state; disabled once the outcome is shown */
  async reveal(seed: number): Promise<{ state: number; wealth: number }> {
    if (this.phase === "revealed") {
      throw new Error("the outcome was already revealed");
    }
    try {
      const resp = await this.api.realize(this.doc.id, seed);
      this.doc = resp.session;
      this.realized = { state: resp.state, wealth: resp.wealth };
      this.lastError = null;
      return this.realized;
    } catch (e) {
      this.recordError(e);
    }
  }

  /** the submit-then-reveal flow behind the final button */
  async submitAndReveal(seed: number): Promise<{
    points: MarginalPointsDoc;
    realized: { state: number; wealth: number };
  }> {
    const points = await this.submit();
    const realized = await this.reveal(seed);
    return { points, realized };
  }
}
