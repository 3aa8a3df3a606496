/**
 * The wealth-row grid markers snap to.
 *
 * Rows are labelled as percent of a reference wealth level; mapping percent
 * to absolute wealth is one configurable scale. The grid itself (which rows
 * exist) is a presentation choice: by default 0% to 200% in 2% steps, with
 * the bottom row at 0% (zero wealth) and the reference row at 100%.
 */

export type RowGridSpec = {
  /** absolute wealth the 100% row maps to */
  referenceWealth: number;
  /** top row percent (default 200) */
  maxPercent?: number;
  /** row spacing in percent (default 2) */
  stepPercent?: number;
};

export class RowGrid {
  readonly referenceWealth: number;
  readonly stepPercent: number;
  readonly percents: number[];

  constructor(spec: RowGridSpec) {
    const max = spec.maxPercent ?? 200;
    const step = spec.stepPercent ?? 2;
    if (!(spec.referenceWealth > 0)) throw new Error("referenceWealth must be positive");
    if (!(step > 0) || !(max > 0)) throw new Error("grid percents must be positive");
    if (max % step !== 0) throw new Error("maxPercent must be a multiple of stepPercent");
    if (100 % step !== 0) throw new Error("stepPercent must divide 100 so the reference row exists");
    this.referenceWealth = spec.referenceWealth;
    this.stepPercent = step;
    this.percents = [];
    for (let p = 0; p <= max; p += step) this.percents.push(p);
  }

  get rowCount(): number {
    return this.percents.length;
  }

  /** markers start here; 0% of reference, i.e. zero wealth */
  get bottomRow(): number {
    return 0;
  }

  /** the 100% row */
  get referenceRow(): number {
    return 100 / this.stepPercent;
  }

  wealthOfRow(row: number): number {
    if (!Number.isInteger(row) || row < 0 || row >= this.rowCount) {
      throw new Error(`row ${row} outside grid of ${this.rowCount} rows`);
    }
    return (this.percents[row] / 100) * this.referenceWealth;
  }

  /** nearest row for a wealth level, clamped to the grid */
  rowOfWealth(wealth: number): number {
    const percent = (wealth / this.referenceWealth) * 100;
    const row = Math.round(percent / this.stepPercent);
    return Math.min(Math.max(row, 0), this.rowCount - 1);
  }
}

/**
 * Gross risk-free return implied by a state-price vector with equally likely
 * states: the pricing identity mean(xi) * (1 + r) = 1 gives 1 + r = N / sum(xi).
 */
export function riskFreeGross(statePrices: number[]): number {
  if (statePrices.length === 0) throw new Error("empty state-price vector");
  const total = statePrices.reduce((s, v) => s + v, 0);
  if (!(total > 0)) throw new Error("state prices must be positive");
  return statePrices.length / total;
}

/**
 * Default grid for a builder session: the reference row is the risk-free
 * level budget * (1 + r), recovered from the session's own state prices so
 * the client needs nothing beyond the wire state.
 */
export function gridForSession(
  doc: { budget: number; state_prices: number[] },
  spec?: Omit<RowGridSpec, "referenceWealth">,
): RowGrid {
  return new RowGrid({
    referenceWealth: doc.budget * riskFreeGross(doc.state_prices),
    ...spec,
  });
}
