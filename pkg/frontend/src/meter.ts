/**
 * Client-side preview of the cost meter.
 *
 * Replicates the server's pricing rule — sort the marker levels ascending
 * against the nonincreasing state prices and average — from the
 * server-provided state-price vector, so the meter can track drags without a
 * round trip. The server value is authoritative; the preview only has to
 * match it to within display rounding (two decimals of percent).
 */

/** submittable band on cost/budget: "between 99 and 100 percent" */
export const BAND_LOW = 0.99;
export const BAND_HIGH = 1.0;
/** relative rounding slack applied on both edges, same as the server */
export const BAND_SLACK = 1e-9;

/**
 * Minimal cost of a payoff distributed like `levels` in an N-equally-likely-
 * states market: ascending levels against the state prices as served (the
 * service orders them by stock state, which makes them nonincreasing).
 */
export function distributionalCost(levels: number[], statePrices: number[]): number {
  if (levels.length !== statePrices.length) {
    throw new Error(`${levels.length} levels against ${statePrices.length} state prices`);
  }
  const sorted = [...levels].sort((a, b) => a - b);
  let total = 0;
  for (let i = 0; i < sorted.length; i++) total += sorted[i] * statePrices[i];
  return total / sorted.length;
}

/** cost as a fraction of the budget — the number the meter shows */
export function previewFraction(
  levels: number[],
  statePrices: number[],
  budget: number,
): number {
  if (!(budget > 0)) throw new Error("budget must be positive");
  return distributionalCost(levels, statePrices) / budget;
}

/** true iff a placement at this cost fraction may be submitted */
export function withinBand(fraction: number): boolean {
  return fraction >= BAND_LOW - BAND_SLACK && fraction <= BAND_HIGH + BAND_SLACK;
}

/** meter text: percent of budget with two decimals, e.g. "99.50%" */
export function formatMeter(fraction: number): string {
  return `${(fraction * 100).toFixed(2)}%`;
}

/**
 * True when the client preview agrees with the authoritative server fraction
 * to within display rounding of the two-decimal percent meter.
 */
export function previewConsistent(preview: number, serverFraction: number): boolean {
  return Math.abs(preview - serverFraction) < 0.5e-4;
}
