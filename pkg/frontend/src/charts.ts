/**
 * View models for the result charts. Pure data shaping: the DOM layer turns
 * these into SVG, tests inspect them directly.
 *
 * Three sources feed them: the submit response (inferred marginal-utility
 * scatter), the preferences endpoint (marginal-utility / inverse-marginal
 * curves and the recovered measure), and the simulate endpoint (wealth fan).
 * A structured 422 from the service becomes a diagnostics panel rendered
 * verbatim, and no charts.
 */

import {
  ApiError,
  FanQuantiles,
  ForwardPreferences,
  IntermediatePreferences,
  MarginalPointsDoc,
  MeasureDoc,
  PreferencesResponse,
  TerminalPreferences,
} from "./api.js";

export type ScatterView = {
  kind: "marginal-scatter";
  /** (wealth, marginal utility) per state, wealth ascending */
  points: { x: number; y: number }[];
  /** tied wealth levels map to several marginals: flagged, not hidden */
  degenerate: boolean;
};

export type LineView = {
  kind: "line";
  name: string;
  x: number[];
  y: number[];
  /** render both axes on log scale */
  logLog: boolean;
};

export type MeasureView = {
  kind: "measure";
  form: "atomic" | "density";
  /** atom glyphs (location, mass) or density polyline vertices (location, weight) */
  points: { y: number; mass: number }[];
  totalMass: number;
  fitResidual: number;
};

export type FanView = {
  kind: "fan";
  times: number[];
  median: number[];
  /** outer band first, then inner */
  bands: { name: string; lo: number[]; hi: number[] }[];
};

export type DiagnosticsView = {
  kind: "diagnostics";
  status: number;
  cause: string;
  message: string;
  /** every extra payload field, verbatim */
  details: [string, string][];
};

export type ChartView = ScatterView | LineView | MeasureView | FanView | DiagnosticsView;

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

export function marginalScatter(doc: MarginalPointsDoc): ScatterView {
  return {
    kind: "marginal-scatter",
    points: doc.points.map(([x, y]) => ({ x, y })),
    degenerate: doc.degenerate,
  };
}

export function marginalUtilityCurve(p: TerminalPreferences): LineView {
  return {
    kind: "line",
    name: "terminal marginal utility",
    x: p.marginal_utility.wealth,
    y: p.marginal_utility.value,
    logLog: true,
  };
}

export function inverseMarginalCurve(p: IntermediatePreferences): LineView {
  return {
    kind: "line",
    name: "terminal inverse marginal utility",
    x: p.inverse_marginal.v,
    y: p.inverse_marginal.value,
    logLog: false,
  };
}

export function forwardMarginalCurve(p: ForwardPreferences): LineView {
  return {
    kind: "line",
    name: "initial marginal utility",
    x: p.u0_prime.wealth,
    y: p.u0_prime.value,
    logLog: true,
  };
}

export function measureView(m: MeasureDoc): MeasureView {
  const source = m.form === "atomic" ? m.atoms ?? [] : m.grid ?? [];
  return {
    kind: "measure",
    form: m.form,
    points: source.map((p) => ({
      y: p.y,
      mass: "m" in p ? p.m : (p as { w: number }).w,
    })),
    totalMass: m.total_mass,
    fitResidual: m.fit_residual,
  };
}

export function fanChart(times: number[], fan: FanQuantiles): FanView {
  const names: (keyof FanQuantiles)[] = ["p5", "p25", "p50", "p75", "p95"];
  for (const name of names) {
    if (fan[name].length !== times.length) {
      throw new Error(`quantile ${name} has ${fan[name].length} samples for ${times.length} times`);
    }
  }
  for (let i = 0; i < times.length; i++) {
    if (!(fan.p5[i] <= fan.p25[i] && fan.p25[i] <= fan.p50[i] && fan.p50[i] <= fan.p75[i] && fan.p75[i] <= fan.p95[i])) {
      throw new Error(`quantiles out of order at t=${times[i]}`);
    }
  }
  return {
    kind: "fan",
    times,
    median: fan.p50,
    bands: [
      { name: "5–95%", lo: fan.p5, hi: fan.p95 },
      { name: "25–75%", lo: fan.p25, hi: fan.p75 },
    ],
  };
}

export function diagnosticsView(err: ApiError): DiagnosticsView {
  const details: [string, string][] = [];
  for (const [key, value] of Object.entries(err.payload)) {
    if (key === "cause" || key === "message") continue;
    details.push([key, typeof value === "string" ? value : JSON.stringify(value)]);
  }
  return {
    kind: "diagnostics",
    status: err.status,
    cause: err.payload.cause,
    message: err.payload.message,
    details,
  };
}

/**
 * Charts for a preferences response — or the diagnostics panel alone when
 * the engine refused the target.
 */
export function preferenceViews(outcome: PreferencesResponse | ApiError): ChartView[] {
  if (outcome instanceof ApiError) return [diagnosticsView(outcome)];
  switch (outcome.mode) {
    case "terminal":
      return [marginalUtilityCurve(outcome)];
    case "intermediate":
      return [inverseMarginalCurve(outcome)];
    case "forward":
      return [forwardMarginalCurve(outcome), measureView(outcome.measure)];
  }
}

/** least-squares slope of log y against log x; NaN-free inputs required */
export function logLogSlope(x: number[], y: number[]): number {
  if (x.length !== y.length || x.length < 2) throw new Error("need matched samples");
  const lx = x.map(Math.log);
  const ly = y.map(Math.log);
  const mx = lx.reduce((s, v) => s + v, 0) / lx.length;
  const my = ly.reduce((s, v) => s + v, 0) / ly.length;
  let sxy = 0;
  let sxx = 0;
  for (let i = 0; i < lx.length; i++) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx === 0) throw new Error("degenerate wealth grid");
  return sxy / sxx;
}
