/**
 * Typed client for the targetwealth /v1 JSON API.
 *
 * Wire shapes mirror the service exactly; the server is authoritative for
 * every number shown in the UI. Non-2xx responses carry a structured
 * `{ error: { cause, message, ... } }` body which is rethrown as ApiError so
 * callers can surface it inline.
 */

// ---------------------------------------------------------------------------
// request documents
// ---------------------------------------------------------------------------

export type ConstantMarketDoc = {
  mu: number;
  r: number;
  sigma: number;
  horizon: number;
};

export type DistributionDoc = {
  family: string;
  params?: Record<string, number>;
  b?: number;
  markers?: number[];
  table?: [number, number][];
};

export type EngineMode = "terminal" | "intermediate" | "forward";

export type EngineRequest = {
  market: ConstantMarketDoc;
  distribution: DistributionDoc;
  x0?: number;
  mode?: EngineMode;
  target_time?: number;
};

export type SimulateRequest = EngineRequest & {
  paths?: number;
  dt?: number;
  seed?: number;
  checks?: ("martingale" | "ks" | "self-financing")[];
};

export type BuilderCreateRequest = {
  n_states: number;
  budget: number;
  mu: number;
  sigma: number;
  r: number;
};

// ---------------------------------------------------------------------------
// response documents
// ---------------------------------------------------------------------------

export type FeasibilityResponse = {
  mode: EngineMode;
  feasible: boolean;
  budget_value: number;
  solved_parameter?: number;
  budget_binding?: boolean;
};

export type CurveSamples = { wealth: number[]; value: number[] };

export type TerminalPreferences = {
  mode: "terminal";
  solved_parameter: number | null;
  beta: number;
  marginal_utility: CurveSamples;
};

export type IntermediatePreferences = {
  mode: "intermediate";
  target_time: number;
  solved_parameter: number | null;
  inverse_marginal: { v: number[]; value: number[] };
  assumptions: { entire: boolean; growth_ok: boolean; real_nonneg_ok: boolean };
};

export type MeasureDoc = {
  form: "atomic" | "density";
  total_mass: number;
  fit_residual: number;
  admissible: boolean;
  atoms?: { y: number; m: number }[];
  grid?: { y: number; w: number }[];
};

export type ForwardPreferences = {
  mode: "forward";
  solved_parameter: number | null;
  measure: MeasureDoc;
  normalization: { x0: number; tilt_rate: number };
  u0_prime: CurveSamples;
};

export type PreferencesResponse =
  | TerminalPreferences
  | IntermediatePreferences
  | ForwardPreferences;

export type FanQuantiles = {
  p5: number[];
  p25: number[];
  p50: number[];
  p75: number[];
  p95: number[];
};

export type SimulateResponse = {
  mode: EngineMode;
  x0: number;
  seed: number;
  target_time: number;
  times: number[];
  fan: { wealth: FanQuantiles; portfolio_norm: FanQuantiles };
  checks: Record<string, { pass: boolean; [k: string]: unknown }>;
};

export type SessionStatus = "editing" | "submittable" | "submitted" | "realized";

export type SessionDoc = {
  id: string;
  n_states: number;
  budget: number;
  markers: number[];
  cost: number;
  cost_fraction: number;
  status: SessionStatus;
  state_prices: number[];
  stock_states: number[];
  realized_state?: number;
  realized_wealth?: number;
};

export type MarginalPointsDoc = {
  points: [number, number][];
  degenerate: boolean;
};

export type SubmitResponse = {
  session: SessionDoc;
  marginal_points: MarginalPointsDoc;
};

export type RealizeResponse = {
  state: number;
  wealth: number;
  session: SessionDoc;
};

export type ErrorPayload = {
  cause: string;
  message: string;
  [k: string]: unknown;
};

// ---------------------------------------------------------------------------
// client
// ---------------------------------------------------------------------------

export class ApiError extends Error {
  readonly status: number;
  readonly payload: ErrorPayload;

  constructor(status: number, payload: ErrorPayload) {
    super(`${payload.cause}: ${payload.message}`);
    this.name = "ApiError";
    this.status = status;
    this.payload = payload;
  }
}

async function readError(resp: Response): Promise<ApiError> {
  let payload: ErrorPayload = {
    cause: "unreadable_error",
    message: `HTTP ${resp.status}`,
  };
  try {
    const body = (await resp.json()) as { error?: ErrorPayload };
    if (body && typeof body === "object" && body.error) payload = body.error;
  } catch {
    // non-JSON body; keep the fallback payload
  }
  return new ApiError(resp.status, payload);
}

/**
 * Structural interface for the builder session endpoints. The production
 * Client satisfies it over HTTP; tests can satisfy it in memory.
 */
export interface BuilderApi {
  createBuilder(body: BuilderCreateRequest): Promise<SessionDoc>;
  getBuilder(id: string): Promise<SessionDoc>;
  setMarkers(id: string, markers: number[]): Promise<SessionDoc>;
  submit(id: string): Promise<SubmitResponse>;
  realize(id: string, seed: number): Promise<RealizeResponse>;
}

export class Client implements BuilderApi {
  readonly base: string;

  /** @param base origin of the API, e.g. "http://127.0.0.1:8000"; "" for same-origin */
  constructor(base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) throw await readError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/v1/health");
  }

  feasibility(req: EngineRequest): Promise<FeasibilityResponse> {
    return this.request("POST", "/v1/feasibility", req);
  }

  preferences(req: EngineRequest): Promise<PreferencesResponse> {
    return this.request("POST", "/v1/preferences", req);
  }

  simulate(req: SimulateRequest): Promise<SimulateResponse> {
    return this.request("POST", "/v1/simulate", req);
  }

  createBuilder(body: BuilderCreateRequest): Promise<SessionDoc> {
    return this.request("POST", "/v1/builder", body);
  }

  getBuilder(id: string): Promise<SessionDoc> {
    return this.request("GET", `/v1/builder/${id}`);
  }

  setMarkers(id: string, markers: number[]): Promise<SessionDoc> {
    return this.request("PUT", `/v1/builder/${id}/markers`, { markers });
  }

  submit(id: string): Promise<SubmitResponse> {
    return this.request("POST", `/v1/builder/${id}/submit`);
  }

  realize(id: string, seed: number): Promise<RealizeResponse> {
    return this.request("POST", `/v1/builder/${id}/realize`, { seed });
  }
}
