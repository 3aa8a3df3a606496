/**
 * In-memory BuilderApi with the same observable semantics as the service:
 * same cost rule, band transitions, freeze rules, and error payloads. Lets
 * the session state machine be tested without a server, including injected
 * failures and manually released responses (to observe optimistic state
 * while a request is in flight).
 */

import {
  ApiError,
  BuilderApi,
  BuilderCreateRequest,
  MarginalPointsDoc,
  RealizeResponse,
  SessionDoc,
  SubmitResponse,
} from "../src/api.js";
import { BAND_LOW, BAND_SLACK, distributionalCost } from "../src/meter.js";

type Stored = {
  doc: SessionDoc;
};

export class MockBuilder implements BuilderApi {
  private sessions = new Map<string, Stored>();
  private nextId = 1;
  private pendingFailure: ApiError | null = null;
  private gate: Promise<void> | null = null;
  /** state realize() draws, 0-based; tests set it */
  drawState = 0;

  /** decreasing state prices with mean 1/1.03 (three percent risk-free rate) */
  static prices(n: number): number[] {
    const raw = Array.from({ length: n }, (_, i) => 2 - (2 * i + 1) / n); // mean 1
    return raw.map((v) => v / 1.03);
  }

  failNext(status: number, cause: string, message: string): void {
    this.pendingFailure = new ApiError(status, { cause, message });
  }

  /** hold every response until the returned release function is called */
  holdResponses(): () => void {
    let release: () => void = () => {};
    this.gate = new Promise((resolve) => {
      release = resolve;
    });
    return () => {
      release();
      this.gate = null;
    };
  }

  private async checkpoint(): Promise<void> {
    if (this.gate) await this.gate;
    if (this.pendingFailure) {
      const err = this.pendingFailure;
      this.pendingFailure = null;
      throw err;
    }
  }

  private refresh(doc: SessionDoc): void {
    doc.cost = distributionalCost(doc.markers, doc.state_prices);
    doc.cost_fraction = doc.cost / doc.budget;
    const slack = BAND_SLACK * doc.budget;
    const within =
      doc.cost >= BAND_LOW * doc.budget - slack && doc.cost <= doc.budget + slack;
    doc.status = within ? "submittable" : "editing";
  }

  private stored(id: string): Stored {
    const s = this.sessions.get(id);
    if (!s) throw new ApiError(404, { cause: "unknown_session", message: "no such builder session" });
    return s;
  }

  private copy(doc: SessionDoc): SessionDoc {
    return JSON.parse(JSON.stringify(doc)) as SessionDoc;
  }

  async createBuilder(body: BuilderCreateRequest): Promise<SessionDoc> {
    await this.checkpoint();
    const prices = MockBuilder.prices(body.n_states);
    const doc: SessionDoc = {
      id: `mock-${this.nextId++}`,
      n_states: body.n_states,
      budget: body.budget,
      markers: new Array(body.n_states).fill(0),
      cost: 0,
      cost_fraction: 0,
      status: "editing",
      state_prices: prices,
      stock_states: prices.map((_, i) => 0.5 + i * 0.1),
    };
    this.sessions.set(doc.id, { doc });
    return this.copy(doc);
  }

  async getBuilder(id: string): Promise<SessionDoc> {
    await this.checkpoint();
    return this.copy(this.stored(id).doc);
  }

  async setMarkers(id: string, markers: number[]): Promise<SessionDoc> {
    await this.checkpoint();
    const { doc } = this.stored(id);
    if (markers.length !== doc.n_states) {
      throw new ApiError(400, { cause: "invalid_request", message: "one marker per state" });
    }
    if (markers.some((v) => !Number.isFinite(v) || v < 0)) {
      throw new ApiError(400, {
        cause: "invalid_request",
        message: "markers must be finite and nonnegative",
      });
    }
    if (doc.status === "submitted" || doc.status === "realized") {
      throw new ApiError(409, {
        cause: "illegal_transition",
        message: "markers are frozen once submitted",
        status: doc.status,
      });
    }
    doc.markers = [...markers];
    this.refresh(doc);
    return this.copy(doc);
  }

  async submit(id: string): Promise<SubmitResponse> {
    await this.checkpoint();
    const { doc } = this.stored(id);
    if (doc.status !== "submittable") {
      throw new ApiError(409, {
        cause: "illegal_transition",
        message:
          doc.status === "editing"
            ? "cost is outside the submittable band"
            : "session was already submitted",
        status: doc.status,
      });
    }
    doc.status = "submitted";
    const wealth = [...doc.markers].sort((a, b) => a - b);
    const degenerate = wealth.some((w, i) => i > 0 && w === wealth[i - 1]);
    const points: MarginalPointsDoc = {
      points: wealth.map((w, i) => [w, doc.state_prices[i]] as [number, number]),
      degenerate,
    };
    return { session: this.copy(doc), marginal_points: points };
  }

  async realize(id: string, _seed: number): Promise<RealizeResponse> {
    await this.checkpoint();
    const { doc } = this.stored(id);
    if (doc.status !== "submitted") {
      throw new ApiError(409, {
        cause: "illegal_transition",
        message:
          doc.status === "realized"
            ? "session outcome was already realized"
            : "only a submitted placement can be realized",
        status: doc.status,
      });
    }
    const wealth = [...doc.markers].sort((a, b) => a - b)[this.drawState];
    doc.status = "realized";
    doc.realized_state = this.drawState + 1;
    doc.realized_wealth = wealth;
    return { state: this.drawState + 1, wealth, session: this.copy(doc) };
  }
}
