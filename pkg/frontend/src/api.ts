// Thin typed client over the campaign HTTP API. All numbers displayed by
// the dashboard come from these payloads; nothing is recomputed here.

export interface ProposalEvent {
  event: "proposal";
  round: number;
  x_star: number[];
  criterion: string;
  criterion_value: number;
  wall_clock: number;
}

export interface ObservationEvent {
  event: "observation";
  round: number;
  x: number[];
  y: number[];
  pi: number[];
  w: number[];
  chi2_pass: boolean[];
  status: string;
  criterion: string;
  criterion_value: number;
}

export interface CampaignView {
  id: string;
  round: number;
  status: string;
  winner: number | null;
  model_names: string[];
  pi: number[];
  w: number[];
  chi2_pass: boolean[];
  latest_proposal: ProposalEvent | null;
  design_bounds: [number, number][];
  output_dim: number;
  data: { x: number[]; y: number[]; tag: string }[];
  history: ObservationEvent[];
  config: Record<string, unknown>;
}

export interface CampaignSummary {
  id: string;
  status: string;
  round: number;
}

export interface PredictiveRow {
  model: string;
  mu: number[];
  var: number[];
}

export interface CreateCampaignRequest {
  case: string;
  design_criterion?: string;
  md?: string;
  taylor_order?: number;
  budget?: number | null;
  n0?: number | null;
  seed?: number;
  n_sim?: number | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

async function parseOrThrow<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail: unknown = null;
    try {
      detail = (await res.json()).detail;
    } catch {
      detail = await res.text().catch(() => null);
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  listCampaigns(): Promise<CampaignSummary[]> {
    return this.fetchFn(this.url("/api/campaigns")).then((r) =>
      parseOrThrow<CampaignSummary[]>(r),
    );
  }

  createCampaign(req: CreateCampaignRequest): Promise<CampaignView> {
    return this.fetchFn(this.url("/api/campaigns"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    }).then((r) => parseOrThrow<CampaignView>(r));
  }

  getCampaign(id: string): Promise<CampaignView> {
    return this.fetchFn(this.url(`/api/campaigns/${id}`)).then((r) =>
      parseOrThrow<CampaignView>(r),
    );
  }

  propose(id: string): Promise<{ x_star: number[]; criterion_value: number }> {
    return this.fetchFn(this.url(`/api/campaigns/${id}/propose`), {
      method: "POST",
    }).then((r) => parseOrThrow<{ x_star: number[]; criterion_value: number }>(r));
  }

  observe(id: string, x: number[], y: number[]): Promise<CampaignView> {
    return this.fetchFn(this.url(`/api/campaigns/${id}/observe`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ x, y }),
    }).then((r) => parseOrThrow<CampaignView>(r));
  }

  predictive(id: string, x: number[]): Promise<PredictiveRow[]> {
    const q = encodeURIComponent(x.join(","));
    return this.fetchFn(
      this.url(`/api/campaigns/${id}/predictive?x=${q}`),
    ).then((r) => parseOrThrow<PredictiveRow[]>(r));
  }
}
