import type {
  AttentionResponse,
  ConsultCloseResponse,
  ConsultOpenRequest,
  ConsultStepResponse,
  ConsultViewResponse,
  DatasetRequest,
  DatasetResponse,
  HealthResponse,
  LeaderboardResponse,
  ModelResponse,
  ObservationRequest,
  ObservationResponse,
  PrognosisRequest,
  PrognosisResponse,
  SummaryResponse,
  TrainResponse,
} from "./types.js";

/** Transport failure: the request never produced an HTTP response.  The
 * console reacts by showing a retry banner and keeping its state intact. */
export class NetworkError extends Error {}

/** The service answered with a non-2xx status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export interface ApiClientOptions {
  /** Injectable fetch, so tests can stub the transport. */
  fetchFn?: typeof fetch;
  /** Bearer token forwarded on every request, when the service needs one. */
  token?: string;
  /** Called with every parsed 2xx response body (used by the replay check
   * that confirms the UI only displays service-provided values). */
  onResponse?: (body: unknown) => void;
}

/** Thin typed JSON client for the service.  One method per endpoint; no
 * clinical logic, no reshaping beyond parsing the body. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly options: ApiClientOptions = {},
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const fetchFn = this.options.fetchFn ?? fetch;
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (this.options.token) {
      headers["authorization"] = `Bearer ${this.options.token}`;
    }
    let response: Response;
    try {
      response = await fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(`cannot reach service at ${path}: ${String(err)}`);
    }
    let parsed: unknown = null;
    try {
      parsed = await response.json();
    } catch {
      // Non-JSON body; parsed stays null and the status decides the outcome.
    }
    if (!response.ok) {
      const detail =
        parsed && typeof parsed === "object" && "detail" in parsed
          ? String((parsed as { detail: unknown }).detail)
          : `request failed with status ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    this.options.onResponse?.(parsed);
    return parsed as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/health");
  }

  ingestDataset(req: DatasetRequest): Promise<DatasetResponse> {
    return this.request("POST", "/datasets", req);
  }

  trainModel(datasetId: string): Promise<TrainResponse> {
    return this.request("POST", "/models/train", { dataset_id: datasetId });
  }

  getModel(modelId: string): Promise<ModelResponse> {
    return this.request("GET", `/models/${encodeURIComponent(modelId)}`);
  }

  openConsult(req: ConsultOpenRequest): Promise<ConsultStepResponse> {
    return this.request("POST", "/consult", req);
  }

  viewConsult(sessionId: string): Promise<ConsultViewResponse> {
    return this.request("GET", `/consult/${encodeURIComponent(sessionId)}`);
  }

  answerConsult(
    sessionId: string,
    value: number | string,
    parameterId?: string,
  ): Promise<ConsultStepResponse> {
    return this.request(
      "POST",
      `/consult/${encodeURIComponent(sessionId)}/answer`,
      parameterId === undefined ? { value } : { value, parameter_id: parameterId },
    );
  }

  closeConsult(sessionId: string, userId?: string): Promise<ConsultCloseResponse> {
    return this.request(
      "POST",
      `/consult/${encodeURIComponent(sessionId)}/close`,
      userId === undefined ? {} : { user_id: userId },
    );
  }

  recordObservation(
    patientId: string,
    req: ObservationRequest,
  ): Promise<ObservationResponse> {
    return this.request(
      "POST",
      `/patients/${encodeURIComponent(patientId)}/observation`,
      req,
    );
  }

  recordPrognosis(
    patientId: string,
    req: PrognosisRequest,
  ): Promise<PrognosisResponse> {
    return this.request(
      "POST",
      `/patients/${encodeURIComponent(patientId)}/prognosis`,
      req,
    );
  }

  attention(
    patientId: string,
    params: { caseId?: string; affected?: string[] } = {},
  ): Promise<AttentionResponse> {
    const query = new URLSearchParams();
    if (params.caseId !== undefined) query.set("case", params.caseId);
    if (params.affected && params.affected.length > 0) {
      query.set("affected", params.affected.join(","));
    }
    const text = query.toString();
    const suffix = text.length > 0 ? `?${text}` : "";
    return this.request(
      "GET",
      `/patients/${encodeURIComponent(patientId)}/attention${suffix}`,
    );
  }

  leaderboard(): Promise<LeaderboardResponse> {
    return this.request("GET", "/ward/leaderboard");
  }

  recordSummary(recordId: string): Promise<SummaryResponse> {
    return this.request(
      "GET",
      `/records/${encodeURIComponent(recordId)}/summary`,
    );
  }
}
