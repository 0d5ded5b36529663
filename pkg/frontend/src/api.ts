/**
 * Typed HTTP client for the annotation service.
 *
 * The client only ever sees blinded payloads: outputs are keyed by letter
 * and nothing in the task identifies which system produced which text.
 * The de-blinding export endpoint is deliberately not wrapped here; it is
 * for analysis tooling, never for the annotator's browser.
 */

export interface Task {
  sample_id: string;
  source_text: string;
  reference_text: string;
  /** Blinded outputs, keyed by slot letter ("A", "B", ...). */
  outputs: Record<string, string>;
  /** 0-based end-exclusive character offsets into source_text. */
  csi_spans: [number, number][];
}

export interface NextTaskReply {
  done: boolean;
  task: Task | null;
}

export interface SubmitBody {
  annotator_id: string;
  sample_id: string;
  ranks: Record<string, number>;
  labels: Record<string, string>;
}

export interface SubmitReply {
  accepted: boolean;
  /** Epoch seconds assigned by the server. */
  timestamp: number;
}

export interface Progress {
  completed: number;
  total: number;
}

/** Server answered with a non-2xx status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : `request failed with status ${status}`);
    this.name = "ApiError";
  }
}

/** The same (annotator, sample) pair was already recorded. */
export class DuplicateSubmission extends ApiError {
  /** Epoch seconds of the submission that got there first. */
  readonly originalTimestamp: number;

  constructor(detail: { error: string; original_timestamp: number }) {
    super(409, detail);
    this.name = "DuplicateSubmission";
    this.originalTimestamp = detail.original_timestamp;
  }
}

/** The service could not be reached at all (network failure, server down). */
export class ServiceUnreachable extends Error {
  readonly reason: unknown;

  constructor(reason: unknown) {
    super("annotation service unreachable");
    this.name = "ServiceUnreachable";
    this.reason = reason;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string, query?: Record<string, string>): string {
    const qs = query ? `?${new URLSearchParams(query)}` : "";
    return `${this.baseUrl}/api/session/${encodeURIComponent(this.sessionId)}${path}${qs}`;
  }

  private async request(input: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(input, init);
    } catch (err) {
      throw new ServiceUnreachable(err);
    }
    if (response.ok) {
      return response;
    }
    const detail = await errorDetail(response);
    if (response.status === 409 && isDuplicateDetail(detail)) {
      throw new DuplicateSubmission(detail);
    }
    throw new ApiError(response.status, detail);
  }

  async nextTask(annotatorId: string): Promise<NextTaskReply> {
    const response = await this.request(this.url("/next-task", { annotator: annotatorId }));
    return (await response.json()) as NextTaskReply;
  }

  async submit(body: SubmitBody): Promise<SubmitReply> {
    const response = await this.request(this.url("/annotations"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await response.json()) as SubmitReply;
  }

  async progress(annotatorId: string): Promise<Progress> {
    const response = await this.request(this.url("/progress", { annotator: annotatorId }));
    return (await response.json()) as Progress;
  }
}

async function errorDetail(response: Response): Promise<unknown> {
  try {
    const payload = (await response.json()) as { detail?: unknown };
    return payload.detail ?? payload;
  } catch {
    return `request failed with status ${response.status}`;
  }
}

function isDuplicateDetail(detail: unknown): detail is { error: string; original_timestamp: number } {
  return (
    typeof detail === "object" &&
    detail !== null &&
    typeof (detail as Record<string, unknown>).error === "string" &&
    typeof (detail as Record<string, unknown>).original_timestamp === "number"
  );
}
