/**
 * HTTP client for the detection service.
 *
 * The service reports failures as `{"error": {"code", "message"}}` with a
 * machine-readable code (NOT_FOUND, UNAVAILABLE, PRECONDITION, ...). This
 * client turns those into ApiError values and returns successful bodies as
 * unparsed `unknown`: interpreting the payload shape is the view model's job.
 */

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  /** POST /detect for one account; resolves to the raw report payload. */
  detect(accountId: string): Promise<unknown> {
    return this.post("/detect", { account_id: accountId });
  }

  /** POST /feedback; resolves to the raw feedback-record payload. */
  submitFeedback(
    accountId: string,
    proposedLabel: number,
    submitterId: string,
  ): Promise<unknown> {
    return this.post("/feedback", {
      account_id: accountId,
      proposed_label: proposedLabel,
      submitter_id: submitterId,
    });
  }

  private async post(path: string, body: object): Promise<unknown> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      throw await this.toError(resp);
    }
    return resp.json();
  }

  private async toError(resp: Response): Promise<ApiError> {
    let body: unknown;
    try {
      body = await resp.json();
    } catch {
      return new ApiError(
        `HTTP_${resp.status}`,
        `request failed with status ${resp.status}`,
        resp.status,
      );
    }
    const envelope = (body as { error?: { code?: unknown; message?: unknown } })
      ?.error;
    if (envelope && typeof envelope.code === "string") {
      const message =
        typeof envelope.message === "string"
          ? envelope.message
          : `request failed with status ${resp.status}`;
      return new ApiError(envelope.code, message, resp.status);
    }
    return new ApiError(
      `HTTP_${resp.status}`,
      `request failed with status ${resp.status}`,
      resp.status,
    );
  }
}
