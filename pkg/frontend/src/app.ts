/**
 * Console controller: owns the page skeleton, the detect and feedback
 * flows, and every visible state (loading, unknown account, retryable
 * outage, malformed payload, feedback banners).
 *
 * Detect requests are debounced per account: while one is in flight,
 * further calls for the same account reuse it instead of hitting the
 * network again. Renders happen only from a fully validated view model,
 * so a bad payload shows an error state and never a partial report.
 */

import { ApiClient, ApiError, type FetchLike } from "./api.js";
import { renderReport } from "./render.js";
import {
  PayloadError,
  toFeedbackView,
  toViewModel,
} from "./viewmodel.js";

export interface ConsoleConfig {
  /** Base URL of the detection service, e.g. "http://127.0.0.1:8000". */
  baseUrl: string;
  /** Injection point for tests; defaults to the global fetch. */
  fetchFn?: FetchLike;
  layoutSeed?: number;
}

type StatusKind = "loading" | "not-found" | "error" | "retry";
type BannerKind = "pending" | "ok" | "duplicate" | "error";

const SKELETON = `
  <h1>Bot detection console</h1>
  <form id="detect-form">
    <label for="account-input">Account id</label>
    <input id="account-input" name="account" autocomplete="off" required />
    <button id="detect-button" type="submit">Detect</button>
  </form>
  <div id="status" class="status" hidden></div>
  <div id="report" hidden>
    <div id="report-view"></div>
    <section id="feedback-panel">
      <h2>Feedback</h2>
      <form id="feedback-form">
        <label for="proposed-label">Proposed label</label>
        <select id="proposed-label">
          <option value="1">bot</option>
          <option value="0">human</option>
        </select>
        <label for="submitter-id">Submitter</label>
        <input id="submitter-id" autocomplete="off" required />
        <button id="feedback-button" type="submit">Submit feedback</button>
      </form>
      <div id="feedback-status" class="status" hidden></div>
    </section>
  </div>
`;

export class OperatorConsole {
  private readonly client: ApiClient;
  private readonly layoutSeed: number;
  private readonly inflight = new Map<string, Promise<void>>();
  private readonly recordIds = new Map<string, string>();
  private currentAccount: string | null = null;
  private requestSeq = 0;

  private readonly statusEl: HTMLElement;
  private readonly reportEl: HTMLElement;
  private readonly reportViewEl: HTMLElement;
  private readonly accountInput: HTMLInputElement;
  private readonly submitterInput: HTMLInputElement;
  private readonly labelSelect: HTMLSelectElement;
  private readonly feedbackButton: HTMLButtonElement;
  private readonly feedbackStatusEl: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    config: ConsoleConfig,
  ) {
    this.client = new ApiClient(config.baseUrl, config.fetchFn);
    this.layoutSeed = config.layoutSeed ?? 1337;
    root.innerHTML = SKELETON;
    this.statusEl = this.find("#status");
    this.reportEl = this.find("#report");
    this.reportViewEl = this.find("#report-view");
    this.accountInput = this.find("#account-input");
    this.submitterInput = this.find("#submitter-id");
    this.labelSelect = this.find("#proposed-label");
    this.feedbackButton = this.find("#feedback-button");
    this.feedbackStatusEl = this.find("#feedback-status");

    this.find<HTMLFormElement>("#detect-form").addEventListener(
      "submit",
      (event) => {
        event.preventDefault();
        const account = this.accountInput.value.trim();
        if (account) {
          void this.fetchAndRender(account);
        }
      },
    );
    this.find<HTMLFormElement>("#feedback-form").addEventListener(
      "submit",
      (event) => {
        event.preventDefault();
        void this.submitFeedbackForm(
          this.currentAccount,
          Number(this.labelSelect.value),
          this.submitterInput.value.trim(),
        );
      },
    );
  }

  /** Fetch one account's report and render it. Repeated calls for the
   * same account while a request is in flight share that request. */
  fetchAndRender(accountId: string): Promise<void> {
    const pending = this.inflight.get(accountId);
    if (pending) {
      return pending;
    }
    const task = this.runDetect(accountId).finally(() => {
      this.inflight.delete(accountId);
    });
    this.inflight.set(accountId, task);
    return task;
  }

  private async runDetect(accountId: string): Promise<void> {
    const seq = ++this.requestSeq;
    this.currentAccount = null;
    this.reportEl.hidden = true;
    this.reportViewEl.replaceChildren();
    this.clearBanner();
    this.setStatus("loading", `Scoring ${accountId}…`);
    let payload: unknown;
    try {
      payload = await this.client.detect(accountId);
    } catch (error) {
      if (seq === this.requestSeq) {
        this.showDetectError(accountId, error);
      }
      return;
    }
    if (seq !== this.requestSeq) {
      return;
    }
    try {
      const vm = toViewModel(payload);
      renderReport(this.reportViewEl, vm, this.layoutSeed);
      this.currentAccount = vm.accountId;
      this.reportEl.hidden = false;
      this.clearStatus();
    } catch (error) {
      this.reportViewEl.replaceChildren();
      this.showDetectError(accountId, error);
    }
  }

  private showDetectError(accountId: string, error: unknown): void {
    if (error instanceof PayloadError) {
      this.setStatus(
        "error",
        `The service answered with a malformed report (${error.message}); nothing was rendered.`,
      );
      return;
    }
    if (error instanceof ApiError) {
      if (error.code === "NOT_FOUND") {
        this.setStatus("not-found", `Account ${accountId} is unknown.`);
        return;
      }
      if (
        error.code === "UNAVAILABLE" ||
        error.code === "NOT_READY" ||
        error.status >= 500
      ) {
        this.setStatus(
          "retry",
          `Service unavailable: ${error.message}`,
          accountId,
        );
        return;
      }
      this.setStatus("error", `Detection failed: ${error.message}`);
      return;
    }
    const message = error instanceof Error ? error.message : String(error);
    this.setStatus("retry", `Service unreachable: ${message}`, accountId);
  }

  /** Post a proposed label for the currently displayed account and show
   * the resulting record's id and status. */
  async submitFeedbackForm(
    accountId: string | null,
    proposedLabel: number,
    submitterId: string,
  ): Promise<void> {
    if (!accountId) {
      this.setBanner("error", "Run a detection first, then submit feedback.");
      return;
    }
    this.feedbackButton.disabled = true;
    this.setBanner("pending", "Submitting feedback…");
    try {
      const payload = await this.client.submitFeedback(
        accountId,
        proposedLabel,
        submitterId,
      );
      const record = toFeedbackView(payload);
      const duplicate = this.recordIds.get(accountId) === record.id;
      this.recordIds.set(accountId, record.id);
      const statusText =
        record.status === "pending" ? "pending review" : record.status;
      if (duplicate) {
        this.setBanner(
          "duplicate",
          `Already submitted: record ${record.id} (${statusText}).`,
          record.id,
        );
      } else {
        this.setBanner(
          "ok",
          `Feedback recorded: record ${record.id} (${statusText}).`,
          record.id,
        );
      }
    } catch (error) {
      this.showFeedbackError(error);
    } finally {
      this.feedbackButton.disabled = false;
    }
  }

  private showFeedbackError(error: unknown): void {
    if (error instanceof PayloadError) {
      this.setBanner(
        "error",
        `The service answered with a malformed record (${error.message}); submit again to be sure.`,
      );
      return;
    }
    if (error instanceof ApiError) {
      if (error.code === "PRECONDITION") {
        this.setBanner(
          "error",
          "Run a detection for this account first, then submit feedback.",
        );
        return;
      }
      this.setBanner("error", `Feedback not sent: ${error.message}`);
      return;
    }
    const message = error instanceof Error ? error.message : String(error);
    this.setBanner(
      "error",
      `Feedback not sent, service unreachable: ${message}. Your entry is still in the form; try again.`,
    );
  }

  private setStatus(
    kind: StatusKind,
    message: string,
    retryAccount?: string,
  ): void {
    this.statusEl.hidden = false;
    this.statusEl.className = `status status--${kind}`;
    this.statusEl.replaceChildren(document.createTextNode(message));
    if (kind === "retry" && retryAccount !== undefined) {
      const button = document.createElement("button");
      button.id = "retry-button";
      button.type = "button";
      button.textContent = "Retry";
      button.addEventListener("click", () => {
        void this.fetchAndRender(retryAccount);
      });
      this.statusEl.append(" ", button);
    }
  }

  private clearStatus(): void {
    this.statusEl.hidden = true;
    this.statusEl.className = "status";
    this.statusEl.replaceChildren();
  }

  private setBanner(kind: BannerKind, message: string, recordId?: string): void {
    this.feedbackStatusEl.hidden = false;
    this.feedbackStatusEl.className = `status feedback--${kind}`;
    this.feedbackStatusEl.textContent = message;
    if (recordId === undefined) {
      delete this.feedbackStatusEl.dataset["recordId"];
    } else {
      this.feedbackStatusEl.dataset["recordId"] = recordId;
    }
  }

  private clearBanner(): void {
    this.feedbackStatusEl.hidden = true;
    this.feedbackStatusEl.className = "status";
    this.feedbackStatusEl.textContent = "";
    delete this.feedbackStatusEl.dataset["recordId"];
  }

  private find<T extends HTMLElement>(selector: string): T {
    const node = this.root.querySelector(selector);
    if (!node) {
      throw new Error(`missing element ${selector}`);
    }
    return node as T;
  }
}

export function mountConsole(
  root: HTMLElement,
  config: ConsoleConfig,
): OperatorConsole {
  return new OperatorConsole(root, config);
}
