import { renderAnswerCard, renderNoAnswers } from "./cards";
import { ApiError } from "./api";
import type { AskApi } from "./types";

interface PendingAsk {
  question: string;
  topK: number;
}

/** Single-page flow: FAQ panel, free-text entry, ranked answer cards.
 *
 * Concurrency rules: at most one /api/ask request is in flight; submissions
 * arriving meanwhile coalesce to the latest one, and responses that were
 * superseded are discarded instead of rendered.
 */
export class QaApp {
  private readonly root: HTMLElement;
  private readonly api: AskApi;

  private seq = 0;
  private busy = false;
  private pending: PendingAsk | null = null;
  private currentQuestion = "";

  private form!: HTMLFormElement;
  private input!: HTMLInputElement;
  private topKSelect!: HTMLSelectElement;
  private banner!: HTMLElement;
  private faqPanel!: HTMLElement;
  private results!: HTMLElement;
  private status!: HTMLElement;

  constructor(root: HTMLElement, api: AskApi) {
    this.root = root;
    this.api = api;
  }

  async init(): Promise<void> {
    this.render();
    await this.loadFaq();
  }

  get topK(): number {
    return Number(this.topKSelect.value);
  }

  private render(): void {
    this.root.replaceChildren();

    const heading = document.createElement("h1");
    heading.textContent = "Ask the literature";

    this.banner = document.createElement("div");
    this.banner.className = "error-banner";
    this.banner.hidden = true;

    this.form = document.createElement("form");
    this.form.className = "ask-form";
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.name = "question";
    this.input.placeholder = "Type a question in plain language…";
    this.input.setAttribute("aria-label", "question");

    this.topKSelect = document.createElement("select");
    this.topKSelect.setAttribute("aria-label", "answers to show");
    for (let k = 1; k <= 10; k++) {
      const option = document.createElement("option");
      option.value = String(k);
      option.textContent = `top ${k}`;
      this.topKSelect.append(option);
    }
    this.topKSelect.value = "5";
    this.topKSelect.addEventListener("change", () => {
      if (this.currentQuestion) {
        void this.submit(this.currentQuestion);
      }
    });

    const button = document.createElement("button");
    button.type = "submit";
    button.textContent = "Ask";

    this.form.append(this.input, this.topKSelect, button);
    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(this.input.value);
    });

    this.faqPanel = document.createElement("aside");
    this.faqPanel.className = "faq-panel";
    this.faqPanel.hidden = true;

    this.status = document.createElement("p");
    this.status.className = "status";
    this.status.hidden = true;

    this.results = document.createElement("section");
    this.results.className = "results";
    this.results.setAttribute("aria-live", "polite");

    this.root.append(heading, this.banner, this.form, this.faqPanel, this.status, this.results);
  }

  private async loadFaq(): Promise<void> {
    try {
      const entries = await this.api.fetchFaq();
      if (entries.length === 0) {
        return;
      }
      const title = document.createElement("h2");
      title.textContent = "Frequently asked";
      const list = document.createElement("ul");
      for (const entry of entries) {
        const item = document.createElement("li");
        const link = document.createElement("button");
        link.type = "button";
        link.className = "faq-entry";
        link.textContent = entry.question;
        link.addEventListener("click", () => {
          this.input.value = entry.question;
          void this.submit(entry.question);
        });
        item.append(link);
        list.append(item);
      }
      this.faqPanel.append(title, list);
      this.faqPanel.hidden = false;
    } catch {
      this.faqPanel.hidden = true; // free text still works
    }
  }

  async submit(text: string): Promise<void> {
    const question = text.trim();
    if (!question) {
      return;
    }
    this.currentQuestion = question;
    if (this.busy) {
      this.pending = { question, topK: this.topK };
      return;
    }
    await this.request(question, this.topK);
  }

  private async request(question: string, topK: number): Promise<void> {
    const mySeq = ++this.seq;
    this.busy = true;
    this.status.hidden = false;
    this.status.textContent = "Searching…";
    try {
      const response = await this.api.ask(question, topK);
      if (mySeq === this.seq) {
        this.hideError();
        this.renderAnswers(response.answers);
      }
    } catch (error) {
      if (mySeq === this.seq) {
        this.showError(
          error instanceof ApiError
            ? `The service answered HTTP ${error.status}: ${error.message}`
            : "Could not reach the answer service.",
        );
      }
    } finally {
      this.busy = false;
      this.status.hidden = true;
      const next = this.pending;
      this.pending = null;
      if (next) {
        await this.request(next.question, next.topK);
      }
    }
  }

  private renderAnswers(answers: Parameters<typeof renderAnswerCard>[0][]): void {
    this.results.replaceChildren();
    if (answers.length === 0) {
      this.results.append(renderNoAnswers());
      return;
    }
    answers.forEach((answer, i) => {
      this.results.append(renderAnswerCard(answer, i + 1));
    });
  }

  private showError(message: string): void {
    this.banner.replaceChildren();
    const text = document.createElement("span");
    text.textContent = message;
    const dismiss = document.createElement("button");
    dismiss.type = "button";
    dismiss.textContent = "Dismiss";
    dismiss.addEventListener("click", () => this.hideError());
    this.banner.append(text, dismiss);
    this.banner.hidden = false;
  }

  private hideError(): void {
    this.banner.hidden = true;
    this.banner.replaceChildren();
  }
}
