import { apiBase } from "./config";
import type { AskResponse, FaqEntry } from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function errorDetail(res: Response): Promise<string> {
  const payload = await res.json().catch(() => null);
  return payload?.detail ?? `request failed with HTTP ${res.status}`;
}

export async function ask(question: string, topK: number): Promise<AskResponse> {
  const res = await fetch(`${apiBase()}/api/ask`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ question, top_k: topK }),
  });
  if (!res.ok) {
    throw new ApiError(res.status, await errorDetail(res));
  }
  return (await res.json()) as AskResponse;
}

export async function fetchFaq(): Promise<FaqEntry[]> {
  const res = await fetch(`${apiBase()}/api/faq`);
  if (!res.ok) {
    throw new ApiError(res.status, await errorDetail(res));
  }
  return (await res.json()) as FaqEntry[];
}
