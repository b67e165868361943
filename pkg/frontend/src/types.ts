export interface DocumentMeta {
  id: string;
  title: string;
  authors: string[];
  journal: string;
  publish_time: string;
  url: string;
}

export interface Highlight {
  start: number;
  end: number;
}

export interface Answer {
  text: string;
  score: number;
  context: string;
  highlight: Highlight;
  document: DocumentMeta;
  topics: string[];
  support_count: number;
}

export interface Timings {
  retrieve_ms: number;
  read_ms: number;
  total_ms: number;
}

export interface AskResponse {
  question: string;
  answers: Answer[];
  timings: Timings;
}

export interface FaqEntry {
  question: string;
  tag: string;
}

export interface AskApi {
  ask(question: string, topK: number): Promise<AskResponse>;
  fetchFaq(): Promise<FaqEntry[]>;
}
