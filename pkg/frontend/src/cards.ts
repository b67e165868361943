import type { Answer } from "./types";

/** Answer card: emphasized span inside its context, metadata, topic chips.
 *
 * The highlight is assembled from text nodes around a <mark> element, so the
 * emphasized substring is exactly context[start, end) with no HTML parsing
 * in between.
 */
export function renderAnswerCard(answer: Answer, rank: number): HTMLElement {
  const card = document.createElement("article");
  card.className = "answer-card";

  const head = document.createElement("header");
  const rankEl = document.createElement("span");
  rankEl.className = "rank";
  rankEl.textContent = `#${rank}`;
  const scoreEl = document.createElement("span");
  scoreEl.className = "score";
  scoreEl.textContent = answer.score.toFixed(3);
  head.append(rankEl, scoreEl);
  if (answer.support_count > 1) {
    const support = document.createElement("span");
    support.className = "support";
    support.textContent = `${answer.support_count} sources`;
    head.append(support);
  }
  card.append(head);

  const context = document.createElement("p");
  context.className = "context";
  const { start, end } = answer.highlight;
  context.append(document.createTextNode(answer.context.slice(0, start)));
  const mark = document.createElement("mark");
  mark.className = "answer-text";
  mark.textContent = answer.context.slice(start, end);
  context.append(mark, document.createTextNode(answer.context.slice(end)));
  card.append(context);

  const meta = document.createElement("p");
  meta.className = "metadata";
  const title = document.createElement(answer.document.url ? "a" : "span");
  title.textContent = answer.document.title || answer.document.id;
  if (answer.document.url && title instanceof HTMLAnchorElement) {
    title.href = answer.document.url;
    title.target = "_blank";
    title.rel = "noopener";
  }
  meta.append(title);
  const details = [
    answer.document.authors.join(", "),
    answer.document.journal,
    answer.document.publish_time,
  ]
    .filter(Boolean)
    .join(" · ");
  if (details) {
    meta.append(document.createTextNode(` · ${details}`));
  }
  card.append(meta);

  if (answer.topics.length > 0) {
    const chips = document.createElement("div");
    chips.className = "topics";
    for (const word of answer.topics) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.textContent = word;
      chips.append(chip);
    }
    card.append(chips);
  }
  return card;
}

export function renderNoAnswers(): HTMLElement {
  const empty = document.createElement("p");
  empty.className = "no-answers";
  empty.textContent = "No answers found for this question.";
  return empty;
}
