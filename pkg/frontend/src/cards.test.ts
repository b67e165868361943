import { describe, expect, it } from "vitest";

import { renderAnswerCard, renderNoAnswers } from "./cards";
import type { Answer } from "./types";

function answer(overrides: Partial<Answer> = {}): Answer {
  return {
    text: "Wuhan City, China",
    score: 0.91,
    context:
      "On December 29, 2019, clinicians in a hospital in Wuhan City, China, noticed a clustering of cases.",
    highlight: { start: 50, end: 67 },
    document: {
      id: "d1",
      title: "Early report of an unusual pneumonia cluster",
      authors: ["Chen, L."],
      journal: "Journal of Clinical Findings",
      publish_time: "2020-02-17",
      url: "https://example.org/d1",
    },
    topics: ["pneumonia", "cluster", "hospital"],
    support_count: 2,
    ...overrides,
  };
}

describe("renderAnswerCard", () => {
  it("emphasizes exactly the answer text", () => {
    const card = renderAnswerCard(answer(), 1);
    const mark = card.querySelector("mark.answer-text");
    expect(mark?.textContent).toBe("Wuhan City, China");
  });

  it("uses the offsets, not a text search", () => {
    // the answer string occurs twice; offsets select the second occurrence
    const context = "masks or masks again";
    const card = renderAnswerCard(
      answer({ text: "masks", context, highlight: { start: 9, end: 14 } }),
      1,
    );
    const mark = card.querySelector("mark.answer-text");
    expect(mark?.textContent).toBe("masks");
    expect(card.querySelector("p.context")?.textContent).toBe(context);
    expect(card.querySelector("p.context")?.innerHTML).toContain(
      'masks or <mark class="answer-text">masks</mark> again',
    );
  });

  it("keeps the full context around the mark", () => {
    const card = renderAnswerCard(answer(), 1);
    expect(card.querySelector("p.context")?.textContent).toBe(answer().context);
  });

  it("renders metadata and topic chips", () => {
    const card = renderAnswerCard(answer(), 3);
    expect(card.querySelector(".metadata")?.textContent).toContain("Chen, L.");
    expect(card.querySelector(".metadata a")?.getAttribute("href")).toBe(
      "https://example.org/d1",
    );
    const chips = [...card.querySelectorAll(".chip")].map((c) => c.textContent);
    expect(chips).toEqual(["pneumonia", "cluster", "hospital"]);
    expect(card.querySelector(".score")?.textContent).toBe("0.910");
    expect(card.querySelector(".support")?.textContent).toBe("2 sources");
  });

  it("escapes markup in untrusted text", () => {
    const card = renderAnswerCard(
      answer({
        text: "<b>bold</b>",
        context: "x <b>bold</b> y",
        highlight: { start: 2, end: 13 },
      }),
      1,
    );
    expect(card.querySelectorAll("b").length).toBe(0);
    expect(card.querySelector("mark.answer-text")?.textContent).toBe("<b>bold</b>");
  });
});

describe("renderNoAnswers", () => {
  it("explains the empty state", () => {
    expect(renderNoAnswers().textContent).toMatch(/no answers/i);
  });
});
