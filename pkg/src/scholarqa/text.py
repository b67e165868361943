"""Text primitives used by ingestion, retrieval, reading and evaluation.

Everything here is deterministic and rule-based so that the same input
always produces the same tokens, sentence boundaries and normal forms.
"""

import re
import string

# Letters and digits, underscore excluded.  Case-insensitive by construction,
# so the same spans are found whether or not the text was lowercased first.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Abbreviations whose trailing period never ends a sentence.
_ABBREVIATIONS = ("e.g.", "i.e.", "et al.", "Fig.", "Dr.")

_SENTENCE_ENDERS = frozenset(".!?")

# Question words are included so that a question's content terms exclude its
# interrogative scaffolding.
STOPWORDS = frozenset(
    """
    a about above after again all am an and any are as at be because been
    before being below between both but by did do does doing down during
    each few for from further had has have having he her here hers him his
    how i if in into is it its itself me more most my no nor not of off on
    once only or other our ours out over own same she should so some such
    than that the their theirs them then there these they this those through
    to too under until up very was we were what when where which while who
    whom why will with you your yours
    """.split()
)

_ARTICLES = frozenset({"a", "an", "the"})

_PUNCT_TO_SPACE = str.maketrans({ch: " " for ch in string.punctuation})


def tokenize_with_spans(text: str) -> list[tuple[str, int, int]]:
    """Return (token, start, end) triples; offsets index into ``text``."""
    return [(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character; no stemming."""
    return [m.group().lower() for m in _TOKEN_RE.finditer(text)]


def _ends_sentence(text: str, i: int) -> bool:
    # A terminator ends a sentence when followed by whitespace and then an
    # uppercase letter or digit, and it is not part of a known abbreviation.
    for abbr in _ABBREVIATIONS:
        if text.endswith(abbr, 0, i + 1):
            return False
    j = i + 1
    if j >= len(text) or not text[j].isspace():
        return False
    while j < len(text) and text[j].isspace():
        j += 1
    return j < len(text) and (text[j].isupper() or text[j].isdigit())


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Split ``text`` into sentence (start, end) spans, end exclusive.

    Splits after '.', '!' or '?' when followed by whitespace and an
    uppercase letter or digit; the abbreviations in ``_ABBREVIATIONS`` do
    not split.  Leading and trailing whitespace is excluded from spans.
    """
    spans: list[tuple[int, int]] = []
    start: int | None = None
    for i, ch in enumerate(text):
        if start is None:
            if not ch.isspace():
                start = i
            else:
                continue
        if ch in _SENTENCE_ENDERS and _ends_sentence(text, i):
            spans.append((start, i + 1))
            start = None
    if start is not None:
        end = start + len(text[start:].rstrip())
        if end > start:
            spans.append((start, end))
    return spans


def split_sentences(text: str) -> list[str]:
    return [text[s:e] for s, e in sentence_spans(text)]


def normalize_answer(text: str) -> list[str]:
    """Normal form for answer comparison.

    Lowercase, map ASCII punctuation to spaces, split on whitespace and
    drop the articles a/an/the.
    """
    lowered = text.lower().translate(_PUNCT_TO_SPACE)
    return [tok for tok in lowered.split() if tok not in _ARTICLES]
