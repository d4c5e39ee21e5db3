"""Token normalization pipeline: case folding, number spelling, stemming,
stop-word removal, PMI bigram collocation and controlled-term mapping.

The pipeline order is fixed: lowercase -> split -> number conversion ->
stemming -> stop-word removal. Bigram joining and dictionary mapping run as
separate passes over the resulting token sequences.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .stemmer import stem

TokenSeq = list[str]

# Decimal numbers are kept whole; everything else splits on non-alphanumerics.
_TOKEN_RE = re.compile(r"\d+\.\d+|[a-z0-9]+")
_INT_RE = re.compile(r"\d+\Z")

_ONES = (
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen",
)
_TENS = ("", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety")

NUMBER_TOKEN = "NUM"


def _spell_integer(n: int) -> str:
    if n < 20:
        return _ONES[n]
    tens, ones = divmod(n, 10)
    if ones == 0:
        return _TENS[tens]
    return f"{_TENS[tens]}_{_ONES[ones]}"


def _load_stopword_stems() -> frozenset[str]:
    text = resources.files("lirads_nlp.assets").joinpath("stopwords.txt").read_text("utf-8")
    words = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    # Tokens are already stemmed when the stop filter runs, so the list is
    # stemmed once here to make membership line up.
    return frozenset(stem(w) for w in words)


_STOPWORD_STEMS = _load_stopword_stems()


def tokenize_normalize(text: str) -> TokenSeq:
    """Normalize raw text into a stemmed, stop-word-free token sequence."""
    tokens: TokenSeq = []
    for raw in _TOKEN_RE.findall(text.lower()):
        if _INT_RE.match(raw):
            value = int(raw)
            token = _spell_integer(value) if value < 100 else NUMBER_TOKEN
        elif "." in raw:
            token = NUMBER_TOKEN
        else:
            token = stem(raw)
        if token in _STOPWORD_STEMS:
            continue
        tokens.append(token)
    return tokens


@dataclass
class BigramTable:
    """Adjacent word pairs retained by PMI rank."""

    entries: dict[tuple[str, str], float]
    counts: dict[tuple[str, str], int] = field(default_factory=dict)
    capacity: int = 1000

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self.entries

    def sorted_entries(self) -> list[tuple[tuple[str, str], float]]:
        return sorted(
            self.entries.items(),
            key=lambda kv: (-kv[1], -self.counts.get(kv[0], 0), kv[0]),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (a, b), pmi in self.sorted_entries():
                fh.write(f"{a}\t{b}\t{pmi:.6f}\n")

    @classmethod
    def load(cls, path: str | Path) -> "BigramTable":
        entries: dict[tuple[str, str], float] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataError(f"bad bigram row on line {lineno}")
                entries[(parts[0], parts[1])] = float(parts[2])
        return cls(entries=entries, capacity=max(len(entries), 1))


def learn_bigrams(
    corpus: Sequence[TokenSeq],
    min_count: int = 50,
    top_k: int = 1000,
    normalized: bool = False,
) -> BigramTable:
    """Rank adjacent (directional) pairs by PMI over the whole corpus.

    PMI(x, y) = log(p(x, y) / (p(x) p(y))) with pair probabilities from
    adjacent-pair counts and unigram probabilities from token counts. Pairs
    below min_count are discarded; the top_k by PMI survive, ties broken by
    descending count then lexicographic order. normalized=True switches to
    NPMI (PMI / -log p(x, y)).
    """
    if not corpus:
        raise DataError("empty corpus")
    unigrams: Counter[str] = Counter()
    pairs: Counter[tuple[str, str]] = Counter()
    n_pairs = 0
    for seq in corpus:
        unigrams.update(seq)
        for a, b in zip(seq, seq[1:]):
            pairs[(a, b)] += 1
            n_pairs += 1
    n_tokens = sum(unigrams.values())
    if n_tokens == 0 or n_pairs == 0:
        raise DataError("empty corpus")

    scored: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str], int] = {}
    for (a, b), c in pairs.items():
        if c < min_count:
            continue
        p_xy = c / n_pairs
        p_x = unigrams[a] / n_tokens
        p_y = unigrams[b] / n_tokens
        pmi = math.log(p_xy / (p_x * p_y))
        if normalized:
            pmi = pmi / -math.log(p_xy)
        scored[(a, b)] = pmi
        counts[(a, b)] = c

    ranked = sorted(scored.items(), key=lambda kv: (-kv[1], -counts[kv[0]], kv[0]))[:top_k]
    kept = dict(ranked)
    return BigramTable(entries=kept, counts={p: counts[p] for p in kept}, capacity=top_k)


def apply_bigrams(tokens: TokenSeq, table: BigramTable) -> TokenSeq:
    """Greedy left-to-right join; merged tokens do not merge again."""
    out: TokenSeq = []
    i = 0
    while i < len(tokens):
        if i + 1 < len(tokens) and (tokens[i], tokens[i + 1]) in table:
            out.append(f"{tokens[i]}_{tokens[i + 1]}")
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


@dataclass
class TermMapping:
    """Surface term -> uppercase tag replacement rules."""

    rules: dict[str, str]

    def __post_init__(self) -> None:
        for term, tag in self.rules.items():
            if term != term.lower():
                raise DataError(f"term mapping surface {term!r} must be lowercase")
            if tag != tag.upper():
                raise DataError(f"term mapping tag {tag!r} must be uppercase")

    def stemmed(self) -> "TermMapping":
        """Re-key surfaces through the stemmer so rules match pipeline tokens.

        Multi-word surfaces are stemmed word-wise and joined with underscores
        (the form the bigram pass produces). On stem collisions the first
        rule wins.
        """
        rules: dict[str, str] = {}
        for term, tag in self.rules.items():
            key = "_".join(stem(part) for part in term.split("_"))
            rules.setdefault(key, tag)
        return TermMapping(rules)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for term in sorted(self.rules):
                fh.write(f"{term}\t{self.rules[term]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "TermMapping":
        rules: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataError(f"bad term mapping row on line {lineno}")
                term = parts[0].strip().replace(" ", "_")
                if term in rules:
                    raise DataError(f"duplicate term mapping surface {term!r}")
                rules[term] = parts[1].strip()
        return cls(rules)

    @classmethod
    def default(cls) -> "TermMapping":
        with resources.as_file(
            resources.files("lirads_nlp.assets").joinpath("clever_terms.tsv")
        ) as path:
            return cls.load(path)


def map_dictionary(tokens: TokenSeq, mapping: TermMapping) -> TokenSeq:
    """Replace mapped tokens by their tag; everything else passes through."""
    rules = mapping.rules
    return [rules.get(tok, tok) for tok in tokens]


def filter_low_frequency(corpus: Sequence[TokenSeq], min_count: int = 50) -> list[TokenSeq]:
    """Drop tokens with corpus-wide count < min_count; uppercase tags are exempt."""
    counts: Counter[str] = Counter()
    for seq in corpus:
        counts.update(seq)
    return [
        [t for t in seq if t.isupper() or counts[t] >= min_count]
        for seq in corpus
    ]


def normalize_corpus(texts: Iterable[str]) -> list[TokenSeq]:
    """Convenience wrapper: tokenize_normalize over an iterable of texts."""
    return [tokenize_normalize(t) for t in texts]
