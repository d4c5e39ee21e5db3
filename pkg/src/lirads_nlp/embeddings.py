"""CBOW word embeddings with negative sampling, trained from scratch.

Vocabulary construction, the negative-sampling loss and its analytic
gradients, SGD training with a linear learning-rate decay, cosine similarity,
lexicon synonym derivation and document embedding by vector averaging.
"""

import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, InternalError
from .normalize import TokenSeq

NOISE_EXPONENT = 0.75


@dataclass
class Vocabulary:
    token_to_index: dict[str, int]
    index_to_token: list[str]
    counts: np.ndarray  # per-token corpus frequency, aligned with indices

    @property
    def size(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index


@dataclass
class EmbeddingModel:
    W_in: np.ndarray   # (V, d) input/context vectors
    W_out: np.ndarray  # (V, d) output vectors
    d: int
    trained_epochs: int = 0
    epoch_losses: list[float] = field(default_factory=list)


def build_vocabulary(corpus: Sequence[TokenSeq], cap: int = 2000, min_count: int = 50) -> Vocabulary:
    """Rank tokens by descending count (ties lexicographic) and keep the top cap."""
    counts: Counter[str] = Counter()
    for seq in corpus:
        counts.update(seq)
    ranked = sorted(
        ((t, c) for t, c in counts.items() if c >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )[:cap]
    if len(ranked) < 2:
        raise DataError("vocabulary too small")
    index_to_token = [t for t, _ in ranked]
    return Vocabulary(
        token_to_index={t: i for i, t in enumerate(index_to_token)},
        index_to_token=index_to_token,
        counts=np.array([c for _, c in ranked], dtype=np.int64),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class CbowGradients:
    """Sparse analytic gradients of the negative-sampling loss."""

    context_rows: np.ndarray   # (C,) W_in row per context occurrence
    context_grad: np.ndarray   # (d,) gradient shared by every context occurrence
    output_rows: np.ndarray    # (1+k,) target first, then negatives
    output_grads: np.ndarray   # (1+k, d) gradient per output row occurrence


def cbow_ns_loss_and_grads(
    model: EmbeddingModel,
    context: np.ndarray | Sequence[int],
    target: int,
    negatives: np.ndarray | Sequence[int],
) -> tuple[float, CbowGradients]:
    """Negative-sampling loss and exact gradients for one (context, target) pair.

    loss = -log sigmoid(w_out[target] . h) - sum_j log sigmoid(-w_out[neg_j] . h)
    with h the mean of the context rows of W_in. Context duplicates each
    contribute one occurrence; the 1/|context| factor is folded into
    context_grad.
    """
    context = np.asarray(context, dtype=np.int64)
    negatives = np.asarray(negatives, dtype=np.int64)
    if context.size == 0:
        raise DataError("empty context window")
    if np.any(negatives == target):
        raise InternalError("target found among negative samples")

    h = model.W_in[context].mean(axis=0)
    rows = np.concatenate(([target], negatives))
    scores = model.W_out[rows] @ h
    loss = float(np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum())

    err = _sigmoid(scores)
    err[0] -= 1.0  # d(-log sigmoid(s))/ds = sigmoid(s) - 1
    output_grads = err[:, None] * h[None, :]
    grad_h = err @ model.W_out[rows]
    return loss, CbowGradients(
        context_rows=context,
        context_grad=grad_h / context.size,
        output_rows=rows,
        output_grads=output_grads,
    )


def _noise_cumulative(vocab: Vocabulary) -> np.ndarray:
    weights = vocab.counts.astype(np.float64) ** NOISE_EXPONENT
    cum = np.cumsum(weights / weights.sum())
    cum[-1] = 1.0
    return cum


def _draw_negatives(cum: np.ndarray, rng: np.random.Generator, k: int, target: int) -> np.ndarray:
    negs = np.searchsorted(cum, rng.random(k), side="right")
    while True:
        clash = negs == target
        if not clash.any():
            return negs
        negs[clash] = np.searchsorted(cum, rng.random(int(clash.sum())), side="right")


def train_cbow(
    corpus: Sequence[TokenSeq],
    vocab: Vocabulary,
    d: int = 100,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    lr0: float = 0.025,
    seed: int = 0,
    workers: int = 1,
) -> EmbeddingModel:
    """SGD over all (context, target) pairs with a symmetric window.

    Negatives come from the unigram distribution raised to the 3/4 power,
    excluding the target. The learning rate decays linearly from lr0 to
    lr0/100 over the total number of updates. With workers == 1 the result is
    bit-identical for a fixed seed; workers > 1 updates shared matrices
    without synchronization (throughput mode, not reproducible).
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    if d < 2:
        raise ConfigError("embedding dimension must be >= 2")
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    if negatives < 1:
        raise ConfigError("negatives must be >= 1")

    t2i = vocab.token_to_index
    seqs = []
    for seq in corpus:
        mapped = np.array([t2i[t] for t in seq if t in t2i], dtype=np.int64)
        if mapped.size >= 2:
            seqs.append(mapped)

    rng = np.random.default_rng(seed)
    V = vocab.size
    W_in = (rng.random((V, d)) - 0.5) / d
    W_out = np.zeros((V, d))
    model = EmbeddingModel(W_in=W_in, W_out=W_out, d=d)
    if not seqs:
        return model

    cum = _noise_cumulative(vocab)
    pairs_per_epoch = sum(len(s) for s in seqs)
    total_updates = pairs_per_epoch * epochs
    lr_end = lr0 / 100.0

    def lr_at(update: int) -> float:
        if total_updates <= 1:
            return lr0
        frac = update / (total_updates - 1)
        return lr0 + (lr_end - lr0) * frac

    def run_shard(shard: list[np.ndarray], shard_rng: np.random.Generator,
                  update_offset: int, losses: list[float]) -> None:
        update = update_offset
        for epoch in range(epochs):
            epoch_loss = 0.0
            for seq in shard:
                L = len(seq)
                for i in range(L):
                    lo = 0 if i < window else i - window
                    hi = min(L, i + window + 1)
                    ctx = np.concatenate((seq[lo:i], seq[i + 1:hi]))
                    target = int(seq[i])
                    negs = _draw_negatives(cum, shard_rng, negatives, target)
                    loss, grads = cbow_ns_loss_and_grads(model, ctx, target, negs)
                    lr = lr_at(update)
                    np.add.at(W_out, grads.output_rows, -lr * grads.output_grads)
                    np.add.at(W_in, grads.context_rows, -lr * grads.context_grad)
                    epoch_loss += loss
                    update += 1
            losses.append(epoch_loss)

    if workers <= 1:
        losses: list[float] = []
        run_shard(seqs, rng, 0, losses)
        model.epoch_losses = [ls / pairs_per_epoch for ls in losses]
    else:
        shards = [seqs[w::workers] for w in range(workers)]
        shard_losses: list[list[float]] = [[] for _ in range(workers)]
        offset = 0
        threads = []
        for w, shard in enumerate(shards):
            t = threading.Thread(
                target=run_shard,
                args=(shard, np.random.default_rng([seed, w]), offset, shard_losses[w]),
            )
            offset += sum(len(s) for s in shard) * epochs
            threads.append(t)
            t.start()
        for t in threads:
            t.join()
        model.epoch_losses = [
            sum(per_epoch) / pairs_per_epoch
            for per_epoch in zip(*[ls for ls in shard_losses if ls])
        ]

    model.trained_epochs = epochs
    if not (np.isfinite(W_in).all() and np.isfinite(W_out).all()):
        raise InternalError("non-finite values in trained embedding matrices")
    return model


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError("cosine similarity requires equal dimensions")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataError("undefined similarity for zero vector")
    return float(a @ b / (na * nb))


@dataclass
class SynonymMap:
    """Root lexicon term -> [(synonym, similarity)], scores above threshold."""

    entries: dict[str, list[tuple[str, float]]]
    warnings: list[str] = field(default_factory=list)
    _reverse: dict[str, str] | None = field(default=None, repr=False)

    def replacements(self) -> dict[str, str]:
        if self._reverse is None:
            self._reverse = {
                syn: root
                for root, syns in self.entries.items()
                for syn, _ in syns
            }
        return self._reverse

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for root in self.entries:
                for syn, score in self.entries[root]:
                    fh.write(f"{root}\t{syn}\t{score:.6f}\n")

    @classmethod
    def load(cls, path: str | Path) -> "SynonymMap":
        entries: dict[str, list[tuple[str, float]]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataError(f"bad synonym row on line {lineno}")
                entries.setdefault(parts[0], []).append((parts[1], float(parts[2])))
        return cls(entries=entries)


def derive_lexicon_synonyms(
    model: EmbeddingModel,
    vocab: Vocabulary,
    lexicon: Sequence[str],
    threshold: float = 0.80,
    k: int = 20,
) -> SynonymMap:
    """Nearest vocabulary tokens above the similarity threshold per root.

    Roots missing from the vocabulary yield empty entries plus a warning.
    A synonym is assigned to at most one root: the highest-similarity root
    wins, ties resolved by lexicon order.
    """
    roots = list(dict.fromkeys(lexicon))  # preserve order, drop duplicates
    root_set = set(roots)
    norms = np.linalg.norm(model.W_in, axis=1)
    safe_norms = np.where(norms == 0.0, 1.0, norms)

    candidates: dict[str, list[tuple[str, float]]] = {}
    warnings: list[str] = []
    for root in roots:
        idx = vocab.token_to_index.get(root)
        if idx is None or norms[idx] == 0.0:
            warnings.append(f"lexicon root {root!r} not in vocabulary")
            candidates[root] = []
            continue
        sims = model.W_in @ model.W_in[idx] / (safe_norms * norms[idx])
        sims[norms == 0.0] = -np.inf
        order = np.argsort(-sims, kind="stable")
        found: list[tuple[str, float]] = []
        for j in order:
            if len(found) >= k:
                break
            sim = float(sims[j])
            if sim <= threshold:
                break
            token = vocab.index_to_token[j]
            if token == root or token in root_set:
                continue
            found.append((token, sim))
        candidates[root] = found

    # One-root rule: each synonym goes to its highest-similarity root.
    best: dict[str, tuple[float, int]] = {}
    for pos, root in enumerate(roots):
        for syn, sim in candidates[root]:
            cur = best.get(syn)
            if cur is None or sim > cur[0]:
                best[syn] = (sim, pos)
    entries = {
        root: [(syn, sim) for syn, sim in candidates[root] if best[syn][1] == pos]
        for pos, root in enumerate(roots)
    }
    return SynonymMap(entries=entries, warnings=warnings)


def normalize_with_lexicon(tokens: TokenSeq, syn: SynonymMap) -> TokenSeq:
    """Replace every known synonym by its root term; length is preserved."""
    reverse = syn.replacements()
    return [reverse.get(t, t) for t in tokens]


def embed_document(
    tokens: TokenSeq, model: EmbeddingModel, vocab: Vocabulary
) -> tuple[np.ndarray, float]:
    """Mean of W_in rows over in-vocabulary tokens, plus vocabulary coverage."""
    rows = [vocab.token_to_index[t] for t in tokens if t in vocab.token_to_index]
    if not rows:
        return np.zeros(model.d), 0.0
    vec = model.W_in[rows].mean(axis=0)
    return vec, len(rows) / len(tokens)


def save_embeddings(path: str | Path, tokens: Sequence[str], matrix: np.ndarray) -> None:
    """Line-oriented text format: header "V d", then token + d decimals."""
    V, d = matrix.shape
    if V != len(tokens):
        raise InternalError("token list and matrix row count differ")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{V} {d}\n")
        for token, row in zip(tokens, matrix):
            fh.write(token + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError("malformed embedding file header")
        V, d = int(header[0]), int(header[1])
        tokens: list[str] = []
        matrix = np.empty((V, d))
        for i in range(V):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise DataError(f"malformed embedding row {i + 1}")
            tokens.append(parts[0])
            matrix[i] = [float(x) for x in parts[1:]]
    return tokens, matrix
