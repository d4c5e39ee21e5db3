"""End-to-end orchestration: training the full pipeline, persisting a model
bundle with manifest hashes, and running inference against a loaded bundle.

Training: segment liver findings -> normalize -> learn/apply bigrams ->
dictionary map -> frequency filter -> vocabulary -> CBOW -> derive synonym
lexicon -> lexicon-normalize -> document embeddings + lesion features ->
SMOTE -> base classifiers -> weighted-voting ensemble. Unsupervised stages
see every non-validation report; the classifiers see only labeled ones.
"""

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import (
    EnsembleHyperparams,
    EnsembleModel,
    LabeledDataset,
    LogRegModel,
    Prediction,
    TreeModel,
    TreeNode,
    ensemble_predict,
    fit_ensemble,
)
from .config import PipelineConfig
from .embeddings import (
    EmbeddingModel,
    SynonymMap,
    Vocabulary,
    build_vocabulary,
    derive_lexicon_synonyms,
    embed_document,
    load_embeddings,
    normalize_with_lexicon,
    save_embeddings,
    train_cbow,
)
from .errors import DataError
from .evaluate import ConfusionMatrix, MetricsReport, confusion, metrics
from .measures import LesionFeatures, lesion_features
from .normalize import (
    BigramTable,
    TermMapping,
    TokenSeq,
    apply_bigrams,
    filter_low_frequency,
    learn_bigrams,
    map_dictionary,
    tokenize_normalize,
)
from .reports import Report, extract_liver_section, extract_lirads_label

MANIFEST_NAME = "manifest.json"
_BUNDLE_FILES = (
    "vocab.tsv",
    "embeddings.txt",
    "embeddings_out.txt",
    "bigrams.tsv",
    "term_mapping.tsv",
    "synonyms.tsv",
    "removal.txt",
    "logreg.txt",
    "tree.tsv",
    "ensemble_weights.txt",
)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stopwords_digest() -> str:
    data = resources.files("lirads_nlp.assets").joinpath("stopwords.txt").read_bytes()
    return hashlib.sha256(data).hexdigest()


def split_by_id_hash(report_id: str, seed: int, val_fraction: float) -> bool:
    """True when the report falls into the validation split (stable by id)."""
    digest = hashlib.sha256(f"{seed}:{report_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64 < val_fraction


@dataclass
class Bundle:
    vocab: Vocabulary
    model: EmbeddingModel
    bigrams: BigramTable
    mapping: TermMapping  # stemmed runtime rules
    synonyms: SynonymMap
    ensemble: EnsembleModel
    removal: frozenset[str]
    literal_paper_measures: bool = False


@dataclass
class TrainResult:
    bundle: Bundle
    n_train: int
    n_val: int
    val_confusion: ConfusionMatrix | None
    val_metrics: MetricsReport | None
    warnings: list[str] = field(default_factory=list)


def _load_removal_list(cfg: PipelineConfig) -> frozenset[str]:
    if cfg.removal_list_path is None:
        return frozenset()
    try:
        text = Path(cfg.removal_list_path).read_text("utf-8")
    except OSError as exc:
        raise DataError(f"cannot read removal list: {exc}") from exc
    return frozenset(
        ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")
    )


def _load_mapping(cfg: PipelineConfig) -> TermMapping:
    if cfg.term_mapping_path is not None:
        return TermMapping.load(cfg.term_mapping_path).stemmed()
    return TermMapping.default().stemmed()


def _prepare_tokens(
    text: str, bigrams: BigramTable, mapping: TermMapping, removal: frozenset[str]
) -> TokenSeq:
    tokens = [t for t in tokenize_normalize(text) if t not in removal]
    return map_dictionary(apply_bigrams(tokens, bigrams), mapping)


def normalize_lexicon_roots(
    roots: Sequence[str], bigrams: BigramTable, mapping: TermMapping,
    removal: frozenset[str] = frozenset(),
) -> tuple[list[str], list[str]]:
    """Run configured root terms through the token pipeline.

    Roots must reduce to a single token (multi-word roots rely on the learned
    bigram join); the rest come back as warnings.
    """
    normalized: list[str] = []
    warnings: list[str] = []
    for root in roots:
        tokens = _prepare_tokens(root, bigrams, mapping, removal)
        if len(tokens) == 1:
            normalized.append(tokens[0])
        else:
            warnings.append(
                f"lexicon root {root!r} does not normalize to a single token; skipped"
            )
    return normalized, warnings


def _features_for(
    report: Report,
    bundle_parts: "Bundle",
) -> tuple[np.ndarray, float, LesionFeatures]:
    liver_text = extract_liver_section(report)
    tokens = _prepare_tokens(liver_text, bundle_parts.bigrams, bundle_parts.mapping, bundle_parts.removal)
    tokens = normalize_with_lexicon(tokens, bundle_parts.synonyms)
    vec, coverage = embed_document(tokens, bundle_parts.model, bundle_parts.vocab)
    feats = lesion_features(liver_text, include_prior=bundle_parts.literal_paper_measures)
    return vec, coverage, feats


def train_pipeline(reports: Sequence[Report], cfg: PipelineConfig) -> TrainResult:
    labeled = [(r, extract_lirads_label(r)) for r in reports]
    labeled = [(r, lab) for r, lab in labeled if lab is not None]
    if not labeled:
        raise DataError("no labeled reports: nothing to train on")

    val_ids = {
        r.id for r, _ in labeled if split_by_id_hash(r.id, cfg.seed_split, cfg.val_fraction)
    }
    train_labeled = [(r, lab) for r, lab in labeled if r.id not in val_ids]
    val_labeled = [(r, lab) for r, lab in labeled if r.id in val_ids]
    if not train_labeled:
        raise DataError("validation split swallowed every labeled report")
    present = {int(lab) for _, lab in train_labeled}
    if present != {1, 2, 3}:
        raise DataError("training split must contain all three categories")

    removal = _load_removal_list(cfg)
    mapping = _load_mapping(cfg)

    # Unsupervised text stages: all reports except held-out validation ones.
    unsup_reports = [r for r in reports if r.id not in val_ids]
    unsup_texts = [extract_liver_section(r) for r in unsup_reports]
    raw_seqs = [
        [t for t in tokenize_normalize(text) if t not in removal] for text in unsup_texts
    ]

    from .normalize import learn_bigrams  # local import to avoid cycle confusion

    bigrams = learn_bigrams(
        raw_seqs,
        min_count=cfg.bigram_min_count,
        top_k=cfg.bigram_top_k,
        normalized=cfg.bigram_npmi,
    )
    seqs = [map_dictionary(apply_bigrams(s, bigrams), mapping) for s in raw_seqs]
    seqs = filter_low_frequency(seqs, min_count=cfg.token_min_count)
    vocab = build_vocabulary(seqs, cap=cfg.vocab_cap, min_count=cfg.token_min_count)
    workers = 1 if cfg.deterministic else cfg.embed_workers
    model = train_cbow(
        seqs,
        vocab,
        d=cfg.embed_dim,
        window=cfg.embed_window,
        negatives=cfg.embed_negatives,
        epochs=cfg.embed_epochs,
        lr0=cfg.embed_lr0,
        seed=cfg.seed_embedding,
        workers=workers,
    )

    roots, warnings = normalize_lexicon_roots(cfg.lexicon_roots, bigrams, mapping, removal)
    synonyms = derive_lexicon_synonyms(
        model, vocab, roots, threshold=cfg.synonym_threshold, k=cfg.synonym_top_k
    )
    warnings.extend(synonyms.warnings)

    bundle = Bundle(
        vocab=vocab,
        model=model,
        bigrams=bigrams,
        mapping=mapping,
        synonyms=synonyms,
        ensemble=None,  # type: ignore[arg-type]  # filled below
        removal=removal,
        literal_paper_measures=cfg.literal_paper_measures,
    )

    def views(rows: list[tuple[Report, int]]):
        embeds, lesions, labels = [], [], []
        for report, lab in rows:
            vec, _, feats = _features_for(report, bundle)
            embeds.append(vec)
            lesions.append([feats.lesion_count, feats.max_long_axis_mm])
            labels.append(int(lab))
        return (
            np.array(embeds, dtype=np.float64),
            np.array(lesions, dtype=np.float64),
            np.array(labels, dtype=np.int64),
        )

    X_embed, X_lesion, y = views(train_labeled)
    val_X_embed, val_X_lesion, val_y = views(val_labeled) if val_labeled else (None, None, None)

    hp = EnsembleHyperparams(
        smote_k=cfg.smote_k,
        smote_seed=cfg.seed_smote,
        lam=cfg.clf_lambda,
        logreg_epochs=cfg.clf_epochs,
        logreg_seed=cfg.seed_logreg,
        logreg_tol=cfg.clf_tol,
        tree_max_depth=cfg.tree_max_depth,
        tree_min_leaf=cfg.tree_min_leaf,
    )
    val_tuples = (
        [(val_X_embed[i], val_X_lesion[i], int(val_y[i])) for i in range(len(val_y))]
        if val_labeled
        else []
    )
    bundle.ensemble = fit_ensemble(
        LabeledDataset(X_embed, y, "section_embedding"),
        LabeledDataset(X_lesion, y, "lesion_features"),
        val_tuples,
        hp,
    )

    val_cm = None
    val_report = None
    if val_labeled:
        preds = [
            ensemble_predict(bundle.ensemble, val_X_embed[i], val_X_lesion[i])
            for i in range(len(val_y))
        ]
        val_cm = confusion(list(val_y), [p.argmax for p in preds])
        val_report = metrics(val_cm)

    return TrainResult(
        bundle=bundle,
        n_train=len(train_labeled),
        n_val=len(val_labeled),
        val_confusion=val_cm,
        val_metrics=val_report,
        warnings=warnings,
    )


def infer_report(bundle: Bundle, report: Report) -> tuple[Prediction, float, LesionFeatures]:
    """Predict one report; the impression section is never consulted."""
    vec, coverage, feats = _features_for(report, bundle)
    pred = ensemble_predict(
        bundle.ensemble, vec, np.array([feats.lesion_count, feats.max_long_axis_mm])
    )
    return pred, coverage, feats


# ---------------------------------------------------------------------------
# Bundle persistence


def _save_tree(tree: TreeModel, path: Path) -> None:
    # Pre-order rows: node_id feature threshold left_id right_id probs.
    rows: list[str] = []

    def walk(node: TreeNode) -> int:
        node_id = len(rows)
        rows.append("")  # reserve position, filled after children are numbered
        if node.is_leaf:
            probs = ";".join(f"{p:.17g}" for p in node.probs)
            rows[node_id] = f"{node_id}\t-1\t0\t-1\t-1\t{probs}"
        else:
            left_id = walk(node.left)
            right_id = walk(node.right)
            rows[node_id] = (
                f"{node_id}\t{node.feature}\t{node.threshold:.17g}\t{left_id}\t{right_id}\t-"
            )
        return node_id

    walk(tree.root)
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def _load_tree(path: Path, max_depth: int) -> TreeModel:
    nodes: dict[int, TreeNode] = {}
    children: dict[int, tuple[int, int]] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        node_id_s, feature_s, thr_s, left_s, right_s, probs_s = line.split("\t")
        node_id = int(node_id_s)
        if probs_s != "-":
            probs = np.array([float(p) for p in probs_s.split(";")])
            nodes[node_id] = TreeNode(probs=probs)
        else:
            nodes[node_id] = TreeNode(feature=int(feature_s), threshold=float(thr_s))
            children[node_id] = (int(left_s), int(right_s))
    for node_id, (left_id, right_id) in children.items():
        nodes[node_id].left = nodes[left_id]
        nodes[node_id].right = nodes[right_id]
    if 0 not in nodes:
        raise DataError("tree file has no root node")
    return TreeModel(root=nodes[0], max_depth=max_depth)


def save_bundle(result_bundle: Bundle, out_dir: str | Path, cfg: PipelineConfig) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = result_bundle

    with open(out / "vocab.tsv", "w", encoding="utf-8") as fh:
        for token, count in zip(b.vocab.index_to_token, b.vocab.counts):
            fh.write(f"{token}\t{int(count)}\n")
    save_embeddings(out / "embeddings.txt", b.vocab.index_to_token, b.model.W_in)
    save_embeddings(out / "embeddings_out.txt", b.vocab.index_to_token, b.model.W_out)
    b.bigrams.save(out / "bigrams.tsv")
    b.mapping.save(out / "term_mapping.tsv")
    b.synonyms.save(out / "synonyms.tsv")
    (out / "removal.txt").write_text(
        "".join(f"{t}\n" for t in sorted(b.removal)), encoding="utf-8"
    )

    lag = b.ensemble.embed_clf
    with open(out / "logreg.txt", "w", encoding="utf-8") as fh:
        for c in range(3):
            row = [f"{x:.17g}" for x in lag.W[c]] + [f"{lag.b[c]:.17g}"]
            fh.write(" ".join(row) + "\n")
    _save_tree(b.ensemble.lesion_clf, out / "tree.tsv")
    w_e, w_l = b.ensemble.weights
    (out / "ensemble_weights.txt").write_text(f"{w_e:.17g} {w_l:.17g}\n", encoding="utf-8")

    manifest = {
        "format": 1,
        "hashes": {name: _sha256_file(out / name) for name in _BUNDLE_FILES},
        "assets": {"stopwords_sha256": _stopwords_digest()},
        "science": {
            "embed_dim": cfg.embed_dim,
            "embed_window": cfg.embed_window,
            "vocab_cap": cfg.vocab_cap,
            "token_min_count": cfg.token_min_count,
            "synonym_threshold": cfg.synonym_threshold,
            "clf_lambda": cfg.clf_lambda,
            "tree_max_depth": cfg.tree_max_depth,
            "literal_paper_measures": cfg.literal_paper_measures,
            "low_band": cfg.low_band,
            "high_band": cfg.high_band,
        },
        "validation_macro_f1": b.ensemble.val_macro_f1,
    }
    (out / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_bundle(bundle_dir: str | Path) -> Bundle:
    path = Path(bundle_dir)
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"no {MANIFEST_NAME} in {path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    for name, expected in manifest.get("hashes", {}).items():
        target = path / name
        if not target.is_file() or _sha256_file(target) != expected:
            raise DataError(f"bundle/pipeline mismatch: {name}")
    if manifest.get("assets", {}).get("stopwords_sha256") != _stopwords_digest():
        raise DataError("bundle/pipeline mismatch: stopwords asset")

    tokens: list[str] = []
    counts: list[int] = []
    for line in (path / "vocab.tsv").read_text(encoding="utf-8").splitlines():
        token, count = line.split("\t")
        tokens.append(token)
        counts.append(int(count))
    emb_tokens, W_in = load_embeddings(path / "embeddings.txt")
    out_tokens, W_out = load_embeddings(path / "embeddings_out.txt")
    if emb_tokens != tokens or out_tokens != tokens:
        raise DataError("bundle/pipeline mismatch: vocabulary vs embedding rows")
    vocab = Vocabulary(
        token_to_index={t: i for i, t in enumerate(tokens)},
        index_to_token=tokens,
        counts=np.array(counts, dtype=np.int64),
    )
    model = EmbeddingModel(W_in=W_in, W_out=W_out, d=W_in.shape[1])

    science = manifest.get("science", {})
    rows = (path / "logreg.txt").read_text(encoding="utf-8").splitlines()
    if len(rows) != 3:
        raise DataError("logreg.txt must hold exactly 3 rows")
    values = [np.array([float(x) for x in row.split()]) for row in rows]
    W = np.stack([v[:-1] for v in values])
    b_vec = np.array([v[-1] for v in values])
    logreg = LogRegModel(W=W, b=b_vec, lam=float(science.get("clf_lambda", 1e-4)))

    tree = _load_tree(path / "tree.tsv", int(science.get("tree_max_depth", 4)))
    w_e, w_l = (
        float(x)
        for x in (path / "ensemble_weights.txt").read_text(encoding="utf-8").split()
    )
    ensemble = EnsembleModel(
        embed_clf=logreg,
        lesion_clf=tree,
        weights=(w_e, w_l),
        val_macro_f1=manifest.get("validation_macro_f1", {}),
    )

    removal = frozenset(
        ln for ln in (path / "removal.txt").read_text(encoding="utf-8").splitlines() if ln
    )
    return Bundle(
        vocab=vocab,
        model=model,
        bigrams=BigramTable.load(path / "bigrams.tsv"),
        mapping=TermMapping.load(path / "term_mapping.tsv"),
        synonyms=SynonymMap.load(path / "synonyms.tsv"),
        ensemble=ensemble,
        removal=removal,
        literal_paper_measures=bool(science.get("literal_paper_measures", False)),
    )
