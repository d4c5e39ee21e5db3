"""Declarative pipeline configuration.

One flat text file of `key = value` lines ('#' starts a comment) collects
every science parameter: normalizer counts, embedding hyperparameters, the
lexicon root terms, classifier settings, per-stage seeds and behavior flags.
Paths and modes stay on the command line.
"""

from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError

DEFAULT_LEXICON_ROOTS = (
    "hyperechoic", "isoechoic", "hypoechoic", "cystic", "nonshadowing",
    "hypovascular", "avascular", "hypervascular", "septation", "complex",
    "lobulated", "round", "ill defined", "exophytic", "well defined",
)


@dataclass(frozen=True)
class PipelineConfig:
    # normalizer
    token_min_count: int = 50
    bigram_top_k: int = 1000
    bigram_min_count: int = 50
    bigram_npmi: bool = False
    # embeddings
    embed_dim: int = 100
    embed_window: int = 5
    embed_negatives: int = 5
    embed_epochs: int = 5
    embed_lr0: float = 0.025
    vocab_cap: int = 2000
    embed_workers: int = 1
    # lexicon
    lexicon_roots: tuple[str, ...] = DEFAULT_LEXICON_ROOTS
    synonym_threshold: float = 0.80
    synonym_top_k: int = 20
    # classifiers
    clf_lambda: float = 1e-4
    clf_epochs: int = 50
    clf_tol: float = 1e-8
    tree_max_depth: int = 4
    tree_min_leaf: int = 5
    smote_k: int = 5
    # split & bands
    val_fraction: float = 0.10
    low_band: float = 0.5
    high_band: float = 0.9
    # seeds, one per stochastic stage
    seed_synth: int = 7
    seed_split: int = 23
    seed_embedding: int = 13
    seed_smote: int = 19
    seed_logreg: int = 17
    # flags
    literal_paper_measures: bool = False
    deterministic: bool = True
    # synthetic corpus
    synth_n_reports: int = 3000
    synth_weights: tuple[float, float, float] = (0.8, 0.1, 0.1)
    synth_legacy_fraction: float = 0.0
    # optional asset overrides
    term_mapping_path: str | None = None
    removal_list_path: str | None = None

    def __post_init__(self) -> None:
        positive = (
            "token_min_count", "bigram_top_k", "bigram_min_count", "embed_dim",
            "embed_window", "embed_negatives", "embed_epochs", "vocab_cap",
            "embed_workers", "synonym_top_k", "clf_epochs", "tree_max_depth",
            "tree_min_leaf", "smote_k", "synth_n_reports",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.embed_lr0 <= 0:
            raise ConfigError("embed_lr0 must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")
        if not 0.0 <= self.low_band <= self.high_band <= 1.0:
            raise ConfigError("bands must satisfy 0 <= low <= high <= 1")
        if self.clf_lambda < 0 or self.clf_tol < 0:
            raise ConfigError("classifier lambda and tol must be non-negative")


_KEY_TO_FIELD = {
    "normalizer.min_count": "token_min_count",
    "bigrams.top_k": "bigram_top_k",
    "bigrams.min_count": "bigram_min_count",
    "bigrams.npmi": "bigram_npmi",
    "embedding.dim": "embed_dim",
    "embedding.window": "embed_window",
    "embedding.negatives": "embed_negatives",
    "embedding.epochs": "embed_epochs",
    "embedding.lr0": "embed_lr0",
    "embedding.vocab_cap": "vocab_cap",
    "embedding.workers": "embed_workers",
    "lexicon.roots": "lexicon_roots",
    "lexicon.threshold": "synonym_threshold",
    "lexicon.top_k": "synonym_top_k",
    "classifier.lambda": "clf_lambda",
    "classifier.epochs": "clf_epochs",
    "classifier.tol": "clf_tol",
    "classifier.tree_max_depth": "tree_max_depth",
    "classifier.tree_min_leaf": "tree_min_leaf",
    "classifier.smote_k": "smote_k",
    "split.val_fraction": "val_fraction",
    "bands.low": "low_band",
    "bands.high": "high_band",
    "seeds.synth": "seed_synth",
    "seeds.split": "seed_split",
    "seeds.embedding": "seed_embedding",
    "seeds.smote": "seed_smote",
    "seeds.logreg": "seed_logreg",
    "flags.literal_paper_measures": "literal_paper_measures",
    "flags.deterministic": "deterministic",
    "synth.n_reports": "synth_n_reports",
    "synth.weights": "synth_weights",
    "synth.legacy_fraction": "synth_legacy_fraction",
    "assets.term_mapping": "term_mapping_path",
    "assets.removal_list": "removal_list_path",
}


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


_INT_FIELDS = frozenset(
    name for name in _KEY_TO_FIELD.values()
    if name.startswith("seed_") or name in (
        "token_min_count", "bigram_top_k", "bigram_min_count", "embed_dim",
        "embed_window", "embed_negatives", "embed_epochs", "vocab_cap",
        "embed_workers", "synonym_top_k", "clf_epochs", "tree_max_depth",
        "tree_min_leaf", "smote_k", "synth_n_reports",
    )
)
_FLOAT_FIELDS = frozenset((
    "embed_lr0", "synonym_threshold", "clf_lambda", "clf_tol",
    "val_fraction", "low_band", "high_band", "synth_legacy_fraction",
))
_BOOL_FIELDS = frozenset(("bigram_npmi", "literal_paper_measures", "deterministic"))


def _coerce(field_name: str, raw: str, key: str):
    try:
        if field_name in _INT_FIELDS:
            return int(raw)
        if field_name in _FLOAT_FIELDS:
            return float(raw)
        if field_name in _BOOL_FIELDS:
            return _parse_bool(raw, key)
        if field_name == "lexicon_roots":
            roots = tuple(part.strip() for part in raw.split(",") if part.strip())
            if not roots:
                raise ConfigError(f"{key}: empty root list")
            return roots
        if field_name == "synth_weights":
            parts = [float(p) for p in raw.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"{key}: expected 3 comma-separated weights")
            return tuple(parts)
        return raw  # path-like strings
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    """Parse a key = value config file; missing keys keep their defaults."""
    if path is None:
        return PipelineConfig()
    overrides = {}
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        field_name = _KEY_TO_FIELD[key]
        if field_name in overrides:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        overrides[field_name] = _coerce(field_name, raw, key)
    return replace(PipelineConfig(), **overrides)
