"""Supervised layer: SMOTE oversampling, multinomial logistic regression via
stochastic average gradient, a CART decision tree on lesion features, and the
weighted-voting ensemble over both classifiers.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .reports import LiradsCategory

CATEGORIES = (LiradsCategory.LR1, LiradsCategory.LR2, LiradsCategory.LR3)
N_CATEGORIES = 3


@dataclass
class LabeledDataset:
    X: np.ndarray  # (n, p)
    y: np.ndarray  # (n,) values in {1, 2, 3}
    feature_kind: str  # "section_embedding" | "lesion_features"

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise DataError("feature matrix and labels must align")
        if not np.isfinite(self.X).all():
            raise DataError("features contain non-finite values")

    def counts(self) -> dict[int, int]:
        return {int(c): int((self.y == c).sum()) for c in (1, 2, 3) if (self.y == c).any()}


def smote_oversample(ds: LabeledDataset, k: int = 5, seed: int = 0) -> LabeledDataset:
    """Grow every minority category to the majority count by interpolation.

    New points are x + u * (z - x) for a random minority sample x, one of its
    k nearest same-category neighbors z (Euclidean) and u uniform in [0, 1].
    Original rows are preserved in place; k is clipped to category size - 1.
    """
    counts = ds.counts()
    majority = max(counts.values())
    if all(c == majority for c in counts.values()):
        return LabeledDataset(ds.X.copy(), ds.y.copy(), ds.feature_kind)

    rng = np.random.default_rng(seed)
    new_X = [ds.X]
    new_y = [ds.y]
    for cat in sorted(counts):
        need = majority - counts[cat]
        if need == 0:
            continue
        if counts[cat] < 2:
            raise DataError("SMOTE requires at least 2 samples per minority category")
        Xc = ds.X[ds.y == cat]
        n_c = len(Xc)
        k_c = min(k, n_c - 1)
        # Neighbor ranking: ascending distance, ties by index, self excluded.
        d2 = ((Xc[:, None, :] - Xc[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k_c]
        synth = np.empty((need, ds.X.shape[1]))
        for t in range(need):
            i = int(rng.integers(n_c))
            z = Xc[neighbors[i][int(rng.integers(k_c))]]
            u = rng.random()
            synth[t] = Xc[i] + u * (z - Xc[i])
        new_X.append(synth)
        new_y.append(np.full(need, cat, dtype=np.int64))
    return LabeledDataset(np.vstack(new_X), np.concatenate(new_y), ds.feature_kind)


@dataclass
class LogRegModel:
    W: np.ndarray  # (3, p)
    b: np.ndarray  # (3,)
    lam: float


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def predict_proba_logreg(m: LogRegModel, x: np.ndarray) -> np.ndarray:
    """softmax(Wx + b), numerically stabilized by max-subtraction."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != m.W.shape[1]:
        raise DataError(f"expected {m.W.shape[1]} features, got {x.shape[-1]}")
    return _softmax(x @ m.W.T + m.b)


def logreg_objective_grad(
    m: LogRegModel, X: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Full-batch regularized objective and its gradient (reference path)."""
    n = len(X)
    probs = predict_proba_logreg(m, X)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y - 1] = 1.0
    ce = -np.log(np.clip(probs[np.arange(n), y - 1], 1e-300, None)).mean()
    obj = ce + 0.5 * m.lam * float((m.W ** 2).sum())
    resid = probs - onehot
    grad_W = resid.T @ X / n + m.lam * m.W
    grad_b = resid.mean(axis=0)
    return obj, grad_W, grad_b


def train_logreg_sag(
    ds: LabeledDataset,
    lam: float = 1e-4,
    epochs: int = 50,
    seed: int = 0,
    tol: float = 1e-8,
) -> LogRegModel:
    """Stochastic average gradient on the softmax cross-entropy + L2 objective.

    Keeps the last-seen per-sample residual table and steps along the average
    of the stored gradients plus the regularizer, with constant step size
    1/L, L = 0.25 * max row norm^2 + lam. Stops after `epochs` passes or when
    a parameter update norm falls below `tol` (set tol=0 to always run the
    full budget). Deterministic for a fixed seed.
    """
    X, y = ds.X, ds.y
    n, p = X.shape
    present = set(np.unique(y).tolist())
    if present != {1, 2, 3}:
        raise DataError("all categories required for training")

    L = 0.25 * float((X ** 2).sum(axis=1).max()) + lam
    step = 1.0 / L
    rng = np.random.default_rng(seed)

    W = np.zeros((N_CATEGORIES, p))
    b = np.zeros(N_CATEGORIES)
    resid_table = np.zeros((n, N_CATEGORIES))  # last-seen (p_i - onehot_i)
    sum_gW = np.zeros((N_CATEGORIES, p))
    sum_gb = np.zeros(N_CATEGORIES)

    onehot = np.zeros((n, N_CATEGORIES))
    onehot[np.arange(n), y - 1] = 1.0

    for _ in range(epochs):
        for i in np.asarray(rng.integers(0, n, size=n)):
            xi = X[i]
            probs = _softmax(W @ xi + b)
            resid = probs - onehot[i]
            delta = resid - resid_table[i]
            sum_gW += np.outer(delta, xi)
            sum_gb += delta
            resid_table[i] = resid

            upd_W = step * (sum_gW / n + lam * W)
            upd_b = step * (sum_gb / n)
            W -= upd_W
            b -= upd_b
            if tol > 0.0:
                upd_norm = np.sqrt(float((upd_W ** 2).sum() + (upd_b ** 2).sum()))
                if upd_norm < tol:
                    return LogRegModel(W=W, b=b, lam=lam)
    return LogRegModel(W=W, b=b, lam=lam)


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    probs: np.ndarray | None = None  # leaf category probabilities

    @property
    def is_leaf(self) -> bool:
        return self.probs is not None


@dataclass
class TreeModel:
    root: TreeNode
    max_depth: int

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.probs


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    frac = counts / total
    return float(1.0 - (frac ** 2).sum())


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[int, float, float] | None:
    """Lowest weighted-Gini (feature, threshold) over midpoint candidates."""
    n, p = X.shape
    best: tuple[float, int, float] | None = None
    for f in range(p):
        values = np.unique(X[:, f])
        if len(values) < 2:
            continue
        order = np.argsort(X[:, f], kind="stable")
        y_sorted = y[order]
        x_sorted = X[order, f]
        for v_lo, v_hi in zip(values, values[1:]):
            thr = (v_lo + v_hi) / 2.0
            n_left = int(np.searchsorted(x_sorted, thr, side="right"))
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            left_counts = np.bincount(y_sorted[:n_left] - 1, minlength=N_CATEGORIES)
            right_counts = np.bincount(y_sorted[n_left:] - 1, minlength=N_CATEGORIES)
            score = (n_left * _gini(left_counts) + (n - n_left) * _gini(right_counts)) / n
            if best is None or score < best[0] - 1e-12:
                best = (score, f, thr)
    if best is None:
        return None
    return best[1], best[2], best[0]


def train_decision_tree(ds: LabeledDataset, max_depth: int = 4, min_leaf: int = 5) -> TreeModel:
    """Greedy CART growth on Gini impurity with midpoint thresholds."""
    if len(ds.X) == 0:
        raise DataError("empty dataset")
    if len(ds.X) < min_leaf:
        raise DataError(f"need at least min_leaf={min_leaf} samples")

    def leaf(y: np.ndarray) -> TreeNode:
        counts = np.bincount(y - 1, minlength=N_CATEGORIES).astype(np.float64)
        return TreeNode(probs=counts / counts.sum())

    def grow(X: np.ndarray, y: np.ndarray, depth: int) -> TreeNode:
        if depth >= max_depth or len(np.unique(y)) == 1:
            return leaf(y)
        split = _best_split(X, y, min_leaf)
        if split is None:
            return leaf(y)
        f, thr, score = split
        if score >= _gini(np.bincount(y - 1, minlength=N_CATEGORIES)) - 1e-12:
            return leaf(y)  # no impurity decrease
        mask = X[:, f] <= thr
        node = TreeNode(feature=f, threshold=thr)
        node.left = grow(X[mask], y[mask], depth + 1)
        node.right = grow(X[~mask], y[~mask], depth + 1)
        return node

    return TreeModel(root=grow(ds.X, ds.y, 0), max_depth=max_depth)


def tree_thresholds(tree: TreeModel, feature: int) -> list[float]:
    """All split thresholds used for one feature (diagnostics)."""
    found: list[float] = []

    def walk(node: TreeNode) -> None:
        if node.is_leaf:
            return
        if node.feature == feature:
            found.append(node.threshold)
        walk(node.left)
        walk(node.right)

    walk(tree.root)
    return found


@dataclass
class Prediction:
    probs: np.ndarray  # (3,) over (LR1, LR2, LR3)
    argmax: LiradsCategory

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "Prediction":
        probs = np.asarray(probs, dtype=np.float64)
        # Ties break toward the lower (less severe) category: argmax does.
        return cls(probs=probs, argmax=LiradsCategory(int(np.argmax(probs)) + 1))


@dataclass
class EnsembleModel:
    embed_clf: LogRegModel
    lesion_clf: TreeModel
    weights: tuple[float, float]  # (w_embed, w_lesion)
    val_macro_f1: dict[str, float] = field(default_factory=dict)


def ensemble_predict(m: EnsembleModel, embed_x: np.ndarray, lesion_x: np.ndarray) -> Prediction:
    """Weighted probability vote over both base classifiers."""
    w_e, w_l = m.weights
    if w_e < 0 or w_l < 0 or w_e + w_l == 0:
        raise ConfigError("ensemble weights must be non-negative and not both zero")
    p_embed = predict_proba_logreg(m.embed_clf, np.asarray(embed_x, dtype=np.float64))
    p_lesion = m.lesion_clf.predict_proba(np.asarray(lesion_x, dtype=np.float64))
    probs = (w_e * p_embed + w_l * p_lesion) / (w_e + w_l)
    return Prediction.from_probs(probs)


def _macro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    f1s = []
    for c in (1, 2, 3):
        tp = int(((y_true == c) & (y_pred == c)).sum())
        fp = int(((y_true != c) & (y_pred == c)).sum())
        fn = int(((y_true == c) & (y_pred != c)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return float(np.mean(f1s))


@dataclass
class EnsembleHyperparams:
    smote_k: int = 5
    smote_seed: int = 0
    lam: float = 1e-4
    logreg_epochs: int = 50
    logreg_seed: int = 0
    logreg_tol: float = 1e-8
    tree_max_depth: int = 4
    tree_min_leaf: int = 5


def fit_ensemble(
    train_embed: LabeledDataset,
    train_lesion: LabeledDataset,
    val: Sequence[tuple[np.ndarray, np.ndarray, int]] = (),
    hp: EnsembleHyperparams | None = None,
) -> EnsembleModel:
    """SMOTE both feature views (same seed), train both base classifiers,
    then weight them proportionally to validation macro-F1 (equal weights
    when the validation set is empty or both scores are zero).
    """
    hp = hp or EnsembleHyperparams()
    if not np.array_equal(train_embed.y, train_lesion.y):
        raise DataError("feature views must share the same label sequence")

    balanced_embed = smote_oversample(train_embed, k=hp.smote_k, seed=hp.smote_seed)
    balanced_lesion = smote_oversample(train_lesion, k=hp.smote_k, seed=hp.smote_seed)
    embed_clf = train_logreg_sag(
        balanced_embed, lam=hp.lam, epochs=hp.logreg_epochs,
        seed=hp.logreg_seed, tol=hp.logreg_tol,
    )
    lesion_clf = train_decision_tree(
        balanced_lesion, max_depth=hp.tree_max_depth, min_leaf=hp.tree_min_leaf
    )

    scores: dict[str, float] = {}
    if val:
        y_val = np.array([label for _, _, label in val], dtype=np.int64)
        pred_e = np.array([
            int(np.argmax(predict_proba_logreg(embed_clf, np.asarray(ex, dtype=np.float64)))) + 1
            for ex, _, _ in val
        ])
        pred_l = np.array([
            int(np.argmax(lesion_clf.predict_proba(np.asarray(lx, dtype=np.float64)))) + 1
            for _, lx, _ in val
        ])
        scores = {"embedding": _macro_f1(y_val, pred_e), "lesion": _macro_f1(y_val, pred_l)}
        weights = (scores["embedding"], scores["lesion"])
        if weights[0] + weights[1] == 0.0:
            weights = (1.0, 1.0)
    else:
        weights = (1.0, 1.0)
    return EnsembleModel(
        embed_clf=embed_clf, lesion_clf=lesion_clf, weights=weights, val_macro_f1=scores
    )
