"""Deterministic synthetic liver ultrasound report corpus.

Stands in for a clinical corpus: LR1 reports carry no lesion measurements,
LR2 reports carry 1-3 sub-10 mm lesions, LR3 reports carry at least one
lesion with a dimension of 10 mm or more plus suspicious descriptors.
Descriptor words are sampled uniformly inside synonym families so lexicon
learning has something to recover. A configurable share of reports is
emitted in a legacy style: different sentence templates and no structured
LI-RADS impression line.
"""

import random
from dataclasses import dataclass
from datetime import date, timedelta

from .errors import ConfigError
from .reports import LiradsCategory, Report, parse_report

# Interchangeable descriptor families; variants are sampled uniformly.
ECHO_FAMILIES = (
    ("hyperechoic", "hyperechogenic"),
    ("hypoechoic", "hypoechogenic"),
    ("isoechoic", "isoechogenic"),
    ("anechoic", "cystic"),
)
MARGIN_FAMILIES = (
    ("well defined", "well circumscribed"),
    ("ill defined", "indistinct"),
)
SHAPE_FAMILY = ("round", "oval", "ovoid")

_SEGMENTS = (2, 3, 4, 5, 6, 7, 8)
_LOCATIONS = ("right hepatic lobe", "left hepatic lobe", "caudate lobe")

_LR1_LIVER = (
    "the liver is normal in size and echotexture.",
    "no focal hepatic lesion is identified.",
    "the hepatic parenchyma is homogeneous without focal abnormality.",
    "no hepatic lesion is seen.",
)
_APPEARANCES = ("normal", "mild steatosis", "moderate steatosis", "severe steatosis")
_DISTRACTORS = (
    "the gallbladder is unremarkable.",
    "both kidneys are normal in appearance.",
    "the spleen is normal in size.",
    "the pancreas is partially obscured by bowel gas.",
    "no ascites is identified.",
)
_LR2_QUALIFIERS = (
    "likely representing a small hemangioma",
    "consistent with a simple cyst",
    "compatible with focal fat",
)
_LR3_QUALIFIERS = (
    "suspicious for hepatocellular carcinoma",
    "worrisome for malignancy",
    "incompletely characterized and suspicious",
)
_LEGACY_IMPRESSIONS = (
    "stable sonographic examination of the abdomen.",
    "findings as described above.",
    "no significant interval change.",
)
_TEMPLATED_CLOSERS = (
    "Continue routine surveillance.",
    "Clinical correlation is recommended.",
)


@dataclass(frozen=True)
class SynthConfig:
    n_reports: int
    category_weights: tuple[float, float, float] = (0.8, 0.1, 0.1)
    legacy_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_reports < 1:
            raise ConfigError("n_reports must be >= 1")
        if len(self.category_weights) != 3 or any(w < 0 for w in self.category_weights):
            raise ConfigError("category_weights must be 3 non-negative reals")
        if abs(sum(self.category_weights) - 1.0) > 1e-9:
            raise ConfigError("category_weights must sum to 1")
        if not 0.0 <= self.legacy_fraction <= 1.0:
            raise ConfigError("legacy_fraction must lie in [0, 1]")


def _fmt_mm(v: int) -> str:
    return str(v)


def _fmt_cm(v_mm: int) -> str:
    return f"{v_mm / 10:.1f}"


def _size_phrase(rng: random.Random, large: bool) -> str:
    """Render a 1D/2D/3D measurement; `large` forces a dimension >= 10 mm."""
    ndims = rng.choice((1, 2, 3))
    if large:
        long_axis = rng.randint(10, 38)
        dims = [long_axis] + [rng.randint(4, long_axis) for _ in range(ndims - 1)]
        rng.shuffle(dims)
    else:
        dims = [rng.randint(3, 9) for _ in range(ndims)]
    if rng.random() < 0.5:
        return " x ".join(_fmt_mm(d) for d in dims) + " mm"
    return " x ".join(_fmt_cm(d) for d in dims) + " cm"


def _prior_clause(rng: random.Random) -> str:
    ndims = rng.choice((2, 3))
    dims = [rng.randint(3, 14) for _ in range(ndims)]
    return ", previously " + " x ".join(_fmt_mm(d) for d in dims) + " mm"


def _lesion_sentence(rng: random.Random, category: LiradsCategory, legacy: bool) -> str:
    large = category == LiradsCategory.LR3
    size = _size_phrase(rng, large=large)
    echo = rng.choice(rng.choice(ECHO_FAMILIES))
    noun = rng.choice(("mass", "nodule")) if large else rng.choice(("cyst", "hemangioma", "focus"))
    prior = _prior_clause(rng) if rng.random() < 0.3 else ""
    margin = ""
    if rng.random() < 0.4:
        margin = f" with {rng.choice(rng.choice(MARGIN_FAMILIES))} margins"
    shape = ""
    if rng.random() < 0.3:
        shape = rng.choice(SHAPE_FAMILY) + " "
    if large:
        qualifier = ", " + rng.choice(_LR3_QUALIFIERS)
    elif rng.random() < 0.7:
        qualifier = ", " + rng.choice(_LR2_QUALIFIERS)
    else:
        qualifier = ""

    if legacy:
        opening = rng.choice((
            f"there is a {size} {shape}{echo} {noun} in the {rng.choice(_LOCATIONS)}",
            f"a {size} {shape}{echo} {noun} is seen in the {rng.choice(_LOCATIONS)}",
        ))
        return f"{opening}{margin}{prior}{qualifier}."
    return (
        f"liver observations: a {size} {shape}{echo} {noun} in segment "
        f"{rng.choice(_SEGMENTS)}{margin}{prior}{qualifier}."
    )


def _liver_block(rng: random.Random, category: LiradsCategory, legacy: bool) -> str:
    sentences = []
    length = f"{rng.randint(120, 185) / 10:.1f}"
    if legacy:
        sentences.append(f"liver length {length} cm.")
        sentences.append(
            rng.choice((
                "the liver demonstrates a coarsened echotexture.",
                "the liver is mildly echogenic.",
                "the liver parenchyma appears homogeneous.",
            ))
        )
    else:
        sentences.append(f"liver length: {length} cm.")
        sentences.append(f"liver appearance: {rng.choice(_APPEARANCES)}.")
    if category == LiradsCategory.LR1:
        sentences.append(rng.choice(_LR1_LIVER))
    else:
        n_lesions = rng.randint(1, 3) if category == LiradsCategory.LR2 else rng.randint(1, 2)
        # The first LR3 lesion carries the >= 10 mm dimension.
        for j in range(n_lesions):
            cat_j = category if (category == LiradsCategory.LR2 or j == 0) else LiradsCategory.LR2
            sentences.append(_lesion_sentence(rng, cat_j, legacy))
    if not legacy:
        sentences.append("liver doppler: hepatic veins patent with normal waveforms.")
    return " ".join(sentences)


def _render_report(rng: random.Random, category: LiradsCategory, legacy: bool) -> str:
    liver = _liver_block(rng, category, legacy)
    distractors = " ".join(rng.sample(_DISTRACTORS, k=rng.randint(1, 3)))
    if legacy:
        body = f"{liver} {distractors}"
        style = rng.random()
        if style < 0.25:
            return body  # heading-less blob; parser files it under PREAMBLE
        impression = rng.choice(_LEGACY_IMPRESSIONS)
        if rng.random() < 0.4:
            impression += f" summary code {rng.randint(1, 9)}."
        return f"ABDOMEN: {body}\nIMPRESSION: {impression}"
    closer = rng.choice(_TEMPLATED_CLOSERS)
    return (
        f"FINDINGS: {liver} {distractors}\n"
        f"IMPRESSION: US LI-RADS Category: {int(category)}. {closer}"
    )


def generate_synthetic_corpus(cfg: SynthConfig) -> list[Report]:
    """Deterministic corpus generation; every report records its category."""
    rng = random.Random(cfg.seed)
    reports = []
    for i in range(cfg.n_reports):
        category = LiradsCategory(
            rng.choices((1, 2, 3), weights=cfg.category_weights, k=1)[0]
        )
        legacy = rng.random() < cfg.legacy_fraction
        if legacy:
            exam_date = date(2007, 1, 1) + timedelta(days=rng.randint(0, 3651))
        else:
            exam_date = date(2017, 1, 1) + timedelta(days=rng.randint(0, 364))
        raw = _render_report(rng, category, legacy)
        report = parse_report(raw, id=f"synth-{cfg.seed}-{i:05d}", exam_date=exam_date)
        report.label = category
        reports.append(report)
    return reports


# Planted-synonym corpus: every family owns two anchor words, so variants of
# the same family share contexts while families stay separable.
PLANTED_PAIRS = (
    ("hyperechoic", "hyperechogenic"),
    ("hypoechoic", "hypoechogenic"),
    ("isoechoic", "isoechogenic"),
    ("cystic", "anechoic"),
    ("round", "ovoid"),
    ("lobulated", "microlobulated"),
    ("complex", "complicated"),
    ("septation", "multicystic"),
)

_PLANTED_ANCHORS = (
    ("posterior", "attenuation"),
    ("acoustic", "shadowing"),
    ("uniform", "parenchyma"),
    ("imperceptible", "walls"),
    ("smooth", "contour"),
    ("scalloped", "border"),
    ("mural", "components"),
    ("internal", "locules"),
)

_PLANTED_FILLER = (
    "the liver is normal in size and echotexture.",
    "no focal hepatic lesion is identified.",
    "the examination is otherwise unremarkable.",
    "hepatic veins are patent with normal waveforms.",
    "the visualized portions of the pancreas are normal.",
)


def planted_synonym_corpus(
    n_sentences: int,
    seed: int,
    pairs: tuple[tuple[str, str], ...] = PLANTED_PAIRS,
) -> list[str]:
    """Raw sentences where each pair's members substitute interchangeably."""
    if len(pairs) > len(_PLANTED_ANCHORS):
        raise ConfigError(f"at most {len(_PLANTED_ANCHORS)} planted pairs supported")
    rng = random.Random(seed)
    sentences = []
    for _ in range(n_sentences):
        if rng.random() < 0.35:
            sentences.append(rng.choice(_PLANTED_FILLER))
            continue
        f = rng.randrange(len(pairs))
        word = pairs[f][rng.randrange(2)]
        a1, a2 = _PLANTED_ANCHORS[f]
        seg = rng.randint(2, 8)
        sentences.append(f"segment {seg} lesion appears {word} with {a1} {a2}.")
    return sentences
