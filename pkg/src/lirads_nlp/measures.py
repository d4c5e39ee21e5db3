"""Quantitative lesion measures from raw liver-findings text.

Matches 1D/2D/3D measurement groups ("1.2 x 1.3 x 0.9 cm", "12 mm"),
normalizes to millimeters, and derives lesion count plus the maximum
long-axis length. Mentions in a prior-measurement clause ("previously
10 x 9 x 9 mm") or attached to an organ-size phrase ("liver length: 14.2 cm")
do not count as current lesions.
"""

import re
from dataclasses import dataclass
from decimal import Decimal

_NUM = r"\d+(?:\.\d+)?"
_SEP = r"\s*[x×]\s*"
_MEASUREMENT_RE = re.compile(
    rf"\b({_NUM})(?:{_SEP}({_NUM}))?(?:{_SEP}({_NUM}))?\s*(mm|cm)\b",
    re.IGNORECASE,
)

PRIOR_CUES = ("previously", "previous", "prior", "was")
ORGAN_CUES = ("liver length", "spleen", "kidney", "aorta")

# Clause boundaries: sentence terminators and commas. Colons are not
# boundaries so "liver length: 14.2 cm" stays one clause.
_BOUNDARY_CHARS = frozenset(".;,\n")


@dataclass(frozen=True)
class MeasurementMention:
    dims_mm: tuple[float, ...]
    char_span: tuple[int, int]
    prior_context: bool
    organ_context: bool


def _to_mm(group: str, unit: str) -> float:
    value = Decimal(group)
    if unit.lower() == "cm":
        value *= 10
    return float(value)


def _clause_start(text: str, pos: int) -> int:
    i = pos - 1
    while i >= 0:
        c = text[i]
        if c in _BOUNDARY_CHARS:
            # A period between digits is a decimal point, not a boundary.
            if c == "." and 0 < i < len(text) - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
                i -= 1
                continue
            return i + 1
        i -= 1
    return 0


def extract_measurements(
    text: str,
    prior_cues: tuple[str, ...] = PRIOR_CUES,
    organ_cues: tuple[str, ...] = ORGAN_CUES,
) -> list[MeasurementMention]:
    """All measurement groups in the text, with clause-level context flags.

    The clause runs from the nearest preceding sentence/comma boundary up to
    the mention; cue words are looked up in that window, case-insensitively.
    """
    mentions = []
    lowered = text.lower()
    for m in _MEASUREMENT_RE.finditer(text):
        unit = m.group(4)
        dims = tuple(_to_mm(g, unit) for g in m.groups()[:3] if g is not None)
        if not dims or any(d <= 0 for d in dims):
            continue
        clause = lowered[_clause_start(text, m.start()):m.start()]
        prior = any(re.search(rf"\b{re.escape(cue)}\b", clause) for cue in prior_cues)
        organ = any(cue in clause for cue in organ_cues)
        mentions.append(
            MeasurementMention(
                dims_mm=dims,
                char_span=(m.start(), m.end()),
                prior_context=prior,
                organ_context=organ,
            )
        )
    return mentions


@dataclass(frozen=True)
class LesionFeatures:
    lesion_count: int
    max_long_axis_mm: float


def lesion_features(text: str, include_prior: bool = False) -> LesionFeatures:
    """Lesion count and maximum single dimension over current lesion mentions.

    Prior-clause and organ-size mentions are excluded; include_prior=True
    keeps prior-clause mentions (the literal "all measures" behavior).
    """
    current = [
        m
        for m in extract_measurements(text)
        if not m.organ_context and (include_prior or not m.prior_context)
    ]
    if not current:
        return LesionFeatures(lesion_count=0, max_long_axis_mm=0.0)
    return LesionFeatures(
        lesion_count=len(current),
        max_long_axis_mm=max(max(m.dims_mm) for m in current),
    )
