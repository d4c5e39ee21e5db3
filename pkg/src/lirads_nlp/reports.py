"""Report parsing, liver-findings segmentation and LI-RADS label extraction.

A report is split into named sections on uppercase colon-terminated headings
("FINDINGS:", "IMPRESSION:"); text before the first heading lands in a
PREAMBLE section. The liver segmenter walks every non-impression section and
keeps sentences in liver context; the label extractor reads category digits
only from the impression.
"""

import json
import re
from dataclasses import dataclass, field
from datetime import date
from enum import IntEnum
from typing import Iterable, TextIO

from .errors import DataError


class LiradsCategory(IntEnum):
    LR1 = 1
    LR2 = 2
    LR3 = 3


@dataclass(frozen=True)
class Section:
    name: str
    body: str


@dataclass
class Report:
    id: str
    exam_date: date
    sections: list[Section] = field(default_factory=list)
    templated: bool = False
    label: LiradsCategory | None = None

    def section(self, name: str) -> Section | None:
        folded = name.casefold()
        for sec in self.sections:
            if sec.name.casefold() == folded:
                return sec
        return None


# Headings are runs of >=2-letter ALL-CAPS words ending in a colon. Hyphenated
# tokens such as "LI-RADS:" are not headings, so category statements survive
# inside the impression body.
_HEADING_RE = re.compile(r"\b[A-Z]{2,}(?:[ \t]+[A-Z]{2,})*[ \t]*:")

# Tolerates LI-RADS / LIRADS / US LI-RADS, optional "category", ':' or '-'
# separators. The digit must not be part of a longer number.
_LABEL_RE = re.compile(r"li\s*-?\s*rads(?:\s+(?:us\s+)?categor\w*)?\s*[:\-]?\s*(\d)(?!\d)", re.IGNORECASE)

DEFAULT_LIVER_CUES = ("liver", "hepatic", "lobe", "segment", "portal", "biliary")

# Organs that switch the anatomical context away from the liver.
_OTHER_ORGAN_CUES = (
    "kidney", "renal", "spleen", "splenic", "pancreas", "pancreatic",
    "gallbladder", "aorta", "aortic", "bladder", "bowel", "uterus", "ovary",
)

_LESION_CUES = ("lesion", "mass", "cyst", "focus", "foci", "nodule", "nodularity")

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.;])\s+|\n+")


def parse_report(raw: str, id: str, exam_date: date) -> Report:
    """Split raw text into sections and set the templated flag."""
    if not raw or not raw.strip():
        raise DataError("empty report")

    sections: list[Section] = []
    names_seen: dict[str, int] = {}

    def add(name: str, body: str) -> None:
        body = body.strip()
        folded = name.casefold()
        if folded in names_seen:
            # Duplicate heading: treat as a continuation of the earlier section.
            idx = names_seen[folded]
            prev = sections[idx]
            sections[idx] = Section(prev.name, (prev.body + " " + body).strip())
            return
        names_seen[folded] = len(sections)
        sections.append(Section(name, body))

    matches = list(_HEADING_RE.finditer(raw))
    if not matches:
        add("PREAMBLE", raw)
    else:
        preamble = raw[: matches[0].start()]
        if preamble.strip():
            add("PREAMBLE", preamble)
        for i, m in enumerate(matches):
            name = re.sub(r"\s+", " ", m.group(0)[:-1].strip())
            end = matches[i + 1].start() if i + 1 < len(matches) else len(raw)
            add(name, raw[m.end():end])

    report = Report(id=id, exam_date=exam_date, sections=sections)
    impression = report.section("impression")
    report.templated = bool(impression and _LABEL_RE.search(impression.body))
    if not any(sec.body for sec in sections):
        raise DataError("empty report")
    return report


def extract_lirads_label(report: Report) -> LiradsCategory | None:
    """Read the LI-RADS category from the impression; the last match wins."""
    impression = report.section("impression")
    if impression is None:
        return None
    matches = _LABEL_RE.findall(impression.body)
    if not matches:
        return None
    digit = int(matches[-1])
    if digit not in (1, 2, 3):
        raise DataError(f"unsupported LI-RADS category: {digit}")
    return LiradsCategory(digit)


def _sentences(text: str) -> list[str]:
    # Decimal points must not end a sentence; shield them before splitting.
    shielded = re.sub(r"(?<=\d)\.(?=\d)", "\x00", text)
    parts = _SENTENCE_SPLIT_RE.split(shielded)
    return [p.replace("\x00", ".").strip() for p in parts if p.strip()]


def extract_liver_section(report: Report, cues: tuple[str, ...] = DEFAULT_LIVER_CUES) -> str:
    """Collect liver-context findings text; the impression never contributes.

    Sentences carrying a liver cue word are kept. Lesion sentences without an
    organ cue inherit the most recent organ context, so lesions described in a
    separate sentence or paragraph stay attached to the liver. Sections whose
    heading carries a liver cue are included whole.
    """
    kept: list[str] = []
    for sec in report.sections:
        name = sec.name.casefold()
        if name == "impression":
            continue
        if any(cue in name for cue in cues):
            if sec.body:
                kept.append(sec.body)
            continue
        in_liver_context = False
        for sentence in _sentences(sec.body):
            lowered = sentence.casefold()
            has_liver = any(cue in lowered for cue in cues)
            has_other = any(cue in lowered for cue in _OTHER_ORGAN_CUES)
            if has_liver:
                in_liver_context = True
                kept.append(sentence)
            elif has_other:
                in_liver_context = False
            elif in_liver_context and any(cue in lowered for cue in _LESION_CUES):
                kept.append(sentence)
    return " ".join(kept)


def report_to_json(report: Report) -> dict:
    return {
        "id": report.id,
        "exam_date": report.exam_date.isoformat(),
        "sections": [{"name": s.name, "body": s.body} for s in report.sections],
        "templated": report.templated,
        "label": int(report.label) if report.label is not None else None,
    }


def report_from_json(obj: dict) -> Report:
    try:
        label = obj["label"]
        report = Report(
            id=obj["id"],
            exam_date=date.fromisoformat(obj["exam_date"]),
            sections=[Section(s["name"], s["body"]) for s in obj["sections"]],
            templated=bool(obj["templated"]),
            label=LiradsCategory(label) if label is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed report record: {exc}") from exc
    names = [s.name.casefold() for s in report.sections]
    if len(names) != len(set(names)):
        raise DataError(f"duplicate section names in report {report.id!r}")
    if not any(s.body for s in report.sections):
        raise DataError(f"report {report.id!r} has no section body")
    return report


def write_jsonl(reports: Iterable[Report], fh: TextIO) -> None:
    for report in reports:
        fh.write(json.dumps(report_to_json(report), ensure_ascii=False))
        fh.write("\n")


def read_jsonl(fh: TextIO) -> list[Report]:
    reports = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON on line {lineno}: {exc}") from exc
        reports.append(report_from_json(obj))
    return reports
