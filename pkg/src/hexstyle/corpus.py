"""Pedecerto/MQDQ scansion XML parsing and validation.

The input dialect encodes one hexameter per ``line`` element::

    <line name="952" metre="H" pattern="DDDS">
        <word sy="1A1b1c" wb="DI">Vitaque</word>
        <word sy="2A" wb="CM">cum</word>
        ...
    </line>

``sy`` gives the scansion as two-character codes (foot digit 1-6 plus a
slot letter), ``wb`` the word-break kind (CM strong caesura, CF weak
caesura, DI diaeresis), and an optional elision attribute (``mf`` by
default) marks synalepha (SY) or prodelision (PE).  Scansion is consumed
here, never produced: lines whose syllables do not cover the metrical
scheme implied by their pattern are rejected, not repaired.
"""

from __future__ import annotations

import json
import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import CorpusParseError, DataError

log = logging.getLogger(__name__)

# Slot letters of the syllable codes.
ARSIS = "A"
THESIS = "T"
BREVE1 = "b"
BREVE2 = "c"
ANCEPS = "X"
_SLOTS = frozenset("ATbcX")

# Raw word-break codes and their interpretation.
WB_STRONG = "CM"
WB_WEAK = "CF"
WB_DIAERESIS = "DI"
KNOWN_WB = (WB_STRONG, WB_WEAK, WB_DIAERESIS)

BREAK_STRONG = "strong"
BREAK_WEAK = "weak"
BREAK_DIAERESIS = "diaeresis"

ELISION_NONE = "none"
SYNALEPHA = "synalepha"
PRODELISION = "prodelision"

# Order of slots within a foot: A first, then T or b, then c.  X shares
# second position in foot 6.
_SLOT_RANK = {ARSIS: 0, THESIS: 1, BREVE1: 1, BREVE2: 2, ANCEPS: 1}

_DACTYL = (ARSIS, BREVE1, BREVE2)
_SPONDEE = (ARSIS, THESIS)


@dataclass(frozen=True)
class ParserConfig:
    """Dialect knobs for the attributes some exports leave implicit.

    The elision attribute name and its two values follow Pedecerto
    conventions but are configurable because not every export includes
    elided words.
    """

    elision_attr: str = "mf"
    synalepha_value: str = "SY"
    prodelision_value: str = "PE"

    def interpret_elision(self, mf: str | None) -> str:
        if mf is None:
            return ELISION_NONE
        if mf == self.synalepha_value:
            return SYNALEPHA
        if mf == self.prodelision_value:
            return PRODELISION
        log.warning("unknown elision code %r treated as no elision", mf)
        return ELISION_NONE


DEFAULT_PARSER_CONFIG = ParserConfig()


@dataclass(frozen=True, order=True)
class MetricalPosition:
    """One syllable slot: foot 1-6 plus slot letter (A, T, b, c, X)."""

    foot: int
    slot: str

    def __post_init__(self):
        if not 1 <= self.foot <= 6:
            raise ValueError(f"foot {self.foot} outside 1-6")
        if self.slot not in _SLOTS:
            raise ValueError(f"unknown slot letter {self.slot!r}")
        if self.slot == ANCEPS and self.foot != 6:
            raise ValueError(f"anceps in foot {self.foot} (only foot 6 has one)")

    def __str__(self):
        return f"{self.foot}{self.slot}"


def parse_syllable_code(sy: str) -> tuple[MetricalPosition, ...]:
    """Decode an ``sy`` attribute like ``"2b2c3A"`` into positions.

    Raises ValueError on odd length, foot digits outside 1-6, or unknown
    slot letters; the caller records those as per-line rejections.
    """
    if len(sy) % 2:
        raise ValueError(f"odd-length syllable code {sy!r}")
    positions = []
    for i in range(0, len(sy), 2):
        foot, slot = sy[i], sy[i + 1]
        if foot not in "123456":
            raise ValueError(f"invalid foot digit {foot!r} in syllable code {sy!r}")
        if slot not in _SLOTS:
            raise ValueError(f"unknown slot letter {slot!r} in syllable code {sy!r}")
        try:
            positions.append(MetricalPosition(int(foot), slot))
        except ValueError as exc:
            raise ValueError(f"{exc} in syllable code {sy!r}") from None
    return tuple(positions)


@dataclass(frozen=True)
class ScannedWord:
    """One word with its surviving (post-elision) syllable positions.

    ``sy``, ``wb`` and ``mf`` keep the raw attribute strings so
    serialization is lossless; ``syllables``, ``word_break`` and
    ``elision`` are their interpretation.  ``word_break`` is None exactly
    for the last word of a line.
    """

    text: str
    sy: str
    wb: str | None
    mf: str | None
    syllables: tuple[MetricalPosition, ...]
    word_break: str | None
    elision: str

    @property
    def final_position(self) -> MetricalPosition | None:
        return self.syllables[-1] if self.syllables else None


@dataclass(frozen=True)
class ScannedLine:
    name: str
    metre: str
    pattern: str
    words: tuple[ScannedWord, ...]

    @property
    def syllables(self) -> tuple[MetricalPosition, ...]:
        return tuple(pos for word in self.words for pos in word.syllables)

    def foot_is_dactyl(self, foot: int) -> bool:
        """Dactyl/spondee shape; feet 1-4 from the pattern, 5-6 from scansion."""
        if 1 <= foot <= 4:
            return self.pattern[foot - 1] == "D"
        slots = [p.slot for p in self.syllables if p.foot == foot]
        return BREVE1 in slots


@dataclass(frozen=True)
class SkippedLine:
    name: str
    reason: str


@dataclass(frozen=True)
class ScannedCorpus:
    """Validated hexameters from one document, plus the rejects."""

    source_id: str
    lines: tuple[ScannedLine, ...] = ()
    skipped: tuple[SkippedLine, ...] = field(default_factory=tuple)


def _interpret_break(wb: str | None, *, is_final: bool) -> str | None:
    if is_final:
        return None
    if wb is None:
        log.warning("missing word-break code on non-final word; treating as diaeresis")
        return BREAK_DIAERESIS
    if wb == WB_STRONG:
        return BREAK_STRONG
    if wb == WB_WEAK:
        return BREAK_WEAK
    if wb == WB_DIAERESIS:
        return BREAK_DIAERESIS
    log.warning("unknown word-break code %r treated as diaeresis", wb)
    return BREAK_DIAERESIS


def word_from_attrs(text, sy, wb, mf, *, is_final, config=DEFAULT_PARSER_CONFIG):
    """Build a ScannedWord from raw attribute values.

    Raises ValueError when the syllable code does not decode.
    """
    return ScannedWord(
        text=text,
        sy=sy,
        wb=wb,
        mf=mf,
        syllables=parse_syllable_code(sy),
        word_break=_interpret_break(wb, is_final=is_final),
        elision=config.interpret_elision(mf),
    )


def line_from_attrs(name, metre, pattern, word_attrs, config=DEFAULT_PARSER_CONFIG):
    """Build a ScannedLine from (text, sy, wb, mf) tuples.

    Structural decoding only; use validate_line for scheme coverage.
    """
    n = len(word_attrs)
    words = []
    for i, (text, sy, wb, mf) in enumerate(word_attrs):
        try:
            words.append(
                word_from_attrs(text, sy, wb, mf, is_final=(i == n - 1), config=config)
            )
        except ValueError as exc:
            raise ValueError(f"word {i + 1} ({text!r}): {exc}") from None
    return ScannedLine(name=name, metre=metre, pattern=pattern, words=tuple(words))


def _describe(slots) -> str:
    return "-".join(slots) if slots else "nothing"


def validate_line(line: ScannedLine) -> list[str]:
    """Check that the line's syllables cover the metrical scheme.

    Returns a list of human-readable violations; empty means the line is
    acceptable.  Feet 1-4 must match the pattern (dactyl A-b-c, spondee
    A-T), foot 5 may be either shape (spondaic fifth feet are rare but
    attested), foot 6 must be A-X.
    """
    violations = []
    if len(line.pattern) != 4 or any(c not in "DS" for c in line.pattern):
        violations.append(f"invalid pattern {line.pattern!r}")
        return violations

    for i, word in enumerate(line.words):
        if not word.syllables and word.elision == ELISION_NONE:
            violations.append(
                f"word {i + 1} ({word.text!r}) has no syllables and no elision mark"
            )

    seq = line.syllables
    if not seq:
        violations.append("line has no syllables")
        return violations

    prev = (0, -1)
    for pos in seq:
        key = (pos.foot, _SLOT_RANK[pos.slot])
        if key < prev:
            violations.append(f"syllable {pos} out of metrical order")
            return violations
        prev = key

    by_foot: dict[int, list[str]] = {}
    for pos in seq:
        by_foot.setdefault(pos.foot, []).append(pos.slot)

    for foot in range(1, 7):
        slots = tuple(by_foot.get(foot, ()))
        if foot <= 4:
            expected = _DACTYL if line.pattern[foot - 1] == "D" else _SPONDEE
            if slots != expected:
                shape = "dactyl" if expected is _DACTYL else "spondee"
                violations.append(
                    f"foot {foot}: expected {_describe(expected)} ({shape}), "
                    f"got {_describe(slots)}"
                )
        elif foot == 5:
            if slots not in (_DACTYL, _SPONDEE):
                violations.append(
                    f"foot 5: expected {_describe(_DACTYL)} or {_describe(_SPONDEE)}, "
                    f"got {_describe(slots)}"
                )
        else:
            if slots != (ARSIS, ANCEPS):
                violations.append(f"foot 6: expected A-X, got {_describe(slots)}")
    return violations


def _local_tag(tag) -> str:
    # strip any XML namespace
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def _iter_line_elements(root):
    """Yield (label, element) for every line element in document order.

    When lines are nested inside ``division`` elements, the label is
    prefixed "division:line" (the division's name attribute, or its
    ordinal) so downstream reports can carry book:line references.
    """
    if _local_tag(root.tag) == "line":
        yield root.get("name", ""), root
        return

    division_count = 0

    def walk(elem, div_label):
        nonlocal division_count
        for child in elem:
            tag = _local_tag(child.tag)
            if tag == "division":
                division_count += 1
                label = child.get("name") or child.get("title") or str(division_count)
                yield from walk(child, label)
            elif tag == "line":
                name = child.get("name", "")
                yield (f"{div_label}:{name}" if div_label else name), child
            else:
                yield from walk(child, div_label)

    yield from walk(root, None)


def _read_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str) and source.lstrip().startswith("<"):
        return source.encode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    data = source.read()
    return data.encode("utf-8") if isinstance(data, str) else data


def _byte_offset(data: bytes, line: int, column: int) -> int:
    # expat reports (1-based line, 0-based column)
    rows = data.split(b"\n")
    return sum(len(row) + 1 for row in rows[: line - 1]) + column


def parse_document(source, source_id="", config=DEFAULT_PARSER_CONFIG) -> ScannedCorpus:
    """Parse an MQDQ XML document into a ScannedCorpus.

    ``source`` may be bytes, an XML string, a path, or a file-like
    object.  Malformed XML raises CorpusParseError (fatal).  Individual
    lines that are not hexameters, do not decode, or fail validation are
    recorded in ``skipped`` with a reason; every line element of the
    document ends up either in ``lines`` or in ``skipped``.
    """
    data = _read_bytes(source)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        lineno, column = getattr(exc, "position", (None, None))
        offset = _byte_offset(data, lineno, column) if lineno is not None else None
        raise CorpusParseError(
            f"malformed XML: {exc} (byte offset {offset})",
            line=lineno,
            column=column,
            byte_offset=offset,
        ) from exc

    lines: list[ScannedLine] = []
    skipped: list[SkippedLine] = []
    for label, elem in _iter_line_elements(root):
        metre = elem.get("metre", "")
        if metre != "H":
            skipped.append(SkippedLine(label, f"non-hexameter metre {metre!r}"))
            continue
        pattern = elem.get("pattern", "")
        word_attrs = [
            ((child.text or "").strip(), child.get("sy", ""), child.get("wb"),
             child.get(config.elision_attr))
            for child in elem
            if _local_tag(child.tag) == "word"
        ]
        try:
            line = line_from_attrs(label, metre, pattern, word_attrs, config)
        except ValueError as exc:
            skipped.append(SkippedLine(label, str(exc)))
            continue
        violations = validate_line(line)
        if violations:
            skipped.append(SkippedLine(label, "; ".join(violations)))
            continue
        lines.append(line)
    return ScannedCorpus(source_id=source_id, lines=tuple(lines), skipped=tuple(skipped))


def corpus_to_json(corpus: ScannedCorpus) -> dict:
    """Canonical JSON form (field names are the stable public surface)."""
    return {
        "source_id": corpus.source_id,
        "lines": [
            {
                "name": line.name,
                "pattern": line.pattern,
                "words": [
                    {"text": w.text, "sy": w.sy, "wb": w.wb, "mf": w.mf}
                    for w in line.words
                ],
            }
            for line in corpus.lines
        ],
        "skipped": [{"name": s.name, "reason": s.reason} for s in corpus.skipped],
    }


def corpus_from_json(doc: dict, config=DEFAULT_PARSER_CONFIG) -> ScannedCorpus:
    """Rebuild a ScannedCorpus from its canonical JSON form."""
    lines = []
    for entry in doc.get("lines", ()):
        word_attrs = [
            (w["text"], w["sy"], w.get("wb"), w.get("mf")) for w in entry["words"]
        ]
        try:
            lines.append(
                line_from_attrs(entry["name"], "H", entry["pattern"], word_attrs, config)
            )
        except ValueError as exc:
            raise DataError(f"line {entry.get('name')!r}: {exc}") from None
    skipped = tuple(
        SkippedLine(s["name"], s["reason"]) for s in doc.get("skipped", ())
    )
    return ScannedCorpus(doc.get("source_id", ""), tuple(lines), skipped)


def dump_corpus(corpus: ScannedCorpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_json(corpus), fh, ensure_ascii=False, indent=1)


def load_corpus(path, config=DEFAULT_PARSER_CONFIG) -> ScannedCorpus:
    with open(path, encoding="utf-8") as fh:
        return corpus_from_json(json.load(fh), config)
