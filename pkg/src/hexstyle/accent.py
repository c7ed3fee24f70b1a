"""Latin word-accent assignment for scanned hexameter lines.

The core rule is simple: accent the penult of a 3+-syllable word when it
is long, the antepenult otherwise; mono- and disyllables are accented on
their first syllable.  The edge cases are what needs care, and they are
all configuration here rather than code: prepositive words that bear no
accent at all, enclitic suffixes (-que, -ne, -ue) that are stripped
before the stem is accented, a protection list for words whose ending
merely looks enclitic, and explicit per-word overrides for the handful
of disyllables whose accent scholars dispute.

Syllable weights come from the scansion itself (arsis and thesis are
long, breves short), never from a dictionary.
"""

from __future__ import annotations

import enum
import json
import re
import sys
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType

from .corpus import (
    ANCEPS,
    BREVE1,
    BREVE2,
    SYNALEPHA,
    MetricalPosition,
    ScannedLine,
    ScannedWord,
)
from .errors import DataError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Weight(enum.Enum):
    LONG = "long"
    SHORT = "short"
    ANCEPS = "anceps"


def syllable_weight(position: MetricalPosition) -> Weight:
    """Weight implied by the metrical slot: A/T long, b/c short, X anceps."""
    if position.slot in (BREVE1, BREVE2):
        return Weight.SHORT
    if position.slot == ANCEPS:
        return Weight.ANCEPS
    return Weight.LONG


_NON_LETTER = re.compile(r"[^a-z]")
_VOWEL_GROUP = re.compile(r"[aeiouy]+")


def normalize_word(text: str) -> str:
    """Lowercased, v->u and j->i, diacritics and punctuation removed."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    folded = stripped.lower().replace("v", "u").replace("j", "i")
    return _NON_LETTER.sub("", folded)


def _syllable_count(form: str) -> int:
    return len(_VOWEL_GROUP.findall(form))


@dataclass(frozen=True)
class AccentConfig:
    """Accent-doctrine knobs, normalized at construction."""

    unaccented_words: frozenset[str]
    enclitics: tuple[str, ...]
    enclitic_exceptions: frozenset[str]
    accent_overrides: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @classmethod
    def from_mapping(cls, data: dict) -> "AccentConfig":
        enclitics = tuple(
            sorted({normalize_word(e) for e in data.get("enclitics", ())},
                   key=len, reverse=True)
        )
        return cls(
            unaccented_words=frozenset(
                normalize_word(w) for w in data.get("unaccented_words", ())
            ),
            enclitics=enclitics,
            enclitic_exceptions=frozenset(
                normalize_word(w) for w in data.get("enclitic_exceptions", ())
            ),
            accent_overrides=MappingProxyType(
                {normalize_word(k): int(v)
                 for k, v in data.get("accent_overrides", {}).items()}
            ),
        )

    @classmethod
    def default(cls) -> "AccentConfig":
        global _DEFAULT_CONFIG
        if _DEFAULT_CONFIG is None:
            raw = resources.files("hexstyle.data").joinpath("accent_defaults.json")
            _DEFAULT_CONFIG = cls.from_mapping(json.loads(raw.read_text("utf-8")))
        return _DEFAULT_CONFIG

    @classmethod
    def from_file(cls, path) -> "AccentConfig":
        """Load a TOML or JSON config; missing keys fall back to defaults."""
        path = str(path)
        try:
            if path.endswith(".toml"):
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            else:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
        except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
            raise DataError(f"cannot read accent config {path}: {exc}") from exc
        defaults = cls.default()
        merged = {
            "unaccented_words": data.get(
                "unaccented_words", sorted(defaults.unaccented_words)),
            "enclitics": data.get("enclitics", defaults.enclitics),
            "enclitic_exceptions": data.get(
                "enclitic_exceptions", sorted(defaults.enclitic_exceptions)),
            "accent_overrides": data.get(
                "accent_overrides", dict(defaults.accent_overrides)),
        }
        return cls.from_mapping(merged)


_DEFAULT_CONFIG: AccentConfig | None = None


@dataclass(frozen=True)
class AccentedLine:
    """Accented metrical positions of a line, at most one per word.

    ``word_accents`` is parallel to ``line.words`` (None for unaccented
    words); ``accented_positions`` is the same information as a set.
    """

    line: ScannedLine
    accented_positions: frozenset[MetricalPosition]
    word_accents: tuple[MetricalPosition | None, ...]


def accent_index(word: ScannedWord, cfg: AccentConfig | None = None) -> int | None:
    """0-based index of the accented syllable within the word, or None.

    Operates on the surviving (post-elision) syllables.  Rule order:
    explicit override, unaccented-word list, enclitic stripping, then
    the penult/antepenult rule on whatever syllables remain.
    """
    cfg = cfg or AccentConfig.default()
    sylls = word.syllables
    form = normalize_word(word.text)

    if form in cfg.accent_overrides:
        idx = cfg.accent_overrides[form]
        return idx if 0 <= idx < len(sylls) else None
    if form in cfg.unaccented_words:
        return None
    if not sylls:
        return None

    stem_count = len(sylls)
    if form not in cfg.enclitic_exceptions:
        for enc in cfg.enclitics:
            if form.endswith(enc) and len(form) > len(enc):
                # an elided final syllable already dropped the enclitic
                lost = 0 if word.elision == SYNALEPHA else _syllable_count(enc)
                stem_count = len(sylls) - lost
                break
    if stem_count <= 0:
        return None
    if stem_count <= 2:
        return 0
    penult = sylls[stem_count - 2]
    if syllable_weight(penult) is Weight.LONG:
        return stem_count - 2
    return stem_count - 3


def accented_positions(line: ScannedLine, cfg: AccentConfig | None = None) -> AccentedLine:
    """Accent every word of a validated line."""
    cfg = cfg or AccentConfig.default()
    per_word = []
    for word in line.words:
        idx = accent_index(word, cfg)
        per_word.append(word.syllables[idx] if idx is not None else None)
    return AccentedLine(
        line=line,
        accented_positions=frozenset(p for p in per_word if p is not None),
        word_accents=tuple(per_word),
    )
