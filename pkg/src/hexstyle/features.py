"""The 16-feature metrical profile of a hexameter line.

Canonical order (this is the stable public surface, also used for CSV
headers and report rows):

    F1S..F4S   feet 1-4 shape, 1 if spondee
    F1C..F4C   feet 1-4 ictus/accent, 1 if conflict, 0 if homodyne
    BD         bucolic diaeresis: word break at the end of foot 4
    F2SC..F4SC strong caesura in feet 2-4 (word break after the arsis)
    F2WC..F4WC weak caesura in feet 2-4 (word break after the first breve)
    SYN        elision count (synalepha only; prodelision excluded)

All entries are 0/1 for a single line except SYN, which is a count.
Caesurae in feet 1, 5 and 6 are computed but not emitted.
"""

from __future__ import annotations

import logging

import numpy as np

from .accent import AccentConfig, AccentedLine, accented_positions
from .corpus import (
    ARSIS,
    BREVE1,
    BREVE2,
    KNOWN_WB,
    SYNALEPHA,
    THESIS,
    WB_DIAERESIS,
    WB_STRONG,
    WB_WEAK,
    MetricalPosition,
    ScannedLine,
)

log = logging.getLogger(__name__)

FEATURE_NAMES: tuple[str, ...] = (
    "F1S", "F2S", "F3S", "F4S",
    "F1C", "F2C", "F3C", "F4C",
    "BD",
    "F2SC", "F3SC", "F4SC",
    "F2WC", "F3WC", "F4WC",
    "SYN",
)

N_FEATURES = len(FEATURE_NAMES)


def foot_shape_flags(pattern: str) -> np.ndarray:
    """[F1S..F4S]: 1 where the pattern char is S."""
    if len(pattern) != 4:
        raise ValueError(f"pattern must have 4 characters, got {pattern!r}")
    flags = np.zeros(4)
    for i, c in enumerate(pattern):
        if c == "S":
            flags[i] = 1.0
        elif c != "D":
            raise ValueError(f"pattern position {i + 1}: invalid foot code {c!r}")
    return flags


def conflict_flags(line: ScannedLine, accents: AccentedLine) -> np.ndarray:
    """[F1C..F4C]: 0 iff the foot's arsis carries a word accent."""
    accented = accents.accented_positions
    return np.array(
        [0.0 if MetricalPosition(foot, ARSIS) in accented else 1.0
         for foot in range(1, 5)]
    )


def _expected_wb(slot: str) -> str:
    if slot == ARSIS:
        return WB_STRONG
    if slot == BREVE1:
        return WB_WEAK
    return WB_DIAERESIS


def caesura_flags(line: ScannedLine) -> np.ndarray:
    """[BD, F2SC, F3SC, F4SC, F2WC, F3WC, F4WC] from syllable positions.

    A non-final, non-elided word ending on an arsis makes a strong
    caesura in that foot; ending on the first breve makes a weak one;
    ending on the last slot of foot 4 (breve 2 or thesis) is the bucolic
    diaeresis.  Elision suppresses the word break.  The wb annotations
    are cross-checked and mismatches logged, but positions win.
    """
    strong = np.zeros(7)  # index by foot, 1-6
    weak = np.zeros(7)
    bd = 0.0
    for word in line.words[:-1]:
        if word.elision == SYNALEPHA or not word.syllables:
            continue
        end = word.syllables[-1]
        if end.slot == ARSIS:
            strong[end.foot] = 1.0
        elif end.slot == BREVE1:
            weak[end.foot] = 1.0
        elif end.foot == 4 and end.slot in (BREVE2, THESIS):
            bd = 1.0
        if word.wb in KNOWN_WB and word.wb != _expected_wb(end.slot):
            log.warning(
                "line %s: word %r ends at %s (implies %s) but is annotated %s; "
                "using the position",
                line.name, word.text, end, _expected_wb(end.slot), word.wb,
            )
    return np.array([bd, strong[2], strong[3], strong[4], weak[2], weak[3], weak[4]])


def elision_count(line: ScannedLine) -> int:
    """Number of synalepha-marked words; prodelision does not count."""
    return sum(1 for word in line.words if word.elision == SYNALEPHA)


def line_features(line: ScannedLine, cfg: AccentConfig | None = None) -> np.ndarray:
    """The full 16-entry vector for one validated line."""
    accents = accented_positions(line, cfg)
    vec = np.empty(N_FEATURES)
    vec[0:4] = foot_shape_flags(line.pattern)
    vec[4:8] = conflict_flags(line, accents)
    vec[8:15] = caesura_flags(line)
    vec[15] = float(elision_count(line))
    return vec


def feature_matrix(lines, cfg: AccentConfig | None = None) -> np.ndarray:
    """Stack line_features over an iterable of lines, shape (n, 16)."""
    cfg = cfg or AccentConfig.default()
    rows = [line_features(line, cfg) for line in lines]
    if not rows:
        return np.empty((0, N_FEATURES))
    return np.vstack(rows)


def homodyne_percentages(matrix: np.ndarray) -> np.ndarray:
    """Per-foot homodyne rates for feet 1-4, in percent.

    Homodyne means no ictus/accent conflict, so this is 100 * (1 - mean
    of the conflict columns).
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] == 0:
        return np.full(4, np.nan)
    return 100.0 * (1.0 - matrix[:, 4:8].mean(axis=0))
