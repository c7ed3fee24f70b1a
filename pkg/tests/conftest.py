"""Shared fixtures: the reference line, synthetic line builders, and a
hypothesis strategy producing arbitrary valid scanned lines."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from hexstyle.corpus import line_from_attrs, parse_document

# A real scansion fragment used as the golden reference throughout the
# suite: pattern DDDS, strong caesurae in feet 2 and 3, no elision.
SAMPLE_XML = """<lines>
<line name="952" metre="H" pattern="DDDS">
    <word sy="1A1b1c" wb="DI">Vitaque</word>
    <word sy="2A" wb="CM">cum</word>
    <word sy="2b2c3A" wb="CM">gemitu</word>
    <word sy="3b3c" wb="DI">fugit</word>
    <word sy="4A4T5A5b" wb="CF">indignata</word>
    <word sy="5c" wb="DI">sub</word>
    <word sy="6A6X">umbras.</word>
</line>
</lines>"""

GOLDEN_FEATURES = [0, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0]


@pytest.fixture
def sample_line():
    corpus = parse_document(SAMPLE_XML, source_id="sample")
    assert len(corpus.lines) == 1 and not corpus.skipped
    return corpus.lines[0]


def make_line(pattern, words, name="1", metre="H"):
    """words: (text, sy) or (text, sy, wb) or (text, sy, wb, mf) tuples."""
    attrs = []
    for spec in words:
        text, sy = spec[0], spec[1]
        wb = spec[2] if len(spec) > 2 else None
        mf = spec[3] if len(spec) > 3 else None
        attrs.append((text, sy, wb, mf))
    return line_from_attrs(name, metre, pattern, attrs)


# Monosyllabic nouns, none of them in the default unaccented list.
_WORDS = ("rex", "dux", "mons", "lux", "nox", "fax", "uir", "sol",
          "uis", "ros", "mus", "sus", "grex", "fons")


def full_harmony_line():
    """All-dactyl line of accented monosyllables, one per slot.

    Every arsis carries a word accent, no elision, and the word breaks
    fall after every syllable.
    """
    slots = []
    for foot in range(1, 6):
        slots += [f"{foot}A", f"{foot}b", f"{foot}c"]
    slots += ["6A", "6X"]
    words = []
    for i, code in enumerate(slots):
        final = i == len(slots) - 1
        wb = None if final else ("CM" if code.endswith("A")
                                 else "CF" if code.endswith("b") else "DI")
        words.append((_WORDS[i % len(_WORDS)], code, wb))
    return make_line("DDDD", words)


def _expected_wb(slot_code):
    if slot_code.endswith("A"):
        return "CM"
    if slot_code.endswith("b"):
        return "CF"
    return "DI"


@st.composite
def scanned_lines(draw):
    """Arbitrary metrically valid lines with consistent wb annotations."""
    pattern = "".join(draw(st.sampled_from("DS")) for _ in range(4))
    # spondaic fifth feet are legal but rare; keep them in the mix
    foot5 = draw(st.sampled_from("DDDDS"))
    codes = []
    for foot, shape in enumerate([*pattern, foot5], start=1):
        if shape == "D":
            codes += [f"{foot}A", f"{foot}b", f"{foot}c"]
        else:
            codes += [f"{foot}A", f"{foot}T"]
    codes += ["6A", "6X"]
    n = len(codes)
    cuts = sorted(draw(st.sets(st.integers(1, n - 1), max_size=n - 1)))
    bounds = [0, *cuts, n]
    words = []
    for w, (start, stop) in enumerate(zip(bounds, bounds[1:])):
        final = stop == n
        sy = "".join(codes[start:stop])
        wb = None if final else _expected_wb(codes[stop - 1])
        elide = not final and draw(st.booleans()) and draw(st.booleans())
        text = draw(st.sampled_from(_WORDS)) + ("que" if elide else "")
        words.append((text, sy, wb, "SY" if elide else None))
    return make_line(pattern, words, name=str(draw(st.integers(1, 9999))))


def bernoulli_lines(rng, n, probs):
    """Per-line binary feature rows from per-feature probabilities."""
    probs = np.asarray(probs, dtype=float)
    return (rng.random((n, probs.size)) < probs).astype(float)


def separated_profiles(delta=0.2, informative=8):
    """Two 16-feature Bernoulli profiles differing by delta on the first
    ``informative`` features."""
    pa = np.full(16, 0.5)
    pb = np.full(16, 0.5)
    pa[:informative] -= delta / 2
    pb[:informative] += delta / 2
    return pa, pb
