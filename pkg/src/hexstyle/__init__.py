"""Metrical stylometry toolkit for Latin hexameter.

Parses Pedecerto/MQDQ scansion XML, extracts a 16-dimensional metrical
profile per line (foot shapes, ictus/accent conflict, caesurae, bucolic
diaeresis, elision), and supports two kinds of analysis on top of it:
pairwise author classification over chunked feature vectors, and
one-class novelty scoring via bootstrap Mahalanobis distance with a
per-feature contribution decomposition.
"""

__version__ = "0.1.0"
