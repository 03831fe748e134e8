import math
import re

from spacetoken.coord_text.models import CoordSpan

NUMBER = r"[-+]?\d+(?:\.\d+)?"
COORD_RE = re.compile(rf"\(\s*({NUMBER})\s*,\s*({NUMBER})\s*(?:,\s*({NUMBER})\s*)?\)")


def scan_coordinates(text: str) -> list[CoordSpan]:
    """Parenthesized 2- or 3-number tuples, in order; anything else is left alone."""
    spans = []
    for match in COORD_RE.finditer(text):
        values = tuple(float(g) for g in match.groups() if g is not None)
        # literals that overflow a double stay plain text
        if not all(math.isfinite(v) for v in values):
            continue
        spans.append(CoordSpan(start=match.start(), end=match.end(), values=values))
    return spans
