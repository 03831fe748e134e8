"""Synthetic planning prompts and a grammar fuzzer over the same word set."""

import logging
import math
import re
from collections.abc import Sequence

import numpy as np

from spacetoken.coord_text.models import Vocab
from spacetoken.coord_text.scanner import COORD_RE
from spacetoken.coord_text.stream import PREAMBLE, format_coordinate
from spacetoken.coord_text.vocab import build_vocab, join_pieces
from spacetoken.geometry.models import Coordinate3D
from spacetoken.utils import format_number, rng_for

LOGGER = logging.getLogger(__name__)

AGENT_CLASSES = ("car", "truck", "pedestrian")
COMMAND_PHRASES = {
    "left": "turn left",
    "straight": "go straight",
    "right": "turn right",
}
PROMPT_WORDS = (
    "driving",
    "scene",
    "command",
    "agents",
    "none",
    "at",
    "plan",
    "the",
    "ego",
    "trajectory",
    *AGENT_CLASSES,
    *(w for phrase in COMMAND_PHRASES.values() for w in phrase.split()),
    *PREAMBLE,
)
FILLER_WORDS = ("object", "ahead", "behind", "speed", "km", "time", "noon", "near", "and", "lane")
COORD_EXTENT_M = 60.0


def format_prompt(command: str, agents: Sequence[tuple[str, Coordinate3D]]) -> str:
    """
    Canonical prompt, e.g. "driving scene ; command : turn left ;
    agents : car at (12.4, -3.1, 0.8) ; plan the ego trajectory".
    """
    listed = " ; ".join(f"{cls} at {format_coordinate(c, bev=False)}" for cls, c in agents)
    return " ; ".join(
        [
            "driving scene",
            f"command : {COMMAND_PHRASES[command]}",
            f"agents : {listed or 'none'}",
            "plan the ego trajectory",
        ]
    )


def _random_coordinate(rng: np.random.Generator, bev: bool) -> Coordinate3D:
    x, y = np.round(rng.uniform(-COORD_EXTENT_M, COORD_EXTENT_M, size=2), 1)
    z = 0.0 if bev else float(np.round(rng.uniform(-2.0, 4.0), 1))
    return Coordinate3D(x=float(x), y=float(y), z=z)


def random_prompt(rng: np.random.Generator, max_agents: int = 4) -> str:
    command = str(rng.choice(list(COMMAND_PHRASES)))
    agents = [
        (str(rng.choice(AGENT_CLASSES)), _random_coordinate(rng, bev=False))
        for _ in range(int(rng.integers(0, max_agents + 1)))
    ]
    return format_prompt(command, agents)


def generate_corpus(n: int, seed: int = 0) -> list[str]:
    rng = rng_for(seed, 101)
    return [random_prompt(rng) for _ in range(n)]


def corpus_vocab(texts: Sequence[str] = ()) -> Vocab:
    """The project vocabulary: prompt and filler words plus whatever ``texts`` add."""
    return build_vocab(texts, extra_words=(*PROMPT_WORDS, *FILLER_WORDS, ";", ":"))


def fuzz_strings(n: int, seed: int = 0, max_pieces: int = 12) -> list[str]:
    """
    Grammar-generated strings in canonical spacing: words, bare integers,
    2- and 3-number coordinates, and parenthesized non-coordinates like "(noon)".
    """
    rng = rng_for(seed, 202)
    words = (*PROMPT_WORDS, *FILLER_WORDS)
    out = []
    for _ in range(n):
        pieces: list[str] = []
        last_numeric = False
        for _ in range(int(rng.integers(1, max_pieces + 1))):
            kind = int(rng.integers(0, 5))
            if kind == 1 and not last_numeric:
                pieces.append(str(int(rng.integers(0, 1000))))
                last_numeric = True
                continue
            if kind == 2:
                bev = bool(rng.integers(2))
                pieces.append(format_coordinate(_random_coordinate(rng, bev), bev))
            elif kind == 3:
                pieces.extend(["(", str(rng.choice(words)), ")"])
            elif kind == 4 and pieces:
                pieces.append(",")
            else:
                pieces.append(str(rng.choice(words)))
            last_numeric = False
        out.append(join_pieces(pieces))
    return out


def reprint(text: str) -> str:
    """Numbers in ``text`` at the fixed coordinate precision (identity on canonical corpora)."""

    def fixed(match: re.Match) -> str:
        numbers = [float(g) for g in match.groups() if g is not None]
        if not all(math.isfinite(v) for v in numbers):
            return match.group(0)
        values = [format_number(v) for v in numbers]
        return "(" + ", ".join(values) + ")"

    return COORD_RE.sub(fixed, text)
