import logging
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

from more_itertools import peekable

from spacetoken.coord_text.models import (
    MAX_VOCAB_SIZE,
    SPECIAL_TOKENS,
    TokenizationError,
    Vocab,
)
from spacetoken.utils import read_json, write_json

LOGGER = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"[A-Za-z_]+|\d|[^\w\s]")
DIGITS = tuple("0123456789")
PUNCTUATION = ("(", ")", ",", ".", "-", ":", ";")
GLUE_RIGHT = {"("}
GLUE_LEFT = {")", ","}
VOCAB_FILE = "vocab.json"


def tokenize(text: str) -> list[str]:
    """Lower-cased words, single digits and single punctuation marks."""
    return [t.lower() for t in TOKEN_RE.findall(text)]


def _at(it: peekable, i: int) -> str | None:
    try:
        return it[i]
    except IndexError:
        return None


def merge_numbers(tokens: Iterable[str]) -> list[str]:
    """Glue digit, sign and decimal-point tokens back into number pieces."""
    it = peekable(tokens)
    pieces = []
    for token in it:
        nxt = _at(it, 0)
        if not (token.isdigit() or (token == "-" and nxt is not None and nxt.isdigit())):
            pieces.append(token)
            continue
        piece = token
        while (nxt := _at(it, 0)) is not None:
            if nxt.isdigit():
                piece += next(it)
            elif nxt == "." and "." not in piece and (after := _at(it, 1)) and after.isdigit():
                piece += next(it)
            else:
                break
        pieces.append(piece)
    return pieces


def join_pieces(pieces: Sequence[str]) -> str:
    """Canonical spacing: a single space between pieces except after '(' and before ')' or ','."""
    out = []
    for i, piece in enumerate(pieces):
        if i and pieces[i - 1] not in GLUE_RIGHT and piece not in GLUE_LEFT:
            out.append(" ")
        out.append(piece)
    return "".join(out)


def detokenize(tokens: Iterable[str]) -> str:
    return join_pieces(merge_numbers(tokens))


def build_vocab(texts: Iterable[str], extra_words: Iterable[str] = ()) -> Vocab:
    """Closed vocabulary over a corpus; digits and grammar punctuation are always present."""
    words = set(DIGITS) | set(PUNCTUATION) | {w.lower() for w in extra_words}
    for text in texts:
        words.update(tokenize(text))
    words -= set(SPECIAL_TOKENS)
    if len(words) + len(SPECIAL_TOKENS) > MAX_VOCAB_SIZE:
        raise TokenizationError(
            f"corpus yields {len(words) + len(SPECIAL_TOKENS)} tokens, limit is {MAX_VOCAB_SIZE}"
        )
    vocab = Vocab(tokens=SPECIAL_TOKENS + tuple(sorted(words)))
    LOGGER.info(f"Built vocabulary of {len(vocab)} tokens (+ indicator)")
    return vocab


def encode_tokens(tokens: Iterable[str], vocab: Vocab) -> list[int]:
    return [vocab.token_id(t) for t in tokens]


def save_vocab(vocab: Vocab, directory: Path):
    write_json(directory / VOCAB_FILE, vocab.to_mapping())


def load_vocab(directory: Path) -> Vocab:
    path = directory / VOCAB_FILE
    if not path.exists():
        raise TokenizationError(f"no vocabulary at {path}")
    return Vocab.from_mapping(read_json(path))
