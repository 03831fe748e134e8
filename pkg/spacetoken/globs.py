from importlib.metadata import PackageNotFoundError, version

from cachetools.func import lru_cache

from spacetoken.coord_text.corpus import corpus_vocab
from spacetoken.coord_text.models import Vocab


@lru_cache(maxsize=1)
def default_vocab() -> Vocab:
    """The vocabulary every planner in a run shares: prompt words, digits, punctuation."""
    return corpus_vocab()


@lru_cache(maxsize=1)
def code_version() -> str:
    try:
        return version("spacetoken")
    except PackageNotFoundError:
        return "0+unknown"
