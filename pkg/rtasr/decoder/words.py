from pathlib import Path
from typing import Iterable, Optional, Union

from ..errors import WfstFormatError
from ..models import Hypothesis

EPSILON = "<eps>"


class WordTable:
    '''
    Word string <-> id bijection, `word id` per line; "<eps>" is id 0 and
    real words are numbered densely from 1
    '''

    def __init__(self, ids: dict[str, int]):
        ids = dict(ids)
        if ids.setdefault(EPSILON, 0) != 0:
            raise WfstFormatError(f"{EPSILON} must map to 0, found {ids[EPSILON]}")
        by_id: dict[int, str] = {}
        for word, i in ids.items():
            if i in by_id:
                raise WfstFormatError(f"id {i} used by both {by_id[i]!r} and {word!r}")
            by_id[i] = word
        if sorted(by_id) != list(range(len(by_id))):
            raise WfstFormatError(f"word ids must be dense from 1, got up to {max(by_id)} for {len(by_id) - 1} words")
        self._ids = ids
        self._words = [by_id[i] for i in range(len(by_id))]

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "WordTable":
        return cls({w: i for i, w in enumerate(words, start=1)})

    @classmethod
    def parse(cls, text: str) -> "WordTable":
        ids = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 2:
                raise WfstFormatError(f"word table line {lineno}: expected `word id`")
            word, value = fields
            if word in ids:
                raise WfstFormatError(f"word table line {lineno}: {word!r} listed twice")
            try:
                ids[word] = int(value)
            except ValueError:
                raise WfstFormatError(f"word table line {lineno}: id {value!r} is not an integer")
        return cls(ids)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "WordTable":
        try:
            return cls.parse(Path(path).read_text())
        except OSError as e:
            raise WfstFormatError(f"cannot read word table {path}: {e}") from e

    def __len__(self) -> int:
        return len(self._words) - 1

    def id(self, word: str) -> int:
        try:
            return self._ids[word]
        except KeyError:
            raise WfstFormatError(f"unknown word {word!r}")

    def word(self, i: int) -> str:
        if not 0 <= i < len(self._words):
            raise WfstFormatError(f"word id {i} not in table")
        return self._words[i]

    def words(self, ids: Iterable[int]) -> list[str]:
        return [self.word(i) for i in ids]

    def transcript(self, hyp: Optional[Hypothesis]) -> str:
        return "" if hyp is None else " ".join(self.words(hyp.words))

    def format(self) -> str:
        return "".join(f"{w} {i}\n" for i, w in enumerate(self._words))

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.format())


def format_hypothesis(hyp: Hypothesis, table: Optional[WordTable] = None) -> str:
    '''
    `cost<TAB>word word word`; raw ids without a table
    '''
    words = table.words(hyp.words) if table is not None else [str(w) for w in hyp.words]
    return f"{hyp.cost:.4f}\t{' '.join(words)}"
