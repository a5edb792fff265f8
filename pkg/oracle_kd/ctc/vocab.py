from typing import List, Optional, Sequence

from oracle_kd.errors import UsageError


class Vocab:
    """Label symbols I plus the blank, giving the output classes I'.

    Label tokens index into `symbols`; alignment and posterior classes
    index into I'. With the default `blank_last=True` the blank is class
    |I| and tokens map onto classes unchanged; with `blank_last=False` the
    blank is class 0 and every token is shifted up by one.
    """

    def __init__(self, symbols: Sequence[str], blank_last: bool = True):
        symbols = list(symbols)
        if not symbols:
            raise UsageError('a vocabulary needs at least one label symbol')
        if len(set(symbols)) != len(symbols):
            raise UsageError('vocabulary symbols must be unique')
        self.symbols: List[str] = symbols
        self.blank_last = blank_last

    @classmethod
    def of_size(cls, size: int, blank_last: bool = True) -> 'Vocab':
        return cls([str(i) for i in range(size)], blank_last=blank_last)

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.symbols == other.symbols and self.blank_last == other.blank_last

    def __repr__(self) -> str:
        return f'Vocab(size={len(self)}, blank={self.blank})'

    @property
    def num_classes(self) -> int:
        return len(self.symbols) + 1

    @property
    def blank(self) -> int:
        return len(self.symbols) if self.blank_last else 0

    def class_of(self, token: int) -> int:
        if not 0 <= token < len(self.symbols):
            raise UsageError(f'token {token} outside vocabulary of size {len(self.symbols)}')
        return token if self.blank_last else token + 1

    def token_of(self, cls: int) -> Optional[int]:
        if cls == self.blank:
            return None
        return cls if self.blank_last else cls - 1

    def lift(self, tokens: Sequence[int]) -> List[int]:
        """Identity alignment of a label sequence (one frame per token)."""
        return [self.class_of(int(t)) for t in tokens]

    def label_classes(self) -> List[int]:
        """Classes of I' in token order, blank excluded."""
        return [self.class_of(t) for t in range(len(self.symbols))]

    def encode(self, text: Sequence[str]) -> List[int]:
        index = {s: i for i, s in enumerate(self.symbols)}
        try:
            return [index[s] for s in text]
        except KeyError as e:
            raise UsageError(f'symbol {e.args[0]!r} not in vocabulary') from None

    def decode(self, tokens: Sequence[int]) -> List[str]:
        return [self.symbols[int(t)] for t in tokens]
