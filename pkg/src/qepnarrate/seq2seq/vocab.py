"""Token vocabularies with reserved ids."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

PAD, BOS, END, UNK = "<PAD>", "<BOS>", "<END>", "<UNK>"
RESERVED = (PAD, BOS, END, UNK)
PAD_ID, BOS_ID, END_ID, UNK_ID = range(4)


@dataclass
class Vocab:
    tokens: list[str]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if list(self.tokens[:4]) != list(RESERVED):
            raise ValueError("vocabulary must start with the reserved tokens")
        self.index = {}
        for i, tok in enumerate(self.tokens):
            if tok in self.index:
                raise ValueError(f"duplicate token {tok!r}")
            self.index[tok] = i

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]]) -> "Vocab":
        """Reserved tokens first, then the rest in first-seen order."""
        tokens = list(RESERVED)
        seen = set(tokens)
        for seq in sequences:
            for tok in seq:
                if tok not in seen:
                    seen.add(tok)
                    tokens.append(tok)
        return cls(tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, tok) -> bool:
        return tok in self.index

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.index.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in ids]
