"""Deterministic word-level tokenizer with character fallback.

The vocabulary is built once from the generator's themed word pools plus
special tokens and single characters. In-vocabulary words map to a single
id (reversible); out-of-vocabulary words decompose into character ids;
characters outside the charset map to [UNK].
"""

from __future__ import annotations

import string

import numpy as np

PAD, CLS, SEP, MASK, UNK = "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"
SPECIALS = (PAD, CLS, SEP, MASK, UNK)

CHARSET = sorted(set(string.ascii_lowercase + string.digits + ".,:;#$%&()-/'"))


class Vocabulary:
    def __init__(self, words: list[str]):
        self.tokens = list(SPECIALS) + CHARSET + sorted(set(words) - set(CHARSET))
        if len(self.tokens) != len(set(self.tokens)):
            raise ValueError("duplicate tokens in vocabulary")
        self.index = {t: i for i, t in enumerate(self.tokens)}
        self.pad_id = self.index[PAD]
        self.cls_id = self.index[CLS]
        self.sep_id = self.index[SEP]
        self.mask_id = self.index[MASK]
        self.unk_id = self.index[UNK]

    def __len__(self):
        return len(self.tokens)

    @property
    def n_special(self):
        return len(SPECIALS)

    def random_pool(self) -> np.ndarray:
        """Ids eligible as random replacements: everything but specials."""
        return np.arange(self.n_special, len(self.tokens))

    def tokenize(self, text: str) -> list[int]:
        ids = []
        for word in text.split():
            word = word.lower()
            if word in self.index:
                ids.append(self.index[word])
            else:
                ids.extend(self.index.get(ch, self.unk_id) for ch in word)
        return ids

    def detokenize(self, ids) -> str:
        return " ".join(self.tokens[i] for i in ids)

    def save(self, path):
        import json

        with open(path, "w", encoding="utf-8") as f:
            json.dump({"words": self.tokens[self.n_special + len(CHARSET):]}, f)

    @staticmethod
    def load(path) -> "Vocabulary":
        import json

        with open(path, encoding="utf-8") as f:
            return Vocabulary(json.load(f)["words"])


def default_vocab() -> "Vocabulary":
    from .pools import ALL_WORDS

    return Vocabulary(ALL_WORDS)
