"""Confidence-scored intent classification over callee utterances.

The classifier is a smoothed bag-of-words log-linear model: each class keeps
a weight per known token, an utterance's class logit is the sum of the
weights of its tokens, and the score vector is the softmax of the logits.
Tokens never seen under any class are skipped, so an empty or fully unknown
utterance yields the uniform distribution.

Training is an additive count update with Laplace smoothing; counts
accumulate over the lifetime of a lexicon and every update bumps its
version, which makes snapshots cheap to reason about in the labeling loop.
"""

from __future__ import annotations

import json
import math
import string
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ContractViolation


class IntentClass(str, Enum):
    YES = "YES"
    NO = "NO"
    OTHER = "OTHER"


# Tie-break preference: uncertain (OTHER) over YES over NO, so that an
# ambiguous utterance is never silently read as a clear negative.
_TIE_ORDER = (IntentClass.OTHER, IntentClass.YES, IntentClass.NO)

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation characters, split on whitespace."""
    return [t for t in text.lower().translate(_PUNCT_TABLE).split() if t]


class LabelSource(str, Enum):
    SEED = "SEED"
    OPERATOR = "OPERATOR"


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: IntentClass
    source: LabelSource = LabelSource.OPERATOR


@dataclass(frozen=True)
class NLUResult:
    """Normalized class scores for one utterance."""

    scores: dict[IntentClass, float]
    top1: IntentClass
    p_top1: float
    margin: float

    def to_dict(self) -> dict:
        return {
            "scores": {c.value: s for c, s in self.scores.items()},
            "top1": self.top1.value,
            "p_top1": self.p_top1,
            "margin": self.margin,
        }


@dataclass
class Lexicon:
    """Per-class token weights plus the accumulated counts behind them.

    ``weights`` may be constructed directly (tests and hand-built models) or
    derived from ``counts`` via Laplace smoothing: for every token in the
    shared vocabulary,

        weight(c, t) = log((count(c, t) + lam) / (count(c) + lam * |vocab|))

    Tokens outside the vocabulary contribute 0 to every class logit.
    """

    weights: dict[IntentClass, dict[str, float]] = field(
        default_factory=lambda: {c: {} for c in IntentClass}
    )
    counts: dict[IntentClass, dict[str, int]] = field(
        default_factory=lambda: {c: {} for c in IntentClass}
    )
    lam: float = 1.0
    version: int = 0

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ContractViolation(f"smoothing constant must be positive, got {self.lam}")
        for table in self.weights.values():
            for token, w in table.items():
                if not math.isfinite(w):
                    raise ContractViolation(f"non-finite weight for token {token!r}")

    @property
    def vocabulary(self) -> set[str]:
        vocab: set[str] = set()
        for table in self.counts.values():
            vocab.update(table)
        for table in self.weights.values():
            vocab.update(table)
        return vocab

    @classmethod
    def from_counts(
        cls, counts: dict[IntentClass, dict[str, int]], lam: float = 1.0, version: int = 0
    ) -> "Lexicon":
        full = {c: dict(counts.get(c, {})) for c in IntentClass}
        lex = cls(weights={c: {} for c in IntentClass}, counts=full, lam=lam, version=version)
        lex._rebuild_weights()
        return lex

    @classmethod
    def load(cls, path: str | Path, lam: float = 1.0) -> "Lexicon":
        """Read a class -> {token: count} mapping from a JSON file."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        counts = {
            IntentClass(name): {str(t): int(n) for t, n in table.items()}
            for name, table in raw.items()
        }
        return cls.from_counts(counts, lam=lam)

    def _rebuild_weights(self) -> None:
        vocab = sorted({t for table in self.counts.values() for t in table})
        v = len(vocab)
        self.weights = {}
        for c in IntentClass:
            total = sum(self.counts[c].values())
            denom = total + self.lam * v
            self.weights[c] = {
                t: math.log((self.counts[c].get(t, 0) + self.lam) / denom) for t in vocab
            }

    def copy(self) -> "Lexicon":
        return Lexicon(
            weights={c: dict(t) for c, t in self.weights.items()},
            counts={c: dict(t) for c, t in self.counts.items()},
            lam=self.lam,
            version=self.version,
        )


def _softmax(logits: dict[IntentClass, float]) -> dict[IntentClass, float]:
    peak = max(logits.values())
    exps = {c: math.exp(x - peak) for c, x in logits.items()}
    total = sum(exps.values())
    return {c: e / total for c, e in exps.items()}


def classify(lexicon: Lexicon, text: str) -> NLUResult:
    """Score an utterance against the lexicon.

    Deterministic and purely bag-of-words: the result depends only on the
    token multiset. Ties on the top score resolve toward OTHER.
    """
    # Summing per sorted unique token makes the logits an exact function of
    # the token multiset, not of word order.
    bag = sorted(Counter(tokenize(text)).items())
    logits = {
        c: sum(lexicon.weights[c].get(t, 0.0) * n for t, n in bag) for c in IntentClass
    }
    scores = _softmax(logits)

    best = max(scores.values())
    top1 = next(c for c in _TIE_ORDER if scores[c] == best)
    second = max(s for c, s in scores.items() if c is not top1)
    return NLUResult(scores=scores, top1=top1, p_top1=best, margin=best - second)


def train_update(lexicon: Lexicon, examples: list[LabeledExample]) -> Lexicon:
    """Fold labeled examples into a new lexicon snapshot.

    Counts commute, so the order of examples within a batch does not matter.
    The input lexicon is left untouched; the returned copy has its weights
    recomputed from the accumulated counts and its version incremented.
    """
    if not examples:
        raise ContractViolation("train_update requires a non-empty batch")
    updated = lexicon.copy()
    for ex in examples:
        table = updated.counts[IntentClass(ex.label)]
        for token in tokenize(ex.text):
            table[token] = table.get(token, 0) + 1
    updated._rebuild_weights()
    updated.version = lexicon.version + 1
    return updated


def uncertainty(result: NLUResult, method: str = "top1") -> float:
    """Uncertainty score in [0, 1]; higher means a better labeling candidate.

    ``top1`` is 1 - p_top1; ``margin`` is 1 - (p_top1 - p_second).
    """
    if method == "top1":
        return 1.0 - result.p_top1
    if method == "margin":
        return 1.0 - result.margin
    raise ContractViolation(f"unknown uncertainty method {method!r}")
