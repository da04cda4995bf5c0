"""Escalation policy, operator review queue, and labeling-batch selection.

A finished call is either cleared or escalated to a human with a reason.
The policy is deliberately asymmetric: a symptom report always wins, and
anything that leaves the system unsure (a low-confidence turn, an abandoned
question, a turn-budget abort) escalates rather than clears. Hang-ups and
consent refusals that never reached the questions escalate as incomplete.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Optional

from .dialog import CallSession, DialogState, Speaker, TriState, Utterance
from .errors import AlreadyReviewed, ConfigError, ContractViolation, NotFound
from .nlu import IntentClass, LabeledExample, LabelSource, NLUResult, uncertainty


class EscalationReason(str, Enum):
    SYMPTOMATIC = "SYMPTOMATIC"
    UNCERTAIN = "UNCERTAIN"
    INCOMPLETE = "INCOMPLETE"


class ReviewStatus(str, Enum):
    PENDING = "PENDING"
    REVIEWED = "REVIEWED"


class Verdict(str, Enum):
    CONFIRM_SYMPTOMATIC = "CONFIRM_SYMPTOMATIC"
    OVERRIDE_CLEAR = "OVERRIDE_CLEAR"


@dataclass(frozen=True)
class TriagePolicy:
    tau: float = 0.7
    max_reprompts: int = 2
    max_turns: int = 12

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if self.max_reprompts < 0:
            raise ConfigError("max_reprompts must be non-negative")
        if self.max_turns < 5:
            raise ConfigError("max_turns must be at least 5")


@dataclass(frozen=True)
class TriageDecision:
    escalate: bool
    reason: Optional[EscalationReason] = None

    def __post_init__(self) -> None:
        if self.escalate != (self.reason is not None):
            raise ContractViolation("reason is present exactly when escalating")

    @classmethod
    def clear(cls) -> "TriageDecision":
        return cls(escalate=False)

    @classmethod
    def escalated(cls, reason: EscalationReason) -> "TriageDecision":
        return cls(escalate=True, reason=reason)


def decide(session: CallSession, policy: TriagePolicy) -> TriageDecision:
    """Triage one terminal session. Precedence: SYMPTOMATIC > UNCERTAIN > INCOMPLETE."""
    if not session.is_terminal:
        raise ContractViolation("triage requires a terminal session")

    if session.slots.fever is TriState.YES or session.slots.respiratory is TriState.YES:
        return TriageDecision.escalated(EscalationReason.SYMPTOMATIC)

    low_confidence = any(
        u.nlu is not None and u.nlu.p_top1 < policy.tau for u in session.transcript
    )
    unanswered = (
        "FEVER" in session.asked_questions and session.slots.fever is TriState.UNKNOWN
    ) or ("RESP" in session.asked_questions and session.slots.respiratory is TriState.UNKNOWN)
    if (
        low_confidence
        or session.reprompt_cap_hit
        or session.turn_count >= policy.max_turns
        or unanswered
    ):
        return TriageDecision.escalated(EscalationReason.UNCERTAIN)

    hung_up_early = session.outcome is DialogState.HANGUP and not session.closing_delivered
    if hung_up_early or session.consent_refused:
        return TriageDecision.escalated(EscalationReason.INCOMPLETE)

    return TriageDecision.clear()


@dataclass(frozen=True)
class ReviewDecision:
    operator_id: str
    verdict: Verdict
    labels: tuple[tuple[int, IntentClass], ...]
    reviewed_at: datetime


@dataclass
class EscalationRecord:
    record_id: str
    session_id: str
    subject_id: str
    reason: EscalationReason
    transcript: tuple[Utterance, ...]
    created_at: datetime
    review_status: ReviewStatus = ReviewStatus.PENDING
    review: Optional[ReviewDecision] = None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "session_id": self.session_id,
            "subject_id": self.subject_id,
            "reason": self.reason.value,
            "created_at": self.created_at.isoformat(),
            "review_status": self.review_status.value,
            "transcript": [
                {
                    "seq": i,
                    "speaker": u.speaker.value,
                    "text": u.text,
                    "ts": u.timestamp.isoformat(),
                    "class": u.nlu.top1.value if u.nlu else None,
                    "p_top1": u.nlu.p_top1 if u.nlu else None,
                }
                for i, u in enumerate(self.transcript)
            ],
            "review": None
            if self.review is None
            else {
                "operator_id": self.review.operator_id,
                "verdict": self.review.verdict.value,
                "labels": [[i, c.value] for i, c in self.review.labels],
                "reviewed_at": self.review.reviewed_at.isoformat(),
            },
        }


class ReviewQueue:
    """Shared mutable store of escalations; enqueue/review are linearizable."""

    def __init__(self) -> None:
        self._records: dict[str, EscalationRecord] = {}
        self._lock = threading.Lock()
        self._next = 1

    def enqueue(
        self,
        session: CallSession,
        reason: EscalationReason,
        created_at: datetime,
    ) -> EscalationRecord:
        with self._lock:
            record_id = f"esc-{self._next:06d}"
            self._next += 1
            record = EscalationRecord(
                record_id=record_id,
                session_id=session.session_id,
                subject_id=session.subject_id,
                reason=reason,
                transcript=session.transcript,
                created_at=created_at,
            )
            self._records[record_id] = record
            return record

    def restore(self, record: EscalationRecord) -> None:
        """Re-insert a record during event-log replay, keeping ids monotone."""
        with self._lock:
            self._records[record.record_id] = record
            seq = int(record.record_id.split("-")[1])
            self._next = max(self._next, seq + 1)

    def get(self, record_id: str) -> EscalationRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise NotFound(f"no escalation record {record_id!r}") from None

    def list(self, status: Optional[ReviewStatus] = None) -> list[EscalationRecord]:
        records = sorted(self._records.values(), key=lambda r: r.record_id)
        if status is None:
            return records
        return [r for r in records if r.review_status is status]

    def review(self, record_id: str, decision: ReviewDecision) -> list[LabeledExample]:
        """Apply an operator decision; returns the labels to feed training."""
        with self._lock:
            record = self.get(record_id)
            if record.review_status is ReviewStatus.REVIEWED:
                raise AlreadyReviewed(f"record {record_id} was already reviewed")
            examples = []
            for index, label in decision.labels:
                if not 0 <= index < len(record.transcript):
                    raise ContractViolation(f"label references utterance {index} out of range")
                utt = record.transcript[index]
                if utt.speaker is not Speaker.CALLEE:
                    raise ContractViolation("labels may reference callee utterances only")
                examples.append(
                    LabeledExample(text=utt.text, label=label, source=LabelSource.OPERATOR)
                )
            record.review_status = ReviewStatus.REVIEWED
            record.review = decision
            return examples

    def drop(self, record_id: str) -> None:
        with self._lock:
            self._records.pop(record_id, None)

    def verdict_counts(self) -> dict[Verdict, int]:
        counts = {v: 0 for v in Verdict}
        for record in self._records.values():
            if record.review is not None:
                counts[record.review.verdict] += 1
        return counts


def select_batch(
    pool: list[tuple[Utterance, NLUResult]], k: int, method: str = "top1"
) -> list[tuple[Utterance, NLUResult]]:
    """Pick the k most uncertain utterances, ties broken by earliest timestamp.

    The ordering key is total over (uncertainty desc, timestamp asc, text),
    so the result is invariant under permutations of the pool.
    """
    if k < 0:
        raise ContractViolation("k must be non-negative")
    ranked = sorted(
        pool,
        key=lambda item: (-uncertainty(item[1], method), item[0].timestamp, item[0].text),
    )
    return ranked[:k]
