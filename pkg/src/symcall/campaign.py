"""Twice-daily call campaign: scheduling, simulated execution, retention,
and turn-level error reporting.

A campaign day schedules a morning and an afternoon attempt for every
enrolled subject still inside their monitoring window. Connection failures
retry after a delay, up to a bounded chain. In simulation mode each
answered attempt plays a full dialog against the subject's persona; the
ground truth behind every generated reply is recorded next to the
pipeline's verdicts so false negatives and false positives can be scored
per callee turn:

* false negative: the callee's intended answer affirmed a symptom, but the
  call ended with that slot not YES and no escalation;
* false positive: a clear non-symptom answer still triggered a flag (a
  wrongly set YES slot, a sub-threshold confidence, a reprompt cap, or a
  turn-budget abort).

All randomness flows from per-attempt generators derived from the campaign
seed, so one (config, seed) pair fully determines the event log.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from enum import Enum
from typing import Optional

import numpy as np

from .config import CampaignConfig
from .dialog import CallSession, DialogMachine, DialogState, TriState
from .errors import ConfigError, ContractViolation
from .events import EventKind, EventLog, EventRecord
from .nlu import IntentClass, Lexicon, NLUResult, classify
from .popsim import ConnectionOutcome, Persona, TemplatePool, connection_outcome, generate_reply
from .triage import EscalationReason, ReviewQueue, TriagePolicy, decide


class Slot(str, Enum):
    AM = "AM"
    PM = "PM"


class AttemptResult(str, Enum):
    COMPLETED = "COMPLETED"
    HANGUP = "HANGUP"
    CONNECTION_FAILURE = "CONNECTION_FAILURE"


@dataclass(frozen=True)
class Subject:
    subject_id: str
    enrolled_at: date
    window_days: int = 14
    persona_ref: Optional[str] = None
    phone_label: str = ""

    def __post_init__(self) -> None:
        if self.window_days < 1:
            raise ConfigError("window_days must be at least 1")

    def active_on(self, day: date) -> bool:
        return self.enrolled_at <= day < self.enrolled_at + timedelta(days=self.window_days)

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "enrolled_at": self.enrolled_at.isoformat(),
            "window_days": self.window_days,
            "persona_ref": self.persona_ref,
            "phone_label": self.phone_label,
        }


@dataclass
class CallAttempt:
    attempt_id: str
    subject_id: str
    planned_at: datetime
    slot: Slot
    result: Optional[AttemptResult] = None
    session_ref: Optional[str] = None
    retry_of: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "attempt_id": self.attempt_id,
            "subject_id": self.subject_id,
            "planned_at": self.planned_at.isoformat(),
            "slot": self.slot.value,
            "result": self.result.value if self.result else None,
            "session_ref": self.session_ref,
            "retry_of": self.retry_of,
        }


@dataclass(frozen=True)
class TurnTruth:
    """One callee turn with its ground truth and the flags it raised."""

    session_id: str
    subject_id: str
    seq: int  # index of the callee utterance within the transcript
    question_key: str
    text: str
    ts: datetime
    nlu: NLUResult
    gt_intent: IntentClass
    gt_clear: bool
    noise: bool
    flag_slot_yes: bool
    flag_uncertain: bool
    flag_cap: bool
    flag_tmax: bool

    @property
    def flagged(self) -> bool:
        return self.flag_slot_yes or self.flag_uncertain or self.flag_cap or self.flag_tmax

    @property
    def gt_affirms(self) -> bool:
        return self.gt_intent is IntentClass.YES and self.question_key in ("FEVER_Q", "RESP_Q")


@dataclass
class DayTally:
    attempts: int = 0
    failed_attempts: int = 0
    calls_total: int = 0
    completed: int = 0
    hangups: int = 0
    failed_final: int = 0
    total_turns: int = 0
    fn_count: int = 0
    fp_count: int = 0
    escalations: int = 0

    def add(self, other: "DayTally") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, raw: dict) -> "DayTally":
        return cls(**{k: int(v) for k, v in raw.items()})


@dataclass(frozen=True)
class MetricsReport:
    period_start: date
    period_end: date
    total_turns: int
    fn_count: int
    fp_count: int
    fn_ratio: float
    fp_ratio: float
    calls_total: int
    hangup_rate: float  # hang-ups / answered calls
    failure_rate: float  # failed attempts / dial attempts (retries included)
    attempts: int = 0
    completed: int = 0
    hangups: int = 0
    failed_attempts: int = 0
    escalations: int = 0

    def to_dict(self) -> dict:
        return {
            "period": [self.period_start.isoformat(), self.period_end.isoformat()],
            "total_turns": self.total_turns,
            "fn_count": self.fn_count,
            "fp_count": self.fp_count,
            "fn_ratio": self.fn_ratio,
            "fp_ratio": self.fp_ratio,
            "calls_total": self.calls_total,
            "hangup_rate": self.hangup_rate,
            "failure_rate": self.failure_rate,
            "attempts": self.attempts,
            "completed": self.completed,
            "hangups": self.hangups,
            "failed_attempts": self.failed_attempts,
            "escalations": self.escalations,
        }

    def to_table(self) -> str:
        """Count/Ratio rows in the shape of the published error table."""
        lines = [
            f"Period {self.period_start.isoformat()} .. {self.period_end.isoformat()}",
            f"{'':<16}{'Count':>10}{'Ratio':>10}",
            f"{'False negative':<16}{self.fn_count:>10}{self.fn_ratio:>10.2%}",
            f"{'False positive':<16}{self.fp_count:>10}{self.fp_ratio:>10.2%}",
            f"{'Total turns':<16}{self.total_turns:>10}{1:>10.2%}",
            f"calls={self.calls_total} hangup_rate={self.hangup_rate:.3f} "
            f"failure_rate={self.failure_rate:.3f}",
        ]
        return "\n".join(lines)


class CampaignStore:
    """Mutable campaign state: subjects, sessions, truth records, tallies,
    the escalation queue, and the append-only event log."""

    def __init__(self) -> None:
        self.subjects: dict[str, Subject] = {}
        self.personas: dict[str, Persona] = {}  # simulator-only; engine never reads it
        self.sessions: dict[str, CallSession] = {}
        self.session_created: dict[str, datetime] = {}
        self.turns: list[TurnTruth] = []
        self.queue = ReviewQueue()
        self.tallies: dict[date, DayTally] = {}
        self.events = EventLog()

    def add_subject(self, subject: Subject, persona: Optional[Persona] = None) -> None:
        if subject.subject_id in self.subjects:
            raise ContractViolation(f"subject {subject.subject_id} already registered")
        self.subjects[subject.subject_id] = subject
        if persona is not None:
            self.personas[subject.subject_id] = persona
        self.events.append(
            EventKind.SESSION_EVENT,
            {"event": "subject_registered", "subject": subject.to_dict()},
            ts=datetime.combine(subject.enrolled_at, time(0, 0)).isoformat(),
        )

    def labeling_pool(self):
        """(Utterance, NLUResult, TurnTruth) triples for batch selection.

        Free-text symptom descriptions are excluded: they carry no yes/no
        intent, so they are not labeling candidates for the classifier.
        """
        from .dialog import Speaker, Utterance

        pool = []
        for turn in self.turns:
            if turn.question_key == "DETAIL_Q":
                continue
            utt = Utterance(Speaker.CALLEE, turn.text, turn.ts, nlu=turn.nlu)
            pool.append((utt, turn.nlu, turn))
        return pool


def schedule(
    subjects: list[Subject], day: date, cfg: CampaignConfig
) -> list[CallAttempt]:
    """Two primary attempts per active subject, mornings first."""
    attempts = []
    active = sorted((s for s in subjects if s.active_on(day)), key=lambda s: s.subject_id)
    for slot, hour in ((Slot.AM, cfg.am_hour), (Slot.PM, cfg.pm_hour)):
        for subject in active:
            attempts.append(
                CallAttempt(
                    attempt_id=f"a-{day.isoformat()}-{slot.value}-{subject.subject_id}",
                    subject_id=subject.subject_id,
                    planned_at=datetime.combine(day, time(hour, 0)),
                    slot=slot,
                )
            )
    return attempts


def _attempt_rng(seed: int, day_index: int, subject_index: int, slot: Slot, retry: int):
    return np.random.default_rng(
        [seed, day_index, subject_index, 0 if slot is Slot.AM else 1, retry]
    )


@dataclass
class PlayedCall:
    session: CallSession
    turns: list[TurnTruth]
    result: AttemptResult


def play_call(
    machine: DialogMachine,
    lexicon: Lexicon,
    policy: TriagePolicy,
    persona: Persona,
    pool: TemplatePool,
    subject_id: str,
    session_id: str,
    already_called_today: bool,
    started_at: datetime,
    outcome: ConnectionOutcome,
    rng: np.random.Generator,
) -> PlayedCall:
    """Drive one answered call to a terminal state against a persona."""
    session = machine.start_session(
        subject_id, already_called_today, started_at, session_id=session_id
    )
    turns: list[TurnTruth] = []
    while not session.is_terminal:
        next_turn = session.turn_count + 1
        if outcome.hang_up_before_turn == next_turn:
            session = machine.hang_up(session)
            break
        question_key = session.pending_key
        reply = generate_reply(persona, question_key, pool, rng)
        nlu = classify(lexicon, reply.text)
        seq = len(session.transcript)
        before = session
        session, _ = machine.advance(session, reply.text, nlu)
        turns.append(
            TurnTruth(
                session_id=session_id,
                subject_id=subject_id,
                seq=seq,
                question_key=question_key,
                text=reply.text,
                ts=session.transcript[seq].timestamp,
                nlu=nlu,
                gt_intent=reply.intent,
                gt_clear=reply.clear,
                noise=reply.noise,
                flag_slot_yes=(
                    session.slots.fever is TriState.YES
                    and before.slots.fever is not TriState.YES
                )
                or (
                    session.slots.respiratory is TriState.YES
                    and before.slots.respiratory is not TriState.YES
                ),
                flag_uncertain=nlu.p_top1 < policy.tau,
                flag_cap=session.reprompt_cap_hit and not before.reprompt_cap_hit,
                flag_tmax=session.state is DialogState.ABORTED_MAX_TURNS,
            )
        )
    result = (
        AttemptResult.HANGUP
        if session.outcome is DialogState.HANGUP
        else AttemptResult.COMPLETED
    )
    return PlayedCall(session=session, turns=turns, result=result)


def score_turns(
    played: PlayedCall, escalated: bool
) -> tuple[int, int]:
    """Turn-level (fn, fp) counts for one finished call."""
    fn = fp = 0
    slots = played.session.slots
    for turn in played.turns:
        if turn.gt_affirms:
            captured = (
                slots.fever is TriState.YES
                if turn.question_key == "FEVER_Q"
                else slots.respiratory is TriState.YES
            )
            if not captured and not escalated:
                fn += 1
        elif turn.gt_clear and turn.flagged:
            fp += 1
    return fn, fp


def run_day(
    store: CampaignStore,
    day: date,
    lexicon: Lexicon,
    policy: TriagePolicy,
    machine: DialogMachine,
    pool: TemplatePool,
    cfg: CampaignConfig,
    seed: int,
    record_turn_events: bool = True,
) -> DayTally:
    """Resolve every scheduled attempt for one calendar day."""
    active = {s.subject_id for s in store.subjects.values() if s.active_on(day)}
    if not active <= set(store.personas):
        raise ContractViolation("run_day requires personas for every active subject")
    if day < cfg.start_date:
        raise ContractViolation("run_day before the campaign start date")

    day_index = (day - cfg.start_date).days
    tally = DayTally()
    subject_index_of = {sid: i for i, sid in enumerate(sorted(store.subjects))}
    attempts = schedule(list(store.subjects.values()), day, cfg)
    am_completed: set[str] = set()

    for attempt in attempts:
        subject_index = subject_index_of[attempt.subject_id]
        persona = store.personas[attempt.subject_id]
        already_called = attempt.slot is Slot.PM and attempt.subject_id in am_completed

        chain: list[CallAttempt] = [attempt]
        for retry in range(cfg.max_retries + 1):
            current = chain[-1]
            rng = _attempt_rng(seed, day_index, subject_index, attempt.slot, retry)
            outcome = connection_outcome(persona, rng)
            tally.attempts += 1

            if not outcome.answered:
                current.result = AttemptResult.CONNECTION_FAILURE
                tally.failed_attempts += 1
                _record_attempt(store, current)
                if retry < cfg.max_retries:
                    chain.append(
                        CallAttempt(
                            attempt_id=f"{attempt.attempt_id}-r{retry + 1}",
                            subject_id=attempt.subject_id,
                            planned_at=current.planned_at
                            + timedelta(minutes=cfg.retry_delay_minutes),
                            slot=attempt.slot,
                            retry_of=current.attempt_id,
                        )
                    )
                    continue
                tally.calls_total += 1
                tally.failed_final += 1
                break

            session_id = f"s-{current.attempt_id[2:]}"
            played = play_call(
                machine,
                lexicon,
                policy,
                persona,
                pool,
                attempt.subject_id,
                session_id,
                already_called,
                current.planned_at,
                outcome,
                rng,
            )
            current.result = played.result
            current.session_ref = session_id
            _record_attempt(store, current)

            store.sessions[session_id] = played.session
            store.session_created[session_id] = current.planned_at
            store.turns.extend(played.turns)

            decision = decide(played.session, policy)
            fn, fp = score_turns(played, decision.escalate)

            tally.calls_total += 1
            tally.total_turns += len(played.turns)
            tally.fn_count += fn
            tally.fp_count += fp
            if played.result is AttemptResult.COMPLETED:
                tally.completed += 1
                if attempt.slot is Slot.AM:
                    am_completed.add(attempt.subject_id)
            else:
                tally.hangups += 1

            if record_turn_events:
                for turn in played.turns:
                    store.events.append(
                        EventKind.SESSION_EVENT,
                        {
                            "event": "turn",
                            "session_id": turn.session_id,
                            "subject_id": turn.subject_id,
                            "seq": turn.seq,
                            "question_key": turn.question_key,
                            "text": turn.text,
                            "class": turn.nlu.top1.value,
                            "p_top1": turn.nlu.p_top1,
                            "gt_intent": turn.gt_intent.value,
                            "gt_clear": turn.gt_clear,
                            "noise": turn.noise,
                            "flags": {
                                "slot_yes": turn.flag_slot_yes,
                                "uncertain": turn.flag_uncertain,
                                "cap": turn.flag_cap,
                                "tmax": turn.flag_tmax,
                            },
                        },
                        ts=turn.ts.isoformat(),
                    )
            store.events.append(
                EventKind.SESSION_EVENT,
                {
                    "event": "session_end",
                    "session_id": session_id,
                    "subject_id": attempt.subject_id,
                    "slot": attempt.slot.value,
                    "outcome": played.session.outcome.value if played.session.outcome else None,
                    "slots": played.session.slots.to_dict(),
                    "turn_count": played.session.turn_count,
                    "escalate": decision.escalate,
                    "reason": decision.reason.value if decision.reason else None,
                },
                ts=current.planned_at.isoformat(),
            )

            if decision.escalate:
                tally.escalations += 1
                record = store.queue.enqueue(
                    played.session, decision.reason, created_at=current.planned_at
                )
                store.events.append(
                    EventKind.ESCALATION, record.to_dict(), ts=current.planned_at.isoformat()
                )
            break

    store.tallies.setdefault(day, DayTally()).add(tally)
    store.events.append(
        EventKind.REPORT,
        {"day": day.isoformat(), "tally": tally.to_dict()},
        ts=datetime.combine(day, time(23, 59)).isoformat(),
    )
    return tally


def _record_attempt(store: CampaignStore, attempt: CallAttempt) -> None:
    store.events.append(
        EventKind.SESSION_EVENT,
        {"event": "attempt", **attempt.to_dict()},
        ts=attempt.planned_at.isoformat(),
    )


def purge(store: CampaignStore, now: datetime, retention_days: int = 30) -> int:
    """Drop transcripts and escalations older than the retention horizon.

    Aggregate tallies survive, so reports stay available after the raw
    records are gone. Idempotent: a second purge at the same time removes
    nothing.
    """
    horizon = now - timedelta(days=retention_days)

    old_sessions = [sid for sid, ts in store.session_created.items() if ts < horizon]
    for sid in old_sessions:
        del store.sessions[sid]
        del store.session_created[sid]

    old_records = [r.record_id for r in store.queue.list() if r.created_at < horizon]
    for record_id in old_records:
        store.queue.drop(record_id)

    store.turns = [t for t in store.turns if t.ts >= horizon]

    def stale(record: EventRecord) -> bool:
        if record.kind not in (EventKind.SESSION_EVENT, EventKind.ESCALATION):
            return False
        return datetime.fromisoformat(record.ts) < horizon

    store.events.remove_where(stale)

    removed = len(old_sessions) + len(old_records)
    store.events.append(
        EventKind.PURGE,
        {"now": now.isoformat(), "removed": removed, "retention_days": retention_days},
        ts=now.isoformat(),
    )
    return removed


def report(store: CampaignStore, period_start: date, period_end: date) -> MetricsReport:
    """Aggregate day tallies over [period_start, period_end]."""
    total = DayTally()
    for day, tally in store.tallies.items():
        if period_start <= day <= period_end:
            total.add(tally)
    answered = total.completed + total.hangups
    return MetricsReport(
        period_start=period_start,
        period_end=period_end,
        total_turns=total.total_turns,
        fn_count=total.fn_count,
        fp_count=total.fp_count,
        fn_ratio=total.fn_count / total.total_turns if total.total_turns else 0.0,
        fp_ratio=total.fp_count / total.total_turns if total.total_turns else 0.0,
        calls_total=total.calls_total,
        hangup_rate=total.hangups / answered if answered else 0.0,
        failure_rate=total.failed_attempts / total.attempts if total.attempts else 0.0,
        attempts=total.attempts,
        completed=total.completed,
        hangups=total.hangups,
        failed_attempts=total.failed_attempts,
        escalations=total.escalations,
    )
