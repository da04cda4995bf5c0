"""Deterministic finite state machine for the symptom-check call script.

The conversation shape: the opener greets and asks for a minute of the
callee's time; whatever the callee says first is treated as a greeting back,
answered with the short re-greeting, and only then are the yes/no answers
interpreted, one per question (consent, fever, respiratory). A follow-up
call on the same day skips the long opener and starts at the re-greeting.

All session values are immutable; ``advance`` and ``hang_up`` return new
sessions, so the machine is safe to drive concurrently across sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ContractViolation
from .nlu import IntentClass, NLUResult


class TriState(str, Enum):
    YES = "YES"
    NO = "NO"
    UNKNOWN = "UNKNOWN"


class Speaker(str, Enum):
    SYSTEM = "SYSTEM"
    CALLEE = "CALLEE"


class DialogState(str, Enum):
    GREETING = "GREETING"
    REGREETING = "REGREETING"
    CONSENT_WAIT = "CONSENT_WAIT"
    FEVER_Q = "FEVER_Q"
    RESP_Q = "RESP_Q"
    REPROMPT = "REPROMPT"
    SYMPTOM_DETAIL_Q = "SYMPTOM_DETAIL_Q"
    CLOSING = "CLOSING"
    COMPLETED = "COMPLETED"
    HANGUP = "HANGUP"
    ABORTED_MAX_TURNS = "ABORTED_MAX_TURNS"


TERMINAL_STATES = frozenset(
    {DialogState.COMPLETED, DialogState.HANGUP, DialogState.ABORTED_MAX_TURNS}
)

SCRIPT_KEYS = (
    "GREETING",
    "REGREETING",
    "CONSENT_Q",
    "FEVER_Q",
    "RESP_Q",
    "REPROMPT",
    "DETAIL_Q",
    "CLOSING",
)

# Script key of the prompt the callee is currently responding to.
_PENDING_KEY = {
    DialogState.GREETING: "GREETING",
    DialogState.REGREETING: "REGREETING",
    DialogState.CONSENT_WAIT: "CONSENT_Q",
    DialogState.FEVER_Q: "FEVER_Q",
    DialogState.RESP_Q: "RESP_Q",
    DialogState.SYMPTOM_DETAIL_Q: "DETAIL_Q",
}

# Reprompt counters are shared per question, not per state.
_REPROMPT_GROUP = {
    DialogState.REGREETING: "CONSENT",
    DialogState.CONSENT_WAIT: "CONSENT",
    DialogState.FEVER_Q: "FEVER",
    DialogState.RESP_Q: "RESP",
}

_UTTERANCE_SPACING = timedelta(seconds=20)


@dataclass(frozen=True)
class ScriptTable:
    """Versioned key -> utterance mapping loaded from an external file."""

    lines: dict[str, str]
    version: int = 1
    language: str = "en"

    def __post_init__(self) -> None:
        missing = [k for k in SCRIPT_KEYS if k not in self.lines]
        if missing:
            raise ConfigError(f"script table missing keys: {missing}")

    def __getitem__(self, key: str) -> str:
        return self.lines[key]

    @classmethod
    def load(cls, path: str | Path) -> "ScriptTable":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            lines=dict(raw["lines"]),
            version=int(raw.get("version", 1)),
            language=str(raw.get("language", "en")),
        )

    @classmethod
    def bundled(cls) -> "ScriptTable":
        raw = json.loads(
            resources.files("symcall.data").joinpath("script_en.json").read_text("utf-8")
        )
        return cls(lines=dict(raw["lines"]), version=int(raw["version"]), language=raw["language"])


@dataclass(frozen=True)
class Slots:
    fever: TriState = TriState.UNKNOWN
    respiratory: TriState = TriState.UNKNOWN
    symptom_detail: Optional[str] = None

    def __post_init__(self) -> None:
        if self.symptom_detail and self.respiratory is not TriState.YES:
            raise ContractViolation("symptom detail requires a respiratory report")

    def to_dict(self) -> dict:
        return {
            "fever": self.fever.value,
            "respiratory": self.respiratory.value,
            "symptom_detail": self.symptom_detail,
        }


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str
    timestamp: datetime
    nlu: Optional[NLUResult] = None

    def __post_init__(self) -> None:
        if self.speaker is Speaker.SYSTEM and self.nlu is not None:
            raise ContractViolation("system utterances carry no NLU result")


@dataclass(frozen=True)
class CallSession:
    session_id: str
    subject_id: str
    state: DialogState
    slots: Slots
    transcript: tuple[Utterance, ...]
    turn_count: int
    reprompts: dict[str, int]
    started_at: datetime
    outcome: Optional[DialogState] = None
    consent_refused: bool = False
    closing_delivered: bool = False
    asked_questions: frozenset[str] = field(default_factory=frozenset)
    reprompt_cap_hit: bool = False

    @property
    def is_terminal(self) -> bool:
        return self.state in TERMINAL_STATES

    @property
    def pending_key(self) -> str:
        """Script key of the prompt awaiting a callee reply."""
        if self.is_terminal:
            raise ContractViolation("terminal session has no pending prompt")
        return _PENDING_KEY[self.state]

    def callee_turns(self) -> list[Utterance]:
        return [u for u in self.transcript if u.speaker is Speaker.CALLEE]

    def min_p_top1(self) -> float:
        probs = [u.nlu.p_top1 for u in self.transcript if u.nlu is not None]
        return min(probs) if probs else 1.0


class DialogMachine:
    """Binds the script table and turn limits; all methods are pure."""

    def __init__(self, script: ScriptTable, max_turns: int = 12, max_reprompts: int = 2):
        if max_turns < 5:
            raise ConfigError("max_turns must be at least the cooperative path length")
        if max_reprompts < 0:
            raise ConfigError("max_reprompts must be non-negative")
        self.script = script
        self.max_turns = max_turns
        self.max_reprompts = max_reprompts

    def start_session(
        self,
        subject_id: str,
        already_called_today: bool,
        now: datetime,
        session_id: str = "s-0",
    ) -> CallSession:
        state = DialogState.REGREETING if already_called_today else DialogState.GREETING
        opener = self.script["REGREETING" if already_called_today else "GREETING"]
        first = Utterance(Speaker.SYSTEM, opener, now)
        return CallSession(
            session_id=session_id,
            subject_id=subject_id,
            state=state,
            slots=Slots(),
            transcript=(first,),
            turn_count=0,
            reprompts={},
            started_at=now,
        )

    def advance(
        self, session: CallSession, callee_text: str, nlu: NLUResult
    ) -> tuple[CallSession, Optional[str]]:
        """Consume one callee utterance and emit the next system line, if any."""
        if session.is_terminal:
            raise ContractViolation(f"advance on terminal state {session.state.value}")

        ts = session.started_at + _UTTERANCE_SPACING * len(session.transcript)
        callee = Utterance(Speaker.CALLEE, callee_text, ts, nlu=nlu)
        transcript = session.transcript + (callee,)
        turn_count = session.turn_count + 1
        slots = session.slots
        reprompts = dict(session.reprompts)
        asked = set(session.asked_questions)
        cap_hit = session.reprompt_cap_hit
        consent_refused = session.consent_refused
        closing_delivered = session.closing_delivered
        state = session.state
        reply_key: Optional[str] = None
        outcome: Optional[DialogState] = None

        def ask_fever() -> tuple[DialogState, str]:
            asked.add("FEVER")
            return DialogState.FEVER_Q, "FEVER_Q"

        def ask_resp() -> tuple[DialogState, str]:
            asked.add("RESP")
            return DialogState.RESP_Q, "RESP_Q"

        def close() -> tuple[DialogState, str]:
            nonlocal closing_delivered, outcome
            closing_delivered = True
            outcome = DialogState.COMPLETED
            return DialogState.COMPLETED, "CLOSING"

        def reprompt(question: str) -> tuple[DialogState, Optional[str]]:
            nonlocal cap_hit
            used = reprompts.get(question, 0)
            if used < self.max_reprompts:
                reprompts[question] = used + 1
                return state, "REPROMPT"
            cap_hit = True
            return _after_cap(question)

        def _after_cap(question: str) -> tuple[DialogState, Optional[str]]:
            # Question abandoned: slot stays UNKNOWN and the dialog moves on.
            if question == "CONSENT":
                return ask_fever()
            if question == "FEVER":
                return ask_resp()
            return close()  # RESP unknown: nothing to detail, wrap up

        if state is DialogState.GREETING:
            # First callee utterance is a greeting back, never an answer.
            state, reply_key = DialogState.CONSENT_WAIT, "REGREETING"
        elif state in (DialogState.REGREETING, DialogState.CONSENT_WAIT):
            if nlu.top1 is IntentClass.YES:
                state, reply_key = ask_fever()
            elif nlu.top1 is IntentClass.NO:
                consent_refused = True
                state, reply_key = close()
            else:
                state, reply_key = reprompt("CONSENT")
        elif state is DialogState.FEVER_Q:
            if nlu.top1 in (IntentClass.YES, IntentClass.NO):
                slots = replace(slots, fever=TriState(nlu.top1.value))
                state, reply_key = ask_resp()
            else:
                state, reply_key = reprompt("FEVER")
        elif state is DialogState.RESP_Q:
            if nlu.top1 is IntentClass.YES:
                slots = replace(slots, respiratory=TriState.YES)
                state, reply_key = DialogState.SYMPTOM_DETAIL_Q, "DETAIL_Q"
            elif nlu.top1 is IntentClass.NO:
                slots = replace(slots, respiratory=TriState.NO)
                state, reply_key = close()
            else:
                state, reply_key = reprompt("RESP")
        elif state is DialogState.SYMPTOM_DETAIL_Q:
            slots = replace(slots, symptom_detail=callee_text)
            state, reply_key = close()
        else:  # pragma: no cover - closed state set
            raise ContractViolation(f"no transition from {state.value}")

        if state not in TERMINAL_STATES and turn_count >= self.max_turns:
            state = DialogState.ABORTED_MAX_TURNS
            outcome = DialogState.ABORTED_MAX_TURNS
            reply_key = None

        reply = self.script[reply_key] if reply_key else None
        if reply is not None:
            transcript = transcript + (
                Utterance(Speaker.SYSTEM, reply, ts + _UTTERANCE_SPACING),
            )

        updated = replace(
            session,
            state=state,
            slots=slots,
            transcript=transcript,
            turn_count=turn_count,
            reprompts=reprompts,
            outcome=outcome if outcome else session.outcome,
            consent_refused=consent_refused,
            closing_delivered=closing_delivered,
            asked_questions=frozenset(asked),
            reprompt_cap_hit=cap_hit,
        )
        return updated, reply

    def hang_up(self, session: CallSession) -> CallSession:
        """Callee hangs up; slots are frozen as they stand."""
        if session.is_terminal:
            raise ContractViolation(f"hang_up on terminal state {session.state.value}")
        return replace(session, state=DialogState.HANGUP, outcome=DialogState.HANGUP)


def transcript_rows(session: CallSession) -> list[dict]:
    """Flatten a transcript to the JSON-lines export shape."""
    rows = []
    for seq, utt in enumerate(session.transcript):
        rows.append(
            {
                "session_id": session.session_id,
                "seq": seq,
                "speaker": utt.speaker.value,
                "text": utt.text,
                "ts": utt.timestamp.isoformat(),
                "class": utt.nlu.top1.value if utt.nlu else None,
                "p_top1": utt.nlu.p_top1 if utt.nlu else None,
            }
        )
    return rows
