"""Synthetic callee population with ground truth.

Personas come in two interaction styles: cooperative callees answer the
script tersely, verbose ones wrap their answer in longer phrasings that are
harder on the classifier. Every generated reply carries its intended class
and whether it was a clear on-script answer, so the campaign can score
turn-level errors against truth the engine never sees.

Connection failures and hang-ups are drawn when the call connects: a call
destined to hang up is assigned the callee turn before which it ends, which
pins the per-call hang-up frequency to the configured rate regardless of
how long individual dialogs run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractViolation
from .nlu import IntentClass


class PersonaStyle(str, Enum):
    COOPERATIVE = "COOPERATIVE"
    VERBOSE = "VERBOSE"


# Every answered call offers at least this many callee turns before it can
# complete (consent, fever, respiratory), so a hang-up trigger drawn in
# 1..3 always fires and the per-call hang-up rate stays calibrated.
HANG_UP_TRIGGER_TURNS = 3

# Nominal script length used for the per-turn hazard shape.
_NOMINAL_TURNS = 5


@dataclass(frozen=True)
class Persona:
    style: PersonaStyle
    symptomatic_fever: bool = False
    symptomatic_resp: bool = False
    hang_up_prob: float = 0.146
    conn_fail_prob: float = 0.073
    noise_prob: float = 0.05

    def __post_init__(self) -> None:
        for name in ("hang_up_prob", "conn_fail_prob", "noise_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")

    @property
    def symptomatic(self) -> bool:
        return self.symptomatic_fever or self.symptomatic_resp

    def to_dict(self) -> dict:
        return {
            "style": self.style.value,
            "symptomatic_fever": self.symptomatic_fever,
            "symptomatic_resp": self.symptomatic_resp,
            "hang_up_prob": self.hang_up_prob,
            "conn_fail_prob": self.conn_fail_prob,
            "noise_prob": self.noise_prob,
        }


@dataclass(frozen=True)
class GeneratedReply:
    text: str
    intent: IntentClass
    clear: bool
    noise: bool


@dataclass(frozen=True)
class TemplatePool:
    """(style, question, answer) -> utterance templates, plus noise fillers."""

    cells: dict[tuple[str, str, str], tuple[str, ...]]
    noise: dict[str, tuple[str, ...]]
    version: int = 1

    def __post_init__(self) -> None:
        for key, templates in self.cells.items():
            if not templates:
                raise ConfigError(f"template cell {key} is empty")
        for style, templates in self.noise.items():
            if not templates:
                raise ConfigError(f"noise pool for {style} is empty")

    def templates(self, style: PersonaStyle, question: str, answer: str) -> tuple[str, ...]:
        try:
            return self.cells[(style.value, question, answer)]
        except KeyError:
            raise ContractViolation(
                f"no templates for ({style.value}, {question}, {answer})"
            ) from None

    @classmethod
    def _from_raw(cls, raw: dict) -> "TemplatePool":
        cells = {}
        for style, questions in raw["cells"].items():
            for question, answers in questions.items():
                for answer, templates in answers.items():
                    cells[(style, question, answer)] = tuple(templates)
        noise = {style: tuple(items) for style, items in raw["noise"].items()}
        return cls(cells=cells, noise=noise, version=int(raw.get("version", 1)))

    @classmethod
    def load(cls, path: str | Path) -> "TemplatePool":
        return cls._from_raw(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def bundled(cls) -> "TemplatePool":
        raw = json.loads(
            resources.files("symcall.data").joinpath("templates_en.json").read_text("utf-8")
        )
        return cls._from_raw(raw)


@dataclass(frozen=True)
class PopulationConfig:
    n_subjects: int
    verbose_fraction: float = 0.3
    symptom_prevalence: float = 0.02
    seed: int = 0
    noise_prob: float = 0.05
    verbose_noise_prob: Optional[float] = None
    hang_up_prob: float = 0.146
    conn_fail_prob: float = 0.073
    window_days: int = 14
    enrolled_at: date = date(2020, 3, 2)

    def __post_init__(self) -> None:
        if self.n_subjects < 0:
            raise ConfigError("n_subjects must be non-negative")
        for name in ("verbose_fraction", "symptom_prevalence", "noise_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if self.window_days < 1:
            raise ConfigError("window_days must be at least 1")


def sample_population(config: PopulationConfig):
    """Draw (Subject, Persona) pairs; deterministic for a given seed."""
    from .campaign import Subject  # local import to avoid a module cycle

    rng = np.random.default_rng([config.seed, 0x5EED])
    pairs = []
    for i in range(config.n_subjects):
        style = (
            PersonaStyle.VERBOSE
            if rng.random() < config.verbose_fraction
            else PersonaStyle.COOPERATIVE
        )
        fever = resp = False
        if rng.random() < config.symptom_prevalence:
            kind = rng.random()
            fever = kind < 0.55
            resp = kind >= 0.35  # 0.35..0.55 carries both symptoms
        noise = config.noise_prob
        if style is PersonaStyle.VERBOSE and config.verbose_noise_prob is not None:
            noise = config.verbose_noise_prob
        persona = Persona(
            style=style,
            symptomatic_fever=fever,
            symptomatic_resp=resp,
            hang_up_prob=config.hang_up_prob,
            conn_fail_prob=config.conn_fail_prob,
            noise_prob=noise,
        )
        subject_id = f"subj-{i:05d}"
        subject = Subject(
            subject_id=subject_id,
            enrolled_at=config.enrolled_at,
            window_days=config.window_days,
            persona_ref=subject_id,
            phone_label=f"tel-{i:05d}",
        )
        pairs.append((subject, persona))
    return pairs


def _truth_for(persona: Persona, question_key: str) -> tuple[str, IntentClass, bool]:
    """Template cell answer key, intended class, and clear-answer flag."""
    if question_key == "GREETING":
        return "ACK", IntentClass.OTHER, False
    if question_key in ("REGREETING", "CONSENT_Q"):
        return "YES", IntentClass.YES, True
    if question_key == "FEVER_Q":
        answer = "YES" if persona.symptomatic_fever else "NO"
        return answer, IntentClass(answer), True
    if question_key == "RESP_Q":
        answer = "YES" if persona.symptomatic_resp else "NO"
        return answer, IntentClass(answer), True
    if question_key == "DETAIL_Q":
        return "TEXT", IntentClass.YES, False
    raise ContractViolation(f"unknown question key {question_key!r}")


def generate_reply(
    persona: Persona,
    question_key: str,
    pool: TemplatePool,
    rng: np.random.Generator,
) -> GeneratedReply:
    """Instantiate a reply, possibly replaced by an off-script filler.

    The noise replacement changes only the rendering; the persona's ground
    truth is untouched, which is exactly what produces classifier errors.
    """
    answer, intent, clear = _truth_for(persona, question_key)
    if rng.random() < persona.noise_prob:
        fillers = pool.noise[persona.style.value]
        text = fillers[int(rng.integers(len(fillers)))]
        return GeneratedReply(text=text, intent=IntentClass.OTHER, clear=False, noise=True)
    templates = pool.templates(persona.style, question_key, answer)
    text = templates[int(rng.integers(len(templates)))]
    return GeneratedReply(text=text, intent=intent, clear=clear, noise=False)


def respond(
    persona: Persona, question_key: str, pool: TemplatePool, rng: np.random.Generator
) -> str:
    """Reply text only; see generate_reply for the annotated form."""
    return generate_reply(persona, question_key, pool, rng).text


@dataclass(frozen=True)
class ConnectionOutcome:
    answered: bool
    hang_up_before_turn: Optional[int] = None


def connection_outcome(persona: Persona, rng: np.random.Generator) -> ConnectionOutcome:
    """Resolve one dial attempt.

    A connected call destined to hang up gets the callee turn before which
    the callee will hang up, drawn from the per-turn geometric hazard shape
    truncated to the turns every dialog path offers.
    """
    if rng.random() < persona.conn_fail_prob:
        return ConnectionOutcome(answered=False)
    if persona.hang_up_prob > 0 and rng.random() < persona.hang_up_prob:
        hazard = 1.0 - (1.0 - persona.hang_up_prob) ** (1.0 / _NOMINAL_TURNS)
        weights = np.array(
            [(1.0 - hazard) ** (k - 1) * hazard for k in range(1, HANG_UP_TRIGGER_TURNS + 1)]
        )
        weights /= weights.sum()
        turn = 1 + int(rng.choice(HANG_UP_TRIGGER_TURNS, p=weights))
        return ConnectionOutcome(answered=True, hang_up_before_turn=turn)
    return ConnectionOutcome(answered=True)
