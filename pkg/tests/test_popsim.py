import numpy as np
import pytest

from symcall.errors import ContractViolation
from symcall.nlu import IntentClass
from symcall.popsim import (
    ConnectionOutcome,
    HANG_UP_TRIGGER_TURNS,
    Persona,
    PersonaStyle,
    PopulationConfig,
    connection_outcome,
    generate_reply,
    respond,
    sample_population,
)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestSamplePopulation:
    def test_empty_population(self):
        assert sample_population(PopulationConfig(n_subjects=0)) == []

    def test_same_seed_identical(self):
        cfg = PopulationConfig(n_subjects=50, seed=42)
        assert sample_population(cfg) == sample_population(cfg)

    def test_symptomatic_count_within_binomial_bound(self):
        cfg = PopulationConfig(n_subjects=10_000, symptom_prevalence=0.02, seed=1)
        pairs = sample_population(cfg)
        count = sum(1 for _, p in pairs if p.symptomatic)
        assert 200 - 45 <= count <= 200 + 45

    def test_verbose_fraction_within_bound(self):
        cfg = PopulationConfig(n_subjects=10_000, verbose_fraction=0.3, seed=2)
        pairs = sample_population(cfg)
        count = sum(1 for _, p in pairs if p.style is PersonaStyle.VERBOSE)
        sigma = (10_000 * 0.3 * 0.7) ** 0.5
        assert abs(count - 3000) <= 3 * sigma

    def test_subjects_carry_window(self):
        cfg = PopulationConfig(n_subjects=3, window_days=10)
        for subject, _ in sample_population(cfg):
            assert subject.window_days == 10


class TestRespond:
    def test_cooperative_asymptomatic_fever_answer(self, pool):
        persona = Persona(PersonaStyle.COOPERATIVE, noise_prob=0.0)
        texts = {respond(persona, "FEVER_Q", pool, rng(i)) for i in range(40)}
        assert texts <= set(pool.templates(PersonaStyle.COOPERATIVE, "FEVER_Q", "NO"))
        assert "No." in texts

    def test_verbose_asymptomatic_fever_includes_hard_answer(self, pool):
        persona = Persona(PersonaStyle.VERBOSE, noise_prob=0.0)
        texts = {respond(persona, "FEVER_Q", pool, rng(i)) for i in range(80)}
        assert (
            "Yeah. Nothing like that. I'll let you know if there's anything like that. "
            "Oh. Too stressful." in texts
        )

    def test_verbose_symptomatic_resp_affirms_cough(self, pool):
        persona = Persona(PersonaStyle.VERBOSE, symptomatic_resp=True, noise_prob=0.0)
        for i in range(30):
            reply = generate_reply(persona, "RESP_Q", pool, rng(i))
            assert reply.intent is IntentClass.YES
            assert reply.clear
            text = reply.text.lower()
            assert "cough" in text or "breath" in text or "chest" in text

    def test_unknown_question_key_rejected(self, pool):
        with pytest.raises(ContractViolation):
            respond(Persona(PersonaStyle.COOPERATIVE), "WRONG_KEY", pool, rng())

    def test_noise_preserves_ground_truth(self, pool):
        persona = Persona(PersonaStyle.VERBOSE, symptomatic_fever=True, noise_prob=1.0)
        reply = generate_reply(persona, "FEVER_Q", pool, rng())
        assert reply.noise
        assert reply.intent is IntentClass.OTHER
        assert not reply.clear
        assert persona.symptomatic_fever  # truth untouched by rendering

    def test_deterministic_under_fixed_seed(self, pool):
        persona = Persona(PersonaStyle.VERBOSE)
        a = [respond(persona, "RESP_Q", pool, rng(9)) for _ in range(5)]
        b = [respond(persona, "RESP_Q", pool, rng(9)) for _ in range(5)]
        assert a == b


class TestConnectionOutcome:
    def test_certain_failure(self):
        persona = Persona(PersonaStyle.COOPERATIVE, conn_fail_prob=1.0)
        for i in range(20):
            assert connection_outcome(persona, rng(i)) == ConnectionOutcome(answered=False)

    def test_no_hangups_when_rate_zero(self):
        persona = Persona(PersonaStyle.COOPERATIVE, hang_up_prob=0.0, conn_fail_prob=0.0)
        for i in range(20):
            outcome = connection_outcome(persona, rng(i))
            assert outcome.answered and outcome.hang_up_before_turn is None

    def test_trigger_turn_within_guaranteed_range(self):
        persona = Persona(PersonaStyle.COOPERATIVE, hang_up_prob=0.9, conn_fail_prob=0.0)
        turns = {
            outcome.hang_up_before_turn
            for outcome in (connection_outcome(persona, rng(i)) for i in range(80))
            if outcome.hang_up_before_turn is not None
        }
        assert turns <= set(range(1, HANG_UP_TRIGGER_TURNS + 1))
        assert len(turns) > 1  # hang-ups land at several depths

    def test_certain_hangup_fires_immediately(self):
        persona = Persona(PersonaStyle.COOPERATIVE, hang_up_prob=1.0, conn_fail_prob=0.0)
        for i in range(10):
            assert connection_outcome(persona, rng(i)).hang_up_before_turn == 1

    def test_default_rates_converge(self):
        """3-sigma binomial check on the default connection/hang-up rates."""
        persona = Persona(PersonaStyle.COOPERATIVE)
        generator = np.random.default_rng(123)
        n = 30_000
        failures = 0
        hangups = 0
        answered = 0
        for _ in range(n):
            outcome = connection_outcome(persona, generator)
            if not outcome.answered:
                failures += 1
            else:
                answered += 1
                if outcome.hang_up_before_turn is not None:
                    hangups += 1
        fail_sigma = (n * 0.073 * 0.927) ** 0.5
        assert abs(failures - n * 0.073) <= 3 * fail_sigma
        hang_sigma = (answered * 0.146 * 0.854) ** 0.5
        assert abs(hangups - answered * 0.146) <= 3 * hang_sigma
