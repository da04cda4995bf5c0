from datetime import date, datetime, timedelta

import pytest

from symcall.campaign import (
    AttemptResult,
    CampaignStore,
    DayTally,
    MetricsReport,
    Slot,
    Subject,
    purge,
    report,
    run_day,
    schedule,
)
from symcall.config import CampaignConfig
from symcall.errors import ContractViolation
from symcall.events import EventKind
from symcall.nlu import Lexicon
from symcall.popsim import Persona, PersonaStyle, PopulationConfig, sample_population
from symcall.triage import ReviewStatus

CFG = CampaignConfig()
START = CFG.start_date


def build_store(n_subjects=20, seed=3, **persona_overrides):
    store = CampaignStore()
    pairs = sample_population(PopulationConfig(n_subjects=n_subjects, seed=seed))
    for subject, persona in pairs:
        if persona_overrides:
            persona = Persona(
                style=persona.style,
                symptomatic_fever=persona.symptomatic_fever,
                symptomatic_resp=persona.symptomatic_resp,
                **persona_overrides,
            )
        store.add_subject(subject, persona)
    return store


def run_days(store, lexicon, machine, pool, policy, days, seed=3, start=START):
    tallies = []
    for offset in range(days):
        tallies.append(
            run_day(
                store, start + timedelta(days=offset), lexicon, policy, machine, pool,
                CFG, seed=seed,
            )
        )
    return tallies


class TestSchedule:
    def test_two_attempts_per_active_subject_day(self):
        subject = Subject("subj-1", enrolled_at=START, window_days=14)
        total = []
        for offset in range(20):
            total.extend(schedule([subject], START + timedelta(days=offset), CFG))
        assert len(total) == 28  # 2 per day for the 14-day window

    def test_expired_window_schedules_nothing(self):
        subject = Subject("subj-1", enrolled_at=START - timedelta(days=14), window_days=14)
        assert schedule([subject], START, CFG) == []

    def test_slots_and_hours(self):
        subject = Subject("subj-1", enrolled_at=START)
        am, pm = schedule([subject], START, CFG)
        assert am.slot is Slot.AM and am.planned_at.hour == CFG.am_hour
        assert pm.slot is Slot.PM and pm.planned_at.hour == CFG.pm_hour


class TestRunDay:
    def test_deterministic_event_log(self, seed_lexicon, machine, pool, policy):
        logs = []
        for _ in range(2):
            store = build_store()
            run_days(store, seed_lexicon, machine, pool, policy, days=2)
            logs.append("\n".join(r.to_json() for r in store.events))
        assert logs[0] == logs[1]

    def test_pm_call_regreets_after_completed_am_call(self, seed_lexicon, machine, pool, policy):
        store = build_store(n_subjects=6, hang_up_prob=0.0, conn_fail_prob=0.0, noise_prob=0.0)
        run_days(store, seed_lexicon, machine, pool, policy, days=1)
        pm_sessions = [s for sid, s in store.sessions.items() if "-PM-" in sid]
        assert pm_sessions
        for session in pm_sessions:
            assert session.transcript[0].text.startswith("Hello again")
        am_sessions = [s for sid, s in store.sessions.items() if "-AM-" in sid]
        for session in am_sessions:
            assert "minute to talk" in session.transcript[0].text

    def test_connection_failures_retry_up_to_chain_limit(self, seed_lexicon, machine, pool, policy):
        store = build_store(n_subjects=2, conn_fail_prob=1.0)
        tally = run_days(store, seed_lexicon, machine, pool, policy, days=1)[0]
        # Every dial fails: 2 subjects x 2 slots x (1 primary + 2 retries).
        assert tally.attempts == 12
        assert tally.failed_attempts == 12
        assert tally.calls_total == 4
        assert tally.failed_final == 4
        attempts = [
            r.payload for r in store.events
            if r.kind is EventKind.SESSION_EVENT and r.payload.get("event") == "attempt"
        ]
        retries = [a for a in attempts if a["retry_of"]]
        assert len(retries) == 8
        delays = {
            datetime.fromisoformat(a["planned_at"]).minute for a in retries
        }
        assert delays == {0}  # whole-hour retry delay keeps minutes at zero
        hours = sorted(
            datetime.fromisoformat(a["planned_at"]).hour for a in attempts
            if a["slot"] == "AM"
        )
        assert hours == [10, 10, 11, 11, 12, 12]

    def test_requires_personas(self, seed_lexicon, machine, pool, policy):
        store = CampaignStore()
        store.add_subject(Subject("subj-x", enrolled_at=START))
        with pytest.raises(ContractViolation):
            run_day(store, START, seed_lexicon, policy, machine, pool, CFG, seed=1)

    def test_escalations_recorded_with_pending_status(self, seed_lexicon, machine, pool, policy):
        store = build_store(n_subjects=30)
        run_days(store, seed_lexicon, machine, pool, policy, days=1)
        pending = store.queue.list(ReviewStatus.PENDING)
        assert pending
        escalation_events = [r for r in store.events if r.kind is EventKind.ESCALATION]
        assert len(escalation_events) == len(pending)

    def test_accounting_identity(self, seed_lexicon, machine, pool, policy):
        store = build_store(n_subjects=40)
        run_days(store, seed_lexicon, machine, pool, policy, days=3)
        rep = report(store, START, START + timedelta(days=2))
        assert rep.calls_total == rep.completed + rep.hangups + (
            rep.calls_total - rep.completed - rep.hangups
        )
        assert rep.fn_count + rep.fp_count <= rep.total_turns
        tally_failed_final = sum(t.failed_final for t in store.tallies.values())
        assert rep.calls_total == rep.completed + rep.hangups + tally_failed_final


class TestPurge:
    def build_aged_store(self, seed_lexicon, machine, pool, policy):
        store = build_store(n_subjects=10)
        run_days(store, seed_lexicon, machine, pool, policy, days=2)
        return store

    def test_purge_removes_only_stale_records(self, seed_lexicon, machine, pool, policy):
        store = self.build_aged_store(seed_lexicon, machine, pool, policy)
        sessions_before = len(store.sessions)
        records_before = len(store.queue.list())
        assert sessions_before and records_before

        # 31 days after the first day: day-1 records are stale, day-2 remain.
        now = datetime.combine(START, datetime.min.time()) + timedelta(days=31, hours=12)
        removed = purge(store, now, retention_days=30)
        assert removed > 0
        remaining_days = {ts.date() for ts in store.session_created.values()}
        assert remaining_days == {START + timedelta(days=1)}
        assert all(r.created_at >= now - timedelta(days=30) for r in store.queue.list())

    def test_fresh_records_survive(self, seed_lexicon, machine, pool, policy):
        store = self.build_aged_store(seed_lexicon, machine, pool, policy)
        before = len(store.sessions)
        now = datetime.combine(START, datetime.min.time()) + timedelta(days=29)
        assert purge(store, now, retention_days=30) == 0
        assert len(store.sessions) == before

    def test_purge_is_idempotent(self, seed_lexicon, machine, pool, policy):
        store = self.build_aged_store(seed_lexicon, machine, pool, policy)
        now = datetime.combine(START, datetime.min.time()) + timedelta(days=40)
        first = purge(store, now, retention_days=30)
        assert first > 0
        assert purge(store, now, retention_days=30) == 0

    def test_reports_survive_purge(self, seed_lexicon, machine, pool, policy):
        store = self.build_aged_store(seed_lexicon, machine, pool, policy)
        rep_before = report(store, START, START + timedelta(days=1))
        purge(store, datetime.combine(START, datetime.min.time()) + timedelta(days=60))
        rep_after = report(store, START, START + timedelta(days=1))
        assert rep_after == rep_before
        assert not store.sessions

    def test_purge_event_appended(self, seed_lexicon, machine, pool, policy):
        store = self.build_aged_store(seed_lexicon, machine, pool, policy)
        purge(store, datetime.combine(START, datetime.min.time()) + timedelta(days=60))
        kinds = [r.kind for r in store.events]
        assert kinds[-1] is EventKind.PURGE


class TestReport:
    def test_empty_period_is_zero_filled(self):
        store = CampaignStore()
        rep = report(store, date(2021, 1, 1), date(2021, 1, 31))
        assert rep.total_turns == 0
        assert rep.fp_ratio == 0.0
        assert rep.calls_total == 0

    def test_table_rendering(self):
        rep = MetricsReport(
            period_start=date(2020, 3, 1),
            period_end=date(2020, 3, 31),
            total_turns=4508,
            fn_count=0,
            fp_count=88,
            fn_ratio=0.0,
            fp_ratio=88 / 4508,
            calls_total=1200,
            hangup_rate=0.146,
            failure_rate=0.073,
        )
        table = rep.to_table()
        assert "False negative" in table and "False positive" in table
        assert "88" in table and "1.95%" in table

    def test_day_tally_roundtrip(self):
        tally = DayTally(attempts=5, fp_count=2, total_turns=40)
        assert DayTally.from_dict(tally.to_dict()) == tally
