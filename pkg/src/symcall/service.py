"""Service layer: the engine object binding all modules, event-log replay,
and the JSON-over-HTTP API the console talks to.

Persistence is an append-only JSON-lines event log plus a snapshot file.
Replaying the log rebuilds the reporting tallies, the escalation queue,
the labeling pool, and the lexicon (labels are replayed through the same
training update), so a store directory is fully portable.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from importlib import resources
from pathlib import Path
from typing import Optional

from .campaign import (
    CampaignStore,
    DayTally,
    MetricsReport,
    Subject,
    TurnTruth,
    purge,
    report,
    run_day,
)
from .config import Config
from .dialog import (
    CallSession,
    DialogMachine,
    ScriptTable,
    Speaker,
    Utterance,
    transcript_rows,
)
from .errors import (
    AlreadyReviewed,
    ConfigError,
    ContractViolation,
    InconsistentEvidence,
    NotFound,
)
from .events import EventKind, EventLog, EventRecord
from .nlu import IntentClass, LabeledExample, LabelSource, Lexicon, NLUResult, classify, train_update
from .popsim import Persona, PersonaStyle, TemplatePool, sample_population
from .spread import FeatureModel, Observation, SpreadPrior, posterior
from .triage import (
    EscalationReason,
    EscalationRecord,
    ReviewDecision,
    ReviewStatus,
    TriageDecision,
    Verdict,
    decide,
    select_batch,
)

EVENTS_FILE = "events.jsonl"
SNAPSHOT_FILE = "snapshot.json"
POPULATION_FILE = "population.jsonl"


def _approx_nlu(top1: str, p_top1: float) -> NLUResult:
    """Rebuild a classifier result from its logged summary (top1 + p)."""
    cls = IntentClass(top1)
    rest = max(0.0, (1.0 - p_top1)) / 2.0
    scores = {c: (p_top1 if c is cls else rest) for c in IntentClass}
    return NLUResult(scores=scores, top1=cls, p_top1=p_top1, margin=p_top1 - rest)


class Engine:
    """Single-campaign engine; all writes are serialized through one lock."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.script = ScriptTable.bundled()
        self.template_pool = TemplatePool.bundled()
        self.machine = DialogMachine(
            self.script,
            max_turns=self.config.policy.max_turns,
            max_reprompts=self.config.policy.max_reprompts,
        )
        self.lexicon = Lexicon.load(
            resources.files("symcall.data").joinpath("seed_lexicon.json")
        )
        self.store = CampaignStore()
        self.days_run = 0
        self.campaign_id: Optional[str] = None
        self._live_sessions: dict[str, CallSession] = {}
        self._live_counter = 0
        self._lock = threading.RLock()

    # -- clock ------------------------------------------------------------

    @property
    def clock(self) -> datetime:
        base = datetime.combine(self.config.campaign.start_date, time(0, 0))
        return base + timedelta(days=self.days_run)

    # -- subjects ----------------------------------------------------------

    def register_subject(
        self,
        subject_id: str,
        enrolled_at: Optional[date] = None,
        window_days: Optional[int] = None,
        phone_label: str = "",
    ) -> Subject:
        with self._lock:
            subject = Subject(
                subject_id=subject_id,
                enrolled_at=enrolled_at or self.clock.date(),
                window_days=window_days or self.config.campaign.window_days,
                phone_label=phone_label,
            )
            self.store.add_subject(subject)
            return subject

    def get_subject(self, subject_id: str) -> Subject:
        try:
            return self.store.subjects[subject_id]
        except KeyError:
            raise NotFound(f"no subject {subject_id!r}") from None

    # -- campaign ----------------------------------------------------------

    def create_campaign(self, overrides: Optional[dict] = None) -> str:
        """Initialize the simulated campaign population from the config."""
        with self._lock:
            if overrides:
                merged = self.config.to_dict()
                for key, value in overrides.items():
                    if isinstance(value, dict) and isinstance(merged.get(key), dict):
                        merged[key].update(value)
                    else:
                        merged[key] = value
                self.config = Config.from_dict(merged)
                self.machine = DialogMachine(
                    self.script,
                    max_turns=self.config.policy.max_turns,
                    max_reprompts=self.config.policy.max_reprompts,
                )
            for subject, persona in sample_population(self.config.population):
                self.store.add_subject(subject, persona)
            self.campaign_id = "c-0001"
            return self.campaign_id

    def run_one_day(self, seed: Optional[int] = None) -> DayTally:
        with self._lock:
            if self.campaign_id is None:
                raise NotFound("no campaign created")
            day = self.config.campaign.start_date + timedelta(days=self.days_run)
            tally = run_day(
                self.store,
                day,
                self.lexicon,
                self.config.policy,
                self.machine,
                self.template_pool,
                self.config.campaign,
                seed=self.config.seed if seed is None else seed,
            )
            self.days_run += 1
            return tally

    # -- interactive sessions ----------------------------------------------

    def open_session(self, subject_id: str, already_called_today: bool) -> tuple[str, str]:
        with self._lock:
            self.get_subject(subject_id)
            self._live_counter += 1
            session_id = f"live-{self._live_counter:04d}"
            session = self.machine.start_session(
                subject_id, already_called_today, self.clock, session_id=session_id
            )
            self._live_sessions[session_id] = session
            return session_id, session.transcript[0].text

    def session_utterance(self, session_id: str, text: str) -> dict:
        with self._lock:
            try:
                session = self._live_sessions[session_id]
            except KeyError:
                raise NotFound(f"no session {session_id!r}") from None
            nlu = classify(self.lexicon, text)
            session, reply = self.machine.advance(session, text, nlu)
            self._live_sessions[session_id] = session
            out = {
                "session_id": session_id,
                "reply": reply,
                "state": session.state.value,
                "terminal": session.is_terminal,
                "nlu": nlu.to_dict(),
                "slots": session.slots.to_dict(),
            }
            if session.is_terminal:
                decision = decide(session, self.config.policy)
                out["triage"] = {
                    "escalate": decision.escalate,
                    "reason": decision.reason.value if decision.reason else None,
                }
                self.store.sessions[session_id] = session
                self.store.session_created[session_id] = session.started_at
                if decision.escalate:
                    record = self.store.queue.enqueue(
                        session, decision.reason, created_at=self.clock
                    )
                    self.store.events.append(
                        EventKind.ESCALATION, record.to_dict(), ts=self.clock.isoformat()
                    )
                    out["triage"]["record_id"] = record.record_id
            return out

    def get_session(self, session_id: str) -> CallSession:
        session = self._live_sessions.get(session_id) or self.store.sessions.get(session_id)
        if session is None:
            raise NotFound(f"no session {session_id!r}")
        return session

    # -- escalations and labeling -------------------------------------------

    def escalations(self, status: Optional[str] = None) -> list[EscalationRecord]:
        parsed = ReviewStatus(status) if status else None
        return self.store.queue.list(parsed)

    def review(
        self,
        record_id: str,
        operator_id: str,
        verdict: str,
        labels: list[tuple[int, str]],
        reviewed_at: Optional[datetime] = None,
    ) -> dict:
        with self._lock:
            decision = ReviewDecision(
                operator_id=operator_id,
                verdict=Verdict(verdict),
                labels=tuple((int(i), IntentClass(c)) for i, c in labels),
                reviewed_at=reviewed_at or self.clock,
            )
            examples = self.store.queue.review(record_id, decision)
            self.store.events.append(
                EventKind.REVIEW,
                {
                    "record_id": record_id,
                    "operator_id": decision.operator_id,
                    "verdict": decision.verdict.value,
                    "labels": [[i, c.value] for i, c in decision.labels],
                    "reviewed_at": decision.reviewed_at.isoformat(),
                },
                ts=decision.reviewed_at.isoformat(),
            )
            version = self.lexicon.version
            if examples:
                version = self.add_labels(examples)
            return {
                "record_id": record_id,
                "review_status": ReviewStatus.REVIEWED.value,
                "labels_emitted": len(examples),
                "lexicon_version": version,
            }

    def hitl_batch(self, k: int) -> list[dict]:
        triples = self.store.labeling_pool()
        batch = select_batch([(u, n) for u, n, _ in triples], k)
        truth = {id(u): t for u, _, t in triples}
        items = []
        for utt, nlu in batch:
            turn: TurnTruth = truth[id(utt)]
            items.append(
                {
                    "text": utt.text,
                    "ts": utt.timestamp.isoformat(),
                    "p_top1": nlu.p_top1,
                    "uncertainty": 1.0 - nlu.p_top1,
                    "top1": nlu.top1.value,
                    "session_id": turn.session_id,
                    "seq": turn.seq,
                    "question_key": turn.question_key,
                }
            )
        return items

    def add_labels(self, examples: list[LabeledExample]) -> int:
        with self._lock:
            self.lexicon = train_update(self.lexicon, examples)
            self.store.events.append(
                EventKind.LABEL,
                {
                    "examples": [
                        {"text": e.text, "label": e.label.value, "source": e.source.value}
                        for e in examples
                    ],
                    "version": self.lexicon.version,
                },
                ts=self.clock.isoformat(),
            )
            return self.lexicon.version

    # -- metrics, spread, retention -----------------------------------------

    def metrics(self, period_start: date, period_end: date) -> MetricsReport:
        return report(self.store, period_start, period_end)

    def spread_estimate(
        self,
        observations: list[Observation],
        prior: Optional[SpreadPrior] = None,
        feature_model: Optional[FeatureModel] = None,
        grid_size: Optional[int] = None,
    ):
        return posterior(
            prior or self.config.prior,
            feature_model or self.config.feature_model,
            observations,
            grid_size=grid_size or self.config.grid_size,
        )

    def run_purge(self, now: Optional[datetime] = None) -> int:
        with self._lock:
            return purge(self.store, now or self.clock, self.config.retention_days)

    # -- persistence ----------------------------------------------------------

    def save(self, store_dir: str | Path) -> None:
        import json

        store_dir = Path(store_dir)
        store_dir.mkdir(parents=True, exist_ok=True)
        self.store.events.dump(store_dir / EVENTS_FILE)
        snapshot = {
            "config": self.config.to_dict(),
            "days_run": self.days_run,
            "campaign_id": self.campaign_id,
            "lexicon": {
                "counts": {c.value: t for c, t in self.lexicon.counts.items()},
                "lam": self.lexicon.lam,
                "version": self.lexicon.version,
            },
        }
        (store_dir / SNAPSHOT_FILE).write_text(
            json.dumps(snapshot, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        rows = [
            json.dumps({"subject_id": sid, **persona.to_dict()}, ensure_ascii=False)
            for sid, persona in sorted(self.store.personas.items())
        ]
        (store_dir / POPULATION_FILE).write_text(
            "\n".join(rows) + ("\n" if rows else ""), encoding="utf-8"
        )

    @classmethod
    def load(cls, store_dir: str | Path) -> "Engine":
        import json

        store_dir = Path(store_dir)
        snapshot_path = store_dir / SNAPSHOT_FILE
        config = None
        if snapshot_path.exists():
            snapshot = json.loads(snapshot_path.read_text(encoding="utf-8"))
            config = Config.from_dict(snapshot["config"])
        engine = cls(config)
        events_path = store_dir / EVENTS_FILE
        if events_path.exists():
            engine.replay(EventLog.load(events_path))
        if snapshot_path.exists():
            engine.days_run = int(snapshot.get("days_run", engine.days_run))
            engine.campaign_id = snapshot.get("campaign_id")
            population_path = store_dir / POPULATION_FILE
            if population_path.exists():
                for line in population_path.read_text(encoding="utf-8").splitlines():
                    if not line.strip():
                        continue
                    raw = json.loads(line)
                    sid = raw.pop("subject_id")
                    raw["style"] = PersonaStyle(raw["style"])
                    engine.store.personas[sid] = Persona(**raw)
        return engine

    def replay(self, log: EventLog) -> None:
        """Fold an event log into fresh state; see the module docstring for
        exactly which state replay covers."""
        for record in log:
            self.store.events.restore(record)
            payload = record.payload
            if record.kind is EventKind.SESSION_EVENT:
                event = payload.get("event")
                if event == "subject_registered":
                    raw = payload["subject"]
                    self.store.subjects[raw["subject_id"]] = Subject(
                        subject_id=raw["subject_id"],
                        enrolled_at=date.fromisoformat(raw["enrolled_at"]),
                        window_days=int(raw["window_days"]),
                        persona_ref=raw.get("persona_ref"),
                        phone_label=raw.get("phone_label", ""),
                    )
                elif event == "turn":
                    nlu = _approx_nlu(payload["class"], payload["p_top1"])
                    flags = payload["flags"]
                    self.store.turns.append(
                        TurnTruth(
                            session_id=payload["session_id"],
                            subject_id=payload["subject_id"],
                            seq=int(payload["seq"]),
                            question_key=payload["question_key"],
                            text=payload["text"],
                            ts=datetime.fromisoformat(record.ts),
                            nlu=nlu,
                            gt_intent=IntentClass(payload["gt_intent"]),
                            gt_clear=bool(payload["gt_clear"]),
                            noise=bool(payload["noise"]),
                            flag_slot_yes=bool(flags["slot_yes"]),
                            flag_uncertain=bool(flags["uncertain"]),
                            flag_cap=bool(flags["cap"]),
                            flag_tmax=bool(flags["tmax"]),
                        )
                    )
            elif record.kind is EventKind.ESCALATION:
                transcript = tuple(
                    Utterance(
                        speaker=Speaker(row["speaker"]),
                        text=row["text"],
                        timestamp=datetime.fromisoformat(row["ts"]),
                        nlu=_approx_nlu(row["class"], row["p_top1"])
                        if row["class"] is not None
                        else None,
                    )
                    for row in payload["transcript"]
                )
                restored = EscalationRecord(
                    record_id=payload["record_id"],
                    session_id=payload["session_id"],
                    subject_id=payload["subject_id"],
                    reason=EscalationReason(payload["reason"]),
                    transcript=transcript,
                    created_at=datetime.fromisoformat(payload["created_at"]),
                )
                self.store.queue.restore(restored)
            elif record.kind is EventKind.REVIEW:
                decision = ReviewDecision(
                    operator_id=payload["operator_id"],
                    verdict=Verdict(payload["verdict"]),
                    labels=tuple((int(i), IntentClass(c)) for i, c in payload["labels"]),
                    reviewed_at=datetime.fromisoformat(payload["reviewed_at"]),
                )
                self.store.queue.review(payload["record_id"], decision)
            elif record.kind is EventKind.LABEL:
                examples = [
                    LabeledExample(
                        text=raw["text"],
                        label=IntentClass(raw["label"]),
                        source=LabelSource(raw.get("source", "OPERATOR")),
                    )
                    for raw in payload["examples"]
                ]
                self.lexicon = train_update(self.lexicon, examples)
            elif record.kind is EventKind.REPORT:
                day = date.fromisoformat(payload["day"])
                self.store.tallies.setdefault(day, DayTally()).add(
                    DayTally.from_dict(payload["tally"])
                )
            elif record.kind is EventKind.PURGE:
                # Stale events are already absent from the persisted log, so
                # re-running the purge is a no-op that keeps idempotence.
                purge(
                    self.store,
                    datetime.fromisoformat(payload["now"]),
                    int(payload.get("retention_days", 30)),
                )


def create_app(engine: Optional[Engine] = None, assets_dir: Optional[str | Path] = None):
    """FastAPI application over one engine instance."""
    from fastapi import Body, FastAPI, Query, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="symcall", version="0.1.0")
    app.state.engine = engine or Engine()

    def eng() -> Engine:
        return app.state.engine

    @app.exception_handler(NotFound)
    async def _not_found(_: Request, exc: NotFound):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(AlreadyReviewed)
    async def _conflict(_: Request, exc: AlreadyReviewed):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ContractViolation)
    async def _contract(_: Request, exc: ContractViolation):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ConfigError)
    async def _config(_: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(InconsistentEvidence)
    async def _evidence(_: Request, exc: InconsistentEvidence):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/subjects")
    def register_subject(body: dict = Body(...)):
        subject = eng().register_subject(
            subject_id=str(body["subject_id"]),
            enrolled_at=date.fromisoformat(body["enrolled_at"])
            if body.get("enrolled_at")
            else None,
            window_days=body.get("window_days"),
            phone_label=body.get("phone_label", ""),
        )
        return subject.to_dict()

    @app.get("/subjects/{subject_id}")
    def get_subject(subject_id: str):
        return eng().get_subject(subject_id).to_dict()

    @app.post("/campaigns")
    def create_campaign(body: Optional[dict] = Body(None)):
        campaign_id = eng().create_campaign(body or {})
        return {"campaign_id": campaign_id, "config": eng().config.to_dict()}

    @app.post("/campaigns/{campaign_id}/run-day")
    def run_campaign_day(campaign_id: str, body: Optional[dict] = Body(None)):
        if campaign_id != eng().campaign_id:
            raise NotFound(f"no campaign {campaign_id!r}")
        seed = (body or {}).get("seed")
        tally = eng().run_one_day(seed=seed)
        return {"campaign_id": campaign_id, "day_index": eng().days_run - 1, **tally.to_dict()}

    @app.post("/sessions")
    def open_session(body: dict = Body(...)):
        session_id, opener = eng().open_session(
            str(body["subject_id"]), bool(body.get("already_called_today", False))
        )
        return {"session_id": session_id, "reply": opener}

    @app.post("/sessions/{session_id}/utterance")
    def session_utterance(session_id: str, body: dict = Body(...)):
        return eng().session_utterance(session_id, str(body["text"]))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = eng().get_session(session_id)
        return {
            "session_id": session_id,
            "state": session.state.value,
            "slots": session.slots.to_dict(),
            "turn_count": session.turn_count,
            "transcript": transcript_rows(session),
        }

    @app.get("/escalations")
    def list_escalations(status: Optional[str] = Query(None)):
        return {"escalations": [r.to_dict() for r in eng().escalations(status)]}

    @app.get("/escalations/{record_id}")
    def get_escalation(record_id: str):
        return eng().store.queue.get(record_id).to_dict()

    @app.post("/escalations/{record_id}/review")
    def review_escalation(record_id: str, body: dict = Body(...)):
        return eng().review(
            record_id,
            operator_id=str(body.get("operator_id", "operator")),
            verdict=str(body["verdict"]),
            labels=[(int(i), str(c)) for i, c in body.get("labels", [])],
        )

    @app.get("/hitl/batch")
    def hitl_batch(k: int = Query(..., ge=0)):
        return {"items": eng().hitl_batch(k), "lexicon_version": eng().lexicon.version}

    @app.post("/labels")
    def post_labels(body: dict = Body(...)):
        examples = [
            LabeledExample(text=str(raw["text"]), label=IntentClass(raw["label"]))
            for raw in body.get("labels", [])
        ]
        version = eng().add_labels(examples)
        return {"version": version, "examples_added": len(examples)}

    @app.get("/metrics")
    def metrics(
        date_from: str = Query(..., alias="from"), date_to: str = Query(..., alias="to")
    ):
        return eng().metrics(date.fromisoformat(date_from), date.fromisoformat(date_to)).to_dict()

    @app.post("/spread/estimate")
    def spread_estimate(body: dict = Body(...)):
        observations = [
            Observation(
                subject_id=str(raw["id"]),
                features={k: v for k, v in raw.get("features", {}).items()},
                confirmed=bool(raw.get("confirmed", False)),
            )
            for raw in body.get("observations", [])
        ]
        prior = None
        if "prior" in body and body["prior"]:
            p = body["prior"]
            prior = SpreadPrior(
                pi_T=float(p.get("pi_T", 0.1)),
                alpha=float(p.get("alpha", 1.0)),
                beta=float(p.get("beta", 9.0)),
            )
        fm = None
        if "feature_model" in body and body["feature_model"]:
            fm = FeatureModel(
                {
                    name: (float(v["s"]), float(v["r"]))
                    for name, v in body["feature_model"].items()
                }
            )
        result = eng().spread_estimate(
            observations, prior=prior, feature_model=fm, grid_size=body.get("G")
        )
        return result.to_dict(include_grid=bool(body.get("include_grid", True)))

    @app.post("/purge")
    def run_purge(body: Optional[dict] = Body(None)):
        now = None
        if body and body.get("now"):
            now = datetime.fromisoformat(body["now"])
        return {"removed": eng().run_purge(now)}

    if assets_dir is not None and Path(assets_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(assets_dir), html=True), name="console")

    return app
