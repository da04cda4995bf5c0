#!/usr/bin/env python3
"""Record API fixtures for the console test suite.

Boots the real engine, drives it through the documented endpoints, and
writes the JSON responses under frontend/tests/fixtures/ so the console
tests replay real payloads without the engine running.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from symcall.config import Config
from symcall.nlu import LabeledExample, IntentClass
from symcall.service import Engine, create_app

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def write(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {name}")


def main() -> None:
    config = Config.from_dict({"seed": 5, "population": {"n_subjects": 120}})
    engine = Engine(config)
    client = TestClient(create_app(engine))

    campaign_id = client.post("/campaigns", json={}).json()["campaign_id"]
    client.post(f"/campaigns/{campaign_id}/run-day", json={})

    start = config.campaign.start_date.isoformat()
    before = client.get("/metrics", params={"from": start, "to": start}).json()
    write("metrics_before.json", before)

    pending = client.get("/escalations", params={"status": "PENDING"}).json()
    write("escalations_pending.json", {"escalations": pending["escalations"][:6]})

    record = pending["escalations"][0]
    callee = [r for r in record["transcript"] if r["speaker"] == "CALLEE"]
    labels = [[callee[0]["seq"], callee[0]["class"] or "OTHER"]]
    reviewed = client.post(
        f"/escalations/{record['record_id']}/review",
        json={"operator_id": "op-1", "verdict": "OVERRIDE_CLEAR", "labels": labels},
    )
    write("review_success.json", reviewed.json())
    conflict = client.post(
        f"/escalations/{record['record_id']}/review",
        json={"operator_id": "op-2", "verdict": "OVERRIDE_CLEAR", "labels": []},
    )
    assert conflict.status_code == 409
    write("review_conflict.json", conflict.json())

    batch = client.get("/hitl/batch", params={"k": 12}).json()
    write("hitl_batch.json", batch)

    distinct = []
    for item in batch["items"]:
        if item["text"] not in [d["text"] for d in distinct]:
            distinct.append({"text": item["text"], "label": "NO"})
    labels_response = client.post("/labels", json={"labels": distinct[:2]})
    write("labels_response.json", labels_response.json())

    # The improvement pair: same population and seed, lexicon after labeling.
    improved = Engine(config)
    improved.create_campaign()
    improved.lexicon = engine.lexicon
    improved.run_one_day()
    after = improved.metrics(config.campaign.start_date, config.campaign.start_date)
    assert after.fp_ratio <= before["fp_ratio"], "labels must not raise FP"
    write("metrics_after.json", after.to_dict())

    spread_empty = client.post(
        "/spread/estimate",
        json={"observations": [], "prior": {"pi_T": 0.5, "alpha": 1, "beta": 9}, "G": 256},
    )
    write("spread_empty.json", spread_empty.json())

    spread_demo = client.post(
        "/spread/estimate",
        json={
            "observations": [
                {"id": "p1", "features": {"smell_taste_loss": 1}},
                {"id": "p2", "features": {"smell_taste_loss": 1}},
                {"id": "p3", "features": {"smell_taste_loss": 0}},
            ],
            "prior": {"pi_T": 0.5, "alpha": 1, "beta": 9},
            "G": 256,
        },
    )
    write("spread_demo.json", spread_demo.json())


if __name__ == "__main__":
    main()
