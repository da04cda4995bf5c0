"""Engine configuration: one document wiring every module's knobs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import ConfigError
from .popsim import PopulationConfig
from .spread import DEFAULT_FEATURE_MODEL, FeatureModel, SpreadPrior
from .triage import TriagePolicy


@dataclass(frozen=True)
class CampaignConfig:
    window_days: int = 14
    am_hour: int = 10
    pm_hour: int = 16
    retry_delay_minutes: int = 60
    max_retries: int = 2
    start_date: date = date(2020, 3, 2)

    def __post_init__(self) -> None:
        if self.window_days < 1:
            raise ConfigError("window_days must be at least 1")
        if not 0 <= self.am_hour < self.pm_hour <= 23:
            raise ConfigError("call hours must satisfy 0 <= am < pm <= 23")
        if self.max_retries < 0 or self.retry_delay_minutes <= 0:
            raise ConfigError("retry policy out of range")


@dataclass(frozen=True)
class Config:
    seed: int = 0
    policy: TriagePolicy = field(default_factory=TriagePolicy)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    population: PopulationConfig = field(default_factory=lambda: PopulationConfig(n_subjects=100))
    prior: SpreadPrior = field(default_factory=SpreadPrior)
    feature_model: FeatureModel = DEFAULT_FEATURE_MODEL
    grid_size: int = 1024
    retention_days: int = 30

    def __post_init__(self) -> None:
        if self.retention_days < 1:
            raise ConfigError("retention_days must be at least 1")
        if self.grid_size < 64:
            raise ConfigError("grid_size must be at least 64")

    @classmethod
    def from_dict(cls, raw: dict) -> "Config":
        seed = int(raw.get("seed", 0))
        campaign_raw = dict(raw.get("campaign", {}))
        if "start_date" in campaign_raw:
            campaign_raw["start_date"] = date.fromisoformat(campaign_raw["start_date"])
        campaign = CampaignConfig(**campaign_raw)

        population_raw = dict(raw.get("population", {}))
        population_raw.setdefault("n_subjects", 100)
        population_raw.setdefault("seed", seed)
        population_raw.setdefault("window_days", campaign.window_days)
        population_raw.setdefault("enrolled_at", campaign.start_date)
        if isinstance(population_raw["enrolled_at"], str):
            population_raw["enrolled_at"] = date.fromisoformat(population_raw["enrolled_at"])
        population = PopulationConfig(**population_raw)

        spread_raw = dict(raw.get("spread", {}))
        prior = SpreadPrior(
            pi_T=float(spread_raw.get("pi_T", 0.1)),
            alpha=float(spread_raw.get("alpha", 1.0)),
            beta=float(spread_raw.get("beta", 9.0)),
        )
        if "features" in spread_raw:
            fm = FeatureModel(
                {name: (float(v["s"]), float(v["r"])) for name, v in spread_raw["features"].items()}
            )
        else:
            fm = DEFAULT_FEATURE_MODEL

        return cls(
            seed=seed,
            policy=TriagePolicy(**raw.get("triage", {})),
            campaign=campaign,
            population=population,
            prior=prior,
            feature_model=fm,
            grid_size=int(spread_raw.get("grid_size", 1024)),
            retention_days=int(raw.get("retention_days", 30)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "triage": {
                "tau": self.policy.tau,
                "max_reprompts": self.policy.max_reprompts,
                "max_turns": self.policy.max_turns,
            },
            "campaign": {
                "window_days": self.campaign.window_days,
                "am_hour": self.campaign.am_hour,
                "pm_hour": self.campaign.pm_hour,
                "retry_delay_minutes": self.campaign.retry_delay_minutes,
                "max_retries": self.campaign.max_retries,
                "start_date": self.campaign.start_date.isoformat(),
            },
            "population": {
                "n_subjects": self.population.n_subjects,
                "verbose_fraction": self.population.verbose_fraction,
                "symptom_prevalence": self.population.symptom_prevalence,
                "seed": self.population.seed,
                "noise_prob": self.population.noise_prob,
                "verbose_noise_prob": self.population.verbose_noise_prob,
                "hang_up_prob": self.population.hang_up_prob,
                "conn_fail_prob": self.population.conn_fail_prob,
                "window_days": self.population.window_days,
                "enrolled_at": self.population.enrolled_at.isoformat(),
            },
            "spread": {
                "pi_T": self.prior.pi_T,
                "alpha": self.prior.alpha,
                "beta": self.prior.beta,
                "grid_size": self.grid_size,
                "features": {
                    name: {"s": s, "r": r} for name, (s, r) in self.feature_model.features.items()
                },
            },
            "retention_days": self.retention_days,
        }
