from datetime import datetime

import pytest

from symcall.dialog import DialogMachine, ScriptTable
from symcall.nlu import IntentClass, Lexicon, NLUResult
from symcall.popsim import TemplatePool
from symcall.triage import TriagePolicy

NOW = datetime(2020, 3, 2, 10, 0)


@pytest.fixture(scope="session")
def script() -> ScriptTable:
    return ScriptTable.bundled()


@pytest.fixture(scope="session")
def seed_lexicon() -> Lexicon:
    from importlib import resources

    return Lexicon.load(resources.files("symcall.data").joinpath("seed_lexicon.json"))


@pytest.fixture(scope="session")
def pool() -> TemplatePool:
    return TemplatePool.bundled()


@pytest.fixture()
def machine(script) -> DialogMachine:
    return DialogMachine(script)


@pytest.fixture()
def policy() -> TriagePolicy:
    return TriagePolicy()


def nlu_of(cls: IntentClass, p: float = 0.95) -> NLUResult:
    """Hand-built classifier result for driving the state machine in tests."""
    rest = (1.0 - p) / 2.0
    scores = {c: (p if c is cls else rest) for c in IntentClass}
    second = max(v for c, v in scores.items() if c is not cls)
    return NLUResult(scores=scores, top1=cls, p_top1=p, margin=p - second)
