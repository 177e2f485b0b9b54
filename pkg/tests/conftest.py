from __future__ import annotations

from importlib import resources

import pytest

from cop.clock import FixedClock
from cop.evaluation import load_corpus
from cop.service import load_default_kbs


@pytest.fixture(scope="session")
def corpus():
    with resources.as_file(resources.files("cop") / "data" / "eval_tasks.json") as path:
        return load_corpus(path)


@pytest.fixture(scope="session")
def tasks_by_id(corpus):
    return {task.id: task for task in corpus}


@pytest.fixture(scope="session")
def kbs():
    return load_default_kbs()


@pytest.fixture()
def clock():
    return FixedClock()
