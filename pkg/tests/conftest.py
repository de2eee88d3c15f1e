import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bpkb.datasets import handle_order  # noqa: E402
from bpkb.services import KnowledgeBase  # noqa: E402

MINIMAL = "bp(p,s,e)\nseq(s,e,p)\nstart_event(s)\nend_event(e)\n"
ONE_TASK = "bp(p,s,e)\nstart_event(s)\nend_event(e)\ntask(a)\nseq(s,a,p)\nseq(a,e,p)\n"


@pytest.fixture(scope="session")
def ho():
    return handle_order()


@pytest.fixture
def minimal_kb():
    return KnowledgeBase.from_texts(MINIMAL)


@pytest.fixture
def one_task_kb():
    return KnowledgeBase.from_texts(ONE_TASK)
