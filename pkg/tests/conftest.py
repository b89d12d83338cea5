import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsi.logic import parse_program

EVEN_TEXT = "even(0). even(s(s(X))) :- even(X)."
PROP_TEXT = "p :- q. q. r :- p, not s."
CONJ_TEXT = "c(0). d(0). c(s(X)) :- c(X), d(X). d(s(X)) :- d(X)."


@pytest.fixture(scope="session")
def even_program():
    return parse_program(EVEN_TEXT)


@pytest.fixture(scope="session")
def prop_program():
    return parse_program(PROP_TEXT)


@pytest.fixture(scope="session")
def conj_program():
    return parse_program(CONJ_TEXT)
