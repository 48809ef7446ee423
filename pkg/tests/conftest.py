from pathlib import Path

import pytest

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def corpus():
    return CORPUS


def load(name: str):
    from afs.parser import parse_program

    return parse_program((CORPUS / name).read_text())
