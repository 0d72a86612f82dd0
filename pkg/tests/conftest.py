from __future__ import annotations

from pathlib import Path

import pytest

from mpst.frontend import SpecFile, parse

GOLDEN = Path(__file__).parent / "golden"


def golden_path(name: str) -> Path:
    return GOLDEN / name


def load_golden(name: str) -> SpecFile:
    return parse(golden_path(name).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def social_media() -> SpecFile:
    return load_golden("social_media.mpst")


@pytest.fixture(scope="session")
def buyer_seller() -> SpecFile:
    return load_golden("buyer_seller.mpst")


@pytest.fixture(scope="session")
def unbounded() -> SpecFile:
    return load_golden("unbounded.mpst")


@pytest.fixture(scope="session")
def mutual_loop() -> SpecFile:
    return load_golden("mutual_loop.mpst")


@pytest.fixture(scope="session")
def empty_spec() -> SpecFile:
    return load_golden("empty.mpst")
