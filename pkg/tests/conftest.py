from pathlib import Path

import pytest

from docrel import SchemaConfig, load_schema

FIXTURES = Path(__file__).parent / "fixtures"

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def gda_schema() -> SchemaConfig:
    return load_schema("gda")


@pytest.fixture
def cdr_schema() -> SchemaConfig:
    return load_schema("cdr")


@pytest.fixture
def example_schema() -> SchemaConfig:
    """Token vocabulary used in the worked examples."""
    return SchemaConfig.from_labels(
        ["GENE", "DISEASE", "DRUG", "MUTATION", "CHEMICAL"],
        {"GDA": 2, "CID": 2, "DGM": 3},
    )


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
