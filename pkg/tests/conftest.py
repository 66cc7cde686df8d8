import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_report():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, name, ok, detail, elapsed, budget):
        status = "PASS" if ok else "FAIL"
        line = (f"criterion {number:>2}  {name:<36} {status}  {detail}  "
                f"[{elapsed:.2f}s / {budget:g}s]")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def price_csv(tmp_path):
    """Write a price CSV from (date, price) rows and return its path."""

    def write(rows, name="prices.csv", header="date,price"):
        path = tmp_path / name
        lines = [header] + [f"{d},{p}" for d, p in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return write


@pytest.fixture(scope="session")
def gaussian_sample():
    """One shared standard-normal sample for histogram tests."""
    rng = np.random.default_rng(20240817)
    return rng.standard_normal(1_000_000)
