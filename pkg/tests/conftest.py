from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def reference_toml() -> Path:
    return ROOT / "configs" / "reference.toml"


@pytest.fixture
def write_variant(tmp_path, reference_toml):
    """Write a copy of the reference config with textual substitutions applied."""
    def make(*subs, name="variant.toml"):
        text = reference_toml.read_text()
        for old, new in subs:
            assert old in text, old
            text = text.replace(old, new, 1)
        path = tmp_path / name
        path.write_text(text)
        return path
    return make


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record and print the one-line verdict of an acceptance criterion."""
    def report(number: int, passed: bool, text: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {text}"
        _CRITERIA[number] = line
        print(line)
        return passed
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
