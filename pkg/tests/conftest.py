import pytest

from xicascade import load_preset, simulate

_RESULTS = []
_RUNS = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    _RESULTS.append((number, line))
    print(line)


@pytest.fixture(scope="session")
def preset_run():
    """Cached ``simulate`` results keyed by preset id and overrides."""

    def run(preset_id, **overrides):
        key = (preset_id, tuple(sorted(overrides.items())))
        if key not in _RUNS:
            _RUNS[key] = simulate(load_preset(preset_id, **overrides))
        return _RUNS[key]

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
