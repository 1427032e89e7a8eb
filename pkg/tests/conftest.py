import pytest

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE = {}


def record(number, passed, detail=""):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.delenv("CALABI_SLAG_OUTDIR", raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path
