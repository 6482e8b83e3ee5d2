import logging

import pytest

from ctkit import JudgmentCache, OracleScorer, default_grammar, make_rng, sample_corpus

logging.getLogger("ctkit").setLevel(logging.ERROR)

_ACCEPTANCE_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: criterion-level test; summarized after the run"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.get_closest_marker("acceptance"):
        _ACCEPTANCE_RESULTS.append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper()
        )
        terminalreporter.write_line(f"[acceptance] {name}: {status}")


@pytest.fixture(scope="session")
def grammar():
    return default_grammar()


@pytest.fixture(scope="session")
def synth_corpus(grammar):
    return sample_corpus(grammar, 500, 12, make_rng(7))


@pytest.fixture(scope="session")
def oracle(grammar):
    return OracleScorer(grammar)


@pytest.fixture()
def cache():
    return JudgmentCache()


@pytest.fixture()
def stub_scorer_url():
    """An in-process HTTP service speaking the scorer wire format."""
    import threading
    from http.server import ThreadingHTTPServer

    from .test_remote import StubHandler

    StubHandler.behavior = {"fail_next": 0, "bad_length": False, "max_batch": 16}
    StubHandler.train_calls = []
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join(timeout=5)
