"""Shared fixtures and the acceptance-criterion reporter.

Full-scale checks need the real shared-task corpora, which are not
bundled. Point SEGGLOSS_DATA_DIR at a directory of prepared splits (as
written by `seggloss prepare-data`, one subdirectory per language code)
to enable them; otherwise they skip with an explicit reason.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from seggloss.igt import load_split, word_example
from seggloss.model import ModelConfig
from seggloss.training import TrainConfig

REPO_ROOT = Path(__file__).parent.parent
DEMO_PREPARED = REPO_ROOT / "data" / "demo" / "prepared"
DEMO_FIXTURES = REPO_ROOT / "data" / "demo" / "fixtures"
DATA_ENV = "SEGGLOSS_DATA_DIR"


def shared_task_dir() -> Path | None:
    value = os.environ.get(DATA_ENV)
    if value and Path(value).is_dir():
        return Path(value)
    return None


def prepared_language_or_skip(language: str) -> Path:
    root = shared_task_dir()
    if root is None:
        pytest.skip(f"{DATA_ENV} not set: prepared {language} shared-task split unavailable")
    path = root / language
    if not (path / "manifest.json").exists():
        pytest.skip(f"no prepared split for {language} under {root}")
    return path


@pytest.fixture(scope="session")
def demo_split():
    split, _ = load_split(DEMO_PREPARED / "kel")
    return split


@pytest.fixture(scope="session")
def tiny_examples():
    return [
        word_example("gubida", "gub-ida", "work-PST"),
        word_example("gubin", "gub-in", "work-INF"),
        word_example("salda", "sal-da", "plow-PST"),
        word_example("salin", "sal-in", "plow-INF"),
        word_example("tarhida", "tarh-ida", "run-PST"),
        word_example("tarhin", "tarh-in", "run-INF"),
        word_example("qachuda", "qachu-da", "take-PST"),
        word_example("qachun", "qachu-in", "take-INF"),
    ]


@pytest.fixture
def tiny_model_config():
    return ModelConfig(
        encoder_layers=1,
        decoder_layers=1,
        attention_heads=2,
        embedding_dim=16,
        hidden_dim=32,
        dropout=0.1,
        attention_dropout=0.1,
        max_positions=32,
    )


@pytest.fixture
def tiny_train_config():
    return TrainConfig(max_epochs=3, batch_size=64, beam_width_for_dev=2, seed=0)


# --- acceptance criterion reporting -----------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n, title): part of numbered acceptance criterion n"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    number = marker.args[0]
    title = marker.args[1] if len(marker.args) > 1 else ""
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": 0, "skipped": []})
    if title and not entry["title"]:
        entry["title"] = title
    if report.skipped:
        reason = ""
        if isinstance(report.longrepr, tuple):
            reason = report.longrepr[2]
        entry["skipped"].append(reason)
    elif report.failed:
        entry["failed"] += 1
    elif report.passed:
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        if entry["failed"]:
            status = "FAIL"
        elif entry["passed"]:
            status = "PASS"
        else:
            status = "SKIP"
        line = f"criterion {number}: {status} - {entry['title']}"
        if status == "SKIP" and entry["skipped"]:
            reason = entry["skipped"][0].removeprefix("Skipped: ")
            line += f" ({reason})"
        elif entry["skipped"]:
            line += f" [{len(entry['skipped'])} part(s) skipped: data-gated]"
        terminalreporter.write_line(line)
