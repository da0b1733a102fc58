import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(name, passed, detail)``."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def clouds():
    """Factory for a linearly separable, class-balanced toy collection."""
    import numpy as np

    from photon_discrim.dataset import SubsetCollection

    def make(n_per_class: int = 50, gap: float = 0.4, seed: int = 0) -> SubsetCollection:
        rng = np.random.default_rng(seed)
        base = rng.uniform(0.0, 0.05, size=(2 * n_per_class, 7))
        targets = np.repeat([1, -1], n_per_class)
        base[:, 0] += np.where(targets > 0, 0.5 + gap / 2, 0.5 - gap / 2)
        counts = np.zeros((2 * n_per_class, 1), dtype=np.int64)
        return SubsetCollection(base, targets, counts, np.arange(2 * n_per_class), 0.4, 1, n_per_class, 1.0)

    return make


@pytest.fixture(scope="session")
def default_sweep(tmp_path_factory):
    """Run the default sweep once through the CLI; returns (csv path, seconds)."""
    import time

    from photon_discrim.cli import main

    out = tmp_path_factory.mktemp("default_sweep")
    start = time.perf_counter()
    status = main(["sweep", "--seed", "0", "--out", str(out)])
    elapsed = time.perf_counter() - start
    assert status == 0
    return out / "accuracy_report.csv", elapsed
