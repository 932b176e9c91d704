import numpy as np
import pytest

from akme import EmbeddingConfig, PointPattern, Window, build_feature_map


@pytest.fixture
def unit():
    return Window.unit()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def default_fm(unit):
    return build_feature_map(EmbeddingConfig.default(unit))


def uniform_pattern(rng, n, window=None):
    window = window or Window.unit()
    pts = np.column_stack([rng.uniform(window.xmin, window.xmax, n),
                           rng.uniform(window.ymin, window.ymax, n)])
    return PointPattern(pts, window)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    status = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
    line = f"CRITERION {number:>2} {status}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
