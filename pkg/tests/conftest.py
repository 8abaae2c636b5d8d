from __future__ import annotations

import pytest

from acmcheck.manifest import load_fixture

FIXTURES = ("flat", "example1", "example2", "example3-qs", "example3-aqs")

_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collector for one pass/fail line per acceptance criterion; the lines
    are replayed in the terminal summary."""
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def manifests():
    return {name: load_fixture(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def structures(manifests):
    return {name: mf.structure() for name, mf in manifests.items()}


@pytest.fixture(scope="session")
def sample_sets(manifests, structures):
    return {
        name: structures[name].chart.sample_points(manifests[name].samples, manifests[name].seed)
        for name in FIXTURES
    }


@pytest.fixture(scope="session")
def twisted(structures):
    """A structure whose metric depends on the Reeb coordinate and carries an
    off-diagonal entry: activates the C blocks and Reeb-derivative paths that
    the bundled fixtures leave at zero."""
    from acmcheck.expr import parse
    from acmcheck.structure import AdaptedStructure

    base = structures["example1"]
    coords = base.chart.coords
    g = base.g.copy()
    g[0, 0] = parse("1 + 0.3*sin(v)", coords)
    g[0, 1] = g[1, 0] = parse("0.2*x", coords)
    return AdaptedStructure(chart=base.chart, g=g, phi=base.phi)
