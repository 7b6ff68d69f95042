import pytest

from axcomp import compensator, learner, mularray, profiler


@pytest.fixture(scope="session")
def ref_netlist():
    return mularray.build_netlist(mularray.DEFAULT_CONFIG)


@pytest.fixture(scope="session")
def ref_profile(ref_netlist):
    return profiler.characterize(ref_netlist)


@pytest.fixture(scope="session")
def quantizer():
    return learner.Quantizer(16, 8)


@pytest.fixture(scope="session")
def ref_table(ref_profile, quantizer):
    return learner.build_table(ref_profile, quantizer)


@pytest.fixture(scope="session")
def ref_tree(ref_table):
    return learner.train_tree(ref_table)


@pytest.fixture(scope="session")
def ref_engine(ref_netlist, quantizer, ref_tree):
    return compensator.CompensatedMultiplier(ref_netlist, quantizer, ref_tree)


@pytest.fixture(scope="session")
def zero_tree():
    return learner.CompensationTree(learner.Leaf(0), 16)


_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
