import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# acceptance outcomes, filled by test_acceptance and printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])


@pytest.fixture(scope="session")
def boom_default_samples():
    from corepower.dataio import SyntheticDatasetSpec, generate_synthetic_dataset
    from corepower.params import default_parameter_set

    return generate_synthetic_dataset(
        SyntheticDatasetSpec("BOOM", default_parameter_set(), config_ids=("B1", "B8", "B15"))
    )
