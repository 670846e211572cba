import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def reference():
    """Placed and compensated N=4 reference layout with its state table."""
    from rydberg_parity.experiments import all_to_all_problem, prepare
    from rydberg_parity.parity import lhz_encode

    return prepare(lhz_encode(all_to_all_problem(4)))
