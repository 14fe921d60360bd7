import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for helpers.py


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile-once so timing-sensitive tests measure work, not JIT
    from lbsimtsc import distance

    distance.warmup_kernels()
