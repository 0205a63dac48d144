"""The eleven acceptance criteria at full scale, one test each.

Every test prints a single verdict line with the measured values.  Criterion 1
encodes the ln 2 mean and its variance window as stated; the exact radial law
has mean gamma t + 1 and variance gamma t - 1, so that test fails.
Deselect the long runs with ``-m "not slow"``.
"""

import pytest

from isomeasure.acceptance import AcceptanceConfig, run_check

SLOW = {1, 2, 3, 4, 5, 9}
VERDICT_LINES: list[str] = []


def _case(n):
    return pytest.param(n, id=f"criterion_{n:02d}", marks=[pytest.mark.slow] if n in SLOW else [])


@pytest.mark.parametrize("n", [_case(n) for n in range(1, 12)])
def test_criterion(n, capsys):
    v = run_check(n, AcceptanceConfig())
    VERDICT_LINES.append(v.line())
    with capsys.disabled():
        print("\n" + v.line())
    assert v.status == "pass", v.line()
