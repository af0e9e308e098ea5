"""One line per acceptance criterion; run with -s to see them."""
import pytest

from wilddyn.suites import ACCEPTANCE


@pytest.mark.parametrize("check", ACCEPTANCE, ids=[f"criterion_{i}" for i in range(1, len(ACCEPTANCE) + 1)])
def test_criterion(check, capsys):
    r = check(0)
    line = f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}"
    with capsys.disabled():
        print("\n" + line)
    assert r.passed, line
