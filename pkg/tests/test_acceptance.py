"""Acceptance battery: every contract criterion, one verdict line each.

Run with -v (or -s) to see the PASS/FAIL line and measured values per
criterion. Tolerances are pinned inside the criteria themselves; nothing
here rescales them.
"""
import pytest

from cobeam import acceptance

CRITERIA = list(acceptance.ALL)


@pytest.mark.parametrize("criterion_id", CRITERIA, ids=CRITERIA)
def test_criterion(criterion_id, capsys):
    fn, _description = acceptance.ALL[criterion_id]
    result = fn()
    verdict = "PASS" if result.passed else "FAIL"
    with capsys.disabled():
        print(f"\n{verdict} {criterion_id}: {result.detail}")
    assert result.criterion_id == criterion_id
    assert result.passed, f"{criterion_id}: {result.detail}"


def test_run_all_covers_every_criterion():
    import io

    stream = io.StringIO()
    results = acceptance.run_all(ids=["c01_scalar_closed_form"], stream=stream)
    assert len(results) == 1
    assert stream.getvalue().startswith("PASS c01_scalar_closed_form")
    with pytest.raises(ValueError):
        acceptance.run_all(ids=["c99_missing"])
