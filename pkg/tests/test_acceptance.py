"""Release criteria, one test per criterion, each printing its report line."""

import pytest

from dirac_edge import acceptance


@pytest.mark.parametrize(
    "index,name",
    [(i, name) for i, name, _, _ in acceptance.CRITERIA],
    ids=[
        f"criterion_{i}_{name.split(' (')[0].replace(' ', '_')}"
        for i, name, _, _ in acceptance.CRITERIA
    ],
)
def test_criterion(index, name):
    results = acceptance.run(indices=[index])
    assert len(results) == 1
    r = results[0]
    assert r.passed, f"criterion {index} ({name}): {r.detail}"
