"""Acceptance criteria, one test each.

Run with ``pytest tests/test_acceptance.py -s`` to see one status line per
criterion. Criterion 10 is expected to fail; see the README.
"""
from __future__ import annotations

import pytest

from fracnet.verify import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    result = run_criterion(number)
    print()
    print(result.line())
    assert result.passed, result.detail
