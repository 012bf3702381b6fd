"""Module-level invariant suites (also reachable via `spinchain verify`)."""

import pytest

from spinchain import verify


@pytest.mark.parametrize("suite", ["oracle", "models", "chains", "factories"])
def test_suite_passes(suite):
    checks = verify.run_suites(suite, seed=7, fast=False)
    failed = [c for c in checks if c["status"] != "pass"]
    assert not failed, failed
