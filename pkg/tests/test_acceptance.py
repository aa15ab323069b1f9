"""Acceptance gate: one test per behavioural criterion.

The suite is run once per session; every criterion then asserts its own
verdict, so the test report carries one pass/fail line per criterion.
Two criteria are expected to fail on the current model: the
exclusive-OR loading of 0.67 transmits coincident pulses (the true
quench boundary sits at 0.63/0.64), and the 2:1 taper blocks
propagation in both directions.  Both are measured honestly here rather
than patched around; the pinned regressions in test_sweep.py track the
boundaries where the mechanisms do work.
"""

from __future__ import annotations

import pytest

from solitonsim.suite import format_report, run_paper_suite

CRITERIA = [
    "criterion_1_elements",
    "criterion_2_patch",
    "criterion_3_propagation",
    "criterion_4_reflection",
    "criterion_5_annihilation",
    "criterion_6_truth_tables",
    "criterion_7_split",
    "criterion_8_taper_asymmetry",
    "criterion_9_numerics",
]


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("suite_artifacts")
    results = run_paper_suite(out_dir)
    print()
    print(format_report(results))
    return out_dir, {r.name: r for r in results}


def test_suite_covers_every_criterion(suite):
    _, verdicts = suite
    assert sorted(verdicts) == sorted(CRITERIA)


def test_suite_writes_all_artifacts(suite):
    out_dir, _ = suite
    for name in (
        "fig1_patch",
        "fig7_chain",
        "fig8_reflection",
        "fig8_reflection_control",
        "fig9_collision",
        "fig11_or",
        "fig13_xor",
        "fig14_and",
        "fig16_taper",
    ):
        assert (out_dir / f"{name}.csv").is_file()
        assert (out_dir / f"{name}.summary.json").is_file()
    assert (out_dir / "taper_forward_window.csv").is_file()
    assert (out_dir / "taper_reverse_window.csv").is_file()


@pytest.mark.parametrize("name", CRITERIA)
def test_criterion(suite, name):
    _, verdicts = suite
    result = verdicts[name]
    line = f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}"
    print(line)
    assert result.passed, line
