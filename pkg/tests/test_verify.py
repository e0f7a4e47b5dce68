import json
from fractions import Fraction

import pytest

from speciesmix.model import validate_ewens_pitman, validate_gnedin
from speciesmix.sampler import SeedSpec
from speciesmix.verify import (
    SUITE_CHECKS,
    TestReport,
    bell_number,
    check_eppf_normalization,
    check_exact_rational,
    check_Kn_vs_enumeration,
    check_posterior_bayes,
    check_recursion_residuals,
    check_sampler_gof,
    check_tail,
    chi_square_gof,
    enumerate_set_partitions,
    format_reports,
    negative_control,
    run_suite,
)


def test_report_status_rule():
    assert TestReport.judge("a", 1.0, 1.0).status == "pass"
    assert TestReport.judge("a", 1.0 + 1e-12, 1.0).status == "fail"
    assert TestReport.skip("a", "edge excluded").status == "skip"
    d = json.loads(TestReport.judge("a", 0.1, 0.2, "x").to_json())
    assert d == {"name": "a", "status": "pass", "statistic": 0.1, "threshold": 0.2, "details": "x"}


def test_enumeration_counts():
    assert len(enumerate_set_partitions(1)) == 1
    assert len(enumerate_set_partitions(3)) == 5
    parts = enumerate_set_partitions(8)
    assert len(parts) == 4140 == bell_number(8)
    assert len(set(parts)) == 4140
    assert all(p.n == 8 for p in parts)
    with pytest.raises(ValueError):
        enumerate_set_partitions(13)


@pytest.mark.parametrize("params", [(0.5, 0), (0.9, 0), (1, 1), (6, 9), (2, 3), (0.0, 0.0)])
def test_normalization_checks(params):
    p = validate_gnedin(*params)
    assert check_eppf_normalization(2, p).passed
    r = check_eppf_normalization(8, p)
    assert r.passed, r
    if p.k0 is not None:
        assert "nonzero beyond k0=3: 0" in r.details


def test_Kn_checks():
    p = validate_gnedin(0.5, 0)
    assert check_Kn_vs_enumeration(1, p).passed
    assert check_Kn_vs_enumeration(3, p).passed
    with pytest.raises(ValueError):
        check_Kn_vs_enumeration(9, p)


def test_exact_rational_oracle():
    r = check_exact_rational(8, Fraction(1, 3), Fraction(1, 5))
    assert r.passed and r.details == "exact total == 1"
    assert check_exact_rational(8, 6, 9).passed


def test_recursion_checks_and_negative_control():
    assert check_recursion_residuals(validate_gnedin(0.5, 0)).passed
    assert check_recursion_residuals(validate_ewens_pitman(0.3, 1)).passed
    bad = check_recursion_residuals(validate_gnedin(0.5, 0), perturb=0.01)
    assert bad.status == "fail"
    assert negative_control(bad).passed
    assert not negative_control(check_recursion_residuals(validate_gnedin(0.5, 0))).passed


def test_posterior_checks():
    assert check_posterior_bayes(10, 3, 0.5).passed
    assert check_posterior_bayes(5, 5, 0.5).passed
    r = check_posterior_bayes(10, 3, 1.0)
    assert r.status == "skip" and r.details == "edge excluded"


def test_tail_check_and_wrong_exponent():
    good = check_tail(0.5)
    assert good.passed and "supported=corrected" in good.details
    assert check_tail(0.5, exponent_shift=0.1).status == "fail"


def test_gof_rejects_wrong_model_and_small_reps():
    seed = SeedSpec(1)
    assert check_sampler_gof("sequential", 4, validate_gnedin(0.5, 0), 200_000, seed).passed
    # samples from gamma = 0.5 tested against gamma = 0.7 masses
    from speciesmix.verify import _exact_law, empirical_law
    from speciesmix.sampler import sequential_batch

    rgs = sequential_batch(4, validate_gnedin(0.5, 0), 200_000, seed)
    stat, df, pval = chi_square_gof(empirical_law(rgs), _exact_law(4, validate_gnedin(0.7, 0)), 200_000)
    assert pval < 1e-4
    with pytest.raises(ValueError):
        check_sampler_gof("sequential", 4, validate_gnedin(0.5, 0), 50, seed)


def test_gof_marginal_mode():
    r = check_sampler_gof("mixture", 20, validate_gnedin(0.5, 0), 50_000, SeedSpec(2))
    assert r.passed, r


def test_run_suite_selection_and_determinism():
    a = run_suite(["recursion"], SeedSpec(3))
    assert SUITE_CHECKS == tuple(sorted(SUITE_CHECKS))
    assert [r.name for r in a] == sorted(r.name for r in a)
    assert len(run_suite(["tail"])) == 2
    b = run_suite(["frequencies"], SeedSpec(3))
    c = run_suite(["frequencies"], SeedSpec(3))
    assert format_reports(b) == format_reports(c)
    with pytest.raises(ValueError):
        run_suite(["nope"])


def test_run_suite_perturbed_fails():
    reports = run_suite(["recursion"], perturb=0.01)
    assert len(reports) == 1 and reports[0].status == "fail"


def test_full_suite_passes():
    import time

    t0 = time.perf_counter()
    reports = run_suite()
    elapsed = time.perf_counter() - t0
    failed = [r for r in reports if r.status == "fail"]
    assert not failed, failed[:3]
    assert {r.status for r in reports} <= {"pass", "skip"}
    assert elapsed < 600
