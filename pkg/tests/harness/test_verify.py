# -*- coding: utf-8 -*-
import pytest

from apps.enums import VerifySuiteEnum
from apps.harness import verify
from apps.harness.verify import CheckResult, SuiteResult, VerifyReport, run_suite, run_verify


class TestSuites:

    @pytest.mark.parametrize("suite", ["delta_m", "discretize", "identity", "ss2d", "shapes"])
    def test_passes(self, suite):
        result = run_suite(suite)
        assert result.passed, [check for check in result.checks if not check.passed]

    def test_scan_single_seed(self):
        assert run_suite("scan", seeds=range(1)).passed

    @pytest.mark.slow
    def test_grad(self):
        result = run_suite("grad")
        assert result.passed, [check for check in result.checks if not check.passed]

    @pytest.mark.slow
    def test_everything(self):
        assert run_verify().passed


class TestReport:

    def test_empty_suite_fails(self):
        assert not SuiteResult(suite=VerifySuiteEnum.scan).passed

    def test_failed_checks(self):
        report = VerifyReport(suites=[
            SuiteResult(suite=VerifySuiteEnum.ss2d, checks=[
                CheckResult(name="rot180", passed=True), CheckResult(name="transpose", passed=False)
            ]),
            SuiteResult(suite=VerifySuiteEnum.delta_m, checks=[CheckResult(name="stm1", passed=True)]),
        ])
        assert not report.passed
        assert report.failed_checks() == ["ss2d.transpose"]

    def test_suite_error_becomes_failed_check(self, monkeypatch):
        def boom():
            raise RuntimeError("boom")

        monkeypatch.setitem(verify._SUITES, VerifySuiteEnum.delta_m, boom)
        result = run_suite("delta_m")
        assert not result.passed
        assert result.checks[0].name == "error" and "boom" in result.checks[0].detail

    def test_selected_suites_in_order(self):
        report = run_verify(["shapes", "delta_m"])
        assert [suite.suite for suite in report.suites] == [VerifySuiteEnum.shapes, VerifySuiteEnum.delta_m]
        assert report.passed
