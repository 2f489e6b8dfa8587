"""
Analytical oracle tests.

Proves every check of the validate operation passes on the default case and
the report lists each check once.
"""
import os
import numpy as np
import pytest
from beamcraft.validator import Validator, fit_residual, relative_error, validate_analysis

CHECKS = ['capon_peak_vs_exact', 'capon_peak_vs_closed_form', 'me_peak_vs_exact', 'me_large_m_factor',
          'capon_reconstruction_fit', 'me_reconstruction_fit', 'me_dominant_to_floor', 'sine_ratio_identity',
          'loss_at_zero_mismatch', 'loss_at_4_degrees', 'cg_vs_direct', 'cg_iterations']


@pytest.fixture(scope='module')
def report():
    return validate_analysis()


def test_all_checks_pass(report):
    assert report.passed, report.text()
    assert report.failures == []


def test_report_lists_every_check(report):
    assert [c.name for c in report.checks] == CHECKS
    text = report.text()
    assert text.endswith(f'{len(CHECKS)}/{len(CHECKS)} checks passed\n')
    assert text.count('PASS') == len(CHECKS)


def test_report_is_written(report, tmp_path):
    path = report.write(str(tmp_path))
    assert os.path.basename(path) == 'validation_report.txt'
    with open(path, encoding='utf-8') as file:
        assert file.read() == report.text()


def test_oracle_uses_on_grid_interferer():
    validator = Validator()
    assert np.rad2deg(validator.theta_l) == pytest.approx(19.8)


def test_failing_check_is_reported():
    validator = Validator()
    validator.check('impossible', 1.0, 0.5)
    assert not validator.report.passed
    assert validator.report.failures[0].name == 'impossible'
    assert validator.report.text().startswith('FAIL')


def test_helpers():
    assert relative_error(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0
    c, residual = fit_residual(3.0 * np.eye(2), np.eye(2))
    assert c == pytest.approx(3.0)
    assert residual == pytest.approx(0.0, abs=1e-15)
