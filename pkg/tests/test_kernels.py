"""Banded Cholesky kernels against dense numpy oracles, both backends."""

from __future__ import annotations

import numpy as np
import pytest

from winkler_eki import _kernels
from winkler_eki._kernels import band_py

BACKENDS = [pytest.param(band_py, id="python")]
if _kernels.BACKEND == "c":
    from winkler_eki._kernels import _band_c

    BACKENDS.append(pytest.param(_band_c, id="c"))


def random_spd_band(n: int, m: int, seed: int):
    """Dense SPD matrix with bandwidth m plus its lower-band storage.

    Built as L L^T from a banded lower factor so definiteness survives the
    band truncation at every size.
    """
    rng = np.random.default_rng(seed)
    factor = np.tril(rng.standard_normal((n, n)))
    for i in range(n):
        factor[i, : max(0, i - m)] = 0.0
    np.fill_diagonal(factor, np.abs(np.diagonal(factor)) + 1.0)
    a = factor @ factor.T
    ab = np.zeros((m + 1, n))
    for d in range(m + 1):
        ab[d, : n - d] = np.diagonal(a, -d)
    return a, ab


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("n,m", [(1, 0), (4, 1), (9, 3), (25, 8), (40, 12)])
def test_solve_matches_dense(impl, n, m):
    a, ab = random_spd_band(n, m, seed=n * 31 + m)
    b = np.random.default_rng(7).standard_normal(n)
    work = ab.copy()
    assert impl.cholesky_band(work) == 0
    x = impl.solve_band(work, b)
    expected = np.linalg.solve(a, b)
    assert np.linalg.norm(x - expected) <= 1e-10 * np.linalg.norm(expected)


@pytest.mark.parametrize("impl", BACKENDS)
def test_cholesky_factor_matches_dense(impl):
    a, ab = random_spd_band(12, 4, seed=3)
    work = ab.copy()
    assert impl.cholesky_band(work) == 0
    dense_l = np.linalg.cholesky(a)
    for d in range(5):
        np.testing.assert_allclose(
            work[d, : 12 - d], np.diagonal(dense_l, -d), rtol=1e-12, atol=1e-14
        )


@pytest.mark.parametrize("impl", BACKENDS)
def test_not_positive_definite_reports_column(impl):
    ab = np.zeros((2, 3))
    ab[0] = [1.0, -1.0, 1.0]
    # column 1 has a negative pivot; 1-based index expected
    assert impl.cholesky_band(ab.copy()) == 2


@pytest.mark.parametrize("impl", BACKENDS)
def test_backsolve_is_transposed_triangular_solve(impl):
    """backsolve_band solves L^T x = z for the factored band."""
    a, ab = random_spd_band(10, 3, seed=11)
    work = ab.copy()
    assert impl.cholesky_band(work) == 0
    z = np.random.default_rng(5).standard_normal(10)
    x = impl.backsolve_band(work, z)
    dense_l = np.linalg.cholesky(a)
    expected = np.linalg.solve(dense_l.T, z)
    np.testing.assert_allclose(x, expected, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("impl", BACKENDS)
def test_solve_keeps_input_intact(impl):
    _, ab = random_spd_band(8, 2, seed=1)
    work = ab.copy()
    impl.cholesky_band(work)
    b = np.arange(8.0)
    before = b.copy()
    impl.solve_band(work, b)
    np.testing.assert_array_equal(b, before)


def test_backend_selection_env(monkeypatch):
    import importlib

    monkeypatch.setenv("WINKLER_EKI_KERNELS", "python")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("WINKLER_EKI_KERNELS")
        importlib.reload(_kernels)


def test_backend_env_rejects_unknown(monkeypatch):
    import importlib

    monkeypatch.setenv("WINKLER_EKI_KERNELS", "fortran")
    with pytest.raises(ImportError, match="WINKLER_EKI_KERNELS"):
        importlib.reload(_kernels)
    monkeypatch.delenv("WINKLER_EKI_KERNELS")
    importlib.reload(_kernels)


def test_backends_agree():
    if _kernels.BACKEND != "c":
        pytest.skip("compiled backend not built")
    _, ab = random_spd_band(30, 9, seed=2)
    b = np.random.default_rng(3).standard_normal(30)
    work_c = ab.copy()
    work_py = ab.copy()
    assert _band_c.cholesky_band(work_c) == 0
    assert band_py.cholesky_band(work_py) == 0
    x_c = _band_c.solve_band(work_c, b)
    x_py = band_py.solve_band(work_py, b)
    np.testing.assert_allclose(x_c, x_py, rtol=1e-13, atol=1e-15)
