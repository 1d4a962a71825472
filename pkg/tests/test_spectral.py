import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gevspec.quantize import RealGrid, WeylMatrix, assemble_weyl
from gevspec.spectral import (BudgetError, PseudospectrumField, SolverError,
                              SpectrumResult, ZGrid, eigenvalues,
                              pseudospectrum, pseudospectrum_csv_lines,
                              resolvent_norm, sigma_min, sigma_min_direct,
                              spectrum_csv_lines, spectrum_free_radius)
from test_quantize import BUMP, ONE, plain_symbol


def wrap(entries, h=0.1, L=4.0):
    n = entries.shape[0]
    return WeylMatrix(np.asarray(entries, dtype=complex), h, RealGrid(L, n),
                      "wrapped")


def hermitian_example(n=64, seed=7):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return wrap((M + M.conj().T) / 2)


class TestEigenvalues:
    def test_identity_spectrum(self):
        spec = eigenvalues(wrap(np.eye(16)))
        assert np.allclose(spec.eigenvalues, 1.0)
        assert spec.boundary_mass.shape == (16,)

    def test_sorted_by_modulus(self):
        spec = eigenvalues(wrap(np.diag([3.0, -1.0, 0.5, 2.0])))
        assert np.all(np.diff(np.abs(spec.eigenvalues)) >= 0)

    def test_boundary_mass_range_and_localized_modes(self):
        n = 64
        D = np.diag(np.linspace(-1, 1, n)).astype(complex)
        spec = eigenvalues(wrap(D))
        assert np.all(spec.boundary_mass >= 0)
        assert np.all(spec.boundary_mass <= 1)
        # coordinate eigenvectors of a diagonal matrix: edge modes carry
        # full boundary mass, interior modes none
        assert spec.boundary_mass.min() == 0.0
        assert spec.boundary_mass.max() == pytest.approx(1.0)

    def test_budget_error_on_large_matrix(self):
        with pytest.raises(BudgetError):
            eigenvalues(wrap(np.eye(4096)))

    def test_retained_filters_edge_modes(self):
        n = 64
        spec = eigenvalues(wrap(np.diag(np.arange(n, dtype=float))))
        kept = spec.retained()
        # 10 percent of 64 nodes: 3 modes cut at each edge
        assert kept.size == n - 6


class TestSigmaMin:
    def test_hermitian_distance_identity(self):
        P = hermitian_example()
        lam = np.linalg.eigvalsh(P.entries)
        for z in (0.5 + 0.25j, -2.0 + 1.0j, 10.0):
            dist = np.abs(lam - z).min()
            assert sigma_min(P, z) == pytest.approx(dist, rel=1e-10)
            assert resolvent_norm(P, z) == pytest.approx(1.0 / dist, rel=1e-10)

    def test_vanishes_at_eigenvalue(self):
        P = hermitian_example()
        lam = np.linalg.eigvalsh(P.entries)
        scale = np.abs(P.entries).max()
        assert sigma_min(P, complex(lam[3])) <= 1e-10 * scale
        assert resolvent_norm(P, complex(lam[3])) == np.inf

    def test_inverse_iteration_matches_direct_svd(self):
        rng = np.random.default_rng(11)
        n = 1024  # above the direct-SVD cutoff
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        P = wrap(M / np.sqrt(n))
        for z in (0.3 + 0.2j, -1.0):
            assert sigma_min(P, z) == pytest.approx(
                sigma_min_direct(P, z), rel=1e-8)

    @given(dre=st.floats(-0.5, 0.5), dim=st.floats(-0.5, 0.5))
    @settings(max_examples=25, deadline=None)
    def test_lipschitz_in_z(self, dre, dim):
        P = hermitian_example(n=32)
        z = 0.4 + 0.1j
        w = z + dre + 1j * dim
        assert abs(sigma_min(P, z) - sigma_min(P, w)) <= abs(z - w) + 1e-12


class TestPseudospectrum:
    def test_budget_error(self):
        with pytest.raises(BudgetError):
            pseudospectrum(wrap(np.eye(4)),
                           ZGrid(0j, 1.0, 1.0, 600, 4))

    def test_identity_field(self):
        win = ZGrid(1.0 + 0j, 0.5, 0.5, 5, 5)
        field = pseudospectrum(wrap(np.eye(8)), win)
        assert field.sigma_min.shape == (5, 5)
        assert np.allclose(field.sigma_min, np.abs(win.nodes() - 1.0))
        # minimum sits at the eigenvalue in the window center
        assert field.sigma_min[2, 2] == pytest.approx(0.0, abs=1e-14)

    def test_rows_sweep_imaginary_axis(self):
        win = ZGrid(0j, 1.0, 2.0, 3, 5)
        zs = win.nodes()
        assert np.allclose(zs[:, 0].imag, np.linspace(-2, 2, 5))
        assert np.allclose(zs[0, :].real, np.linspace(-1, 1, 3))


class TestFreeRadius:
    def test_distance_to_nearest_clean_eigenvalue(self):
        spec = eigenvalues(wrap(np.diag(np.linspace(-1, 1, 64)).astype(complex)))
        # interior eigenvalues survive; nearest to 2j among them
        lam = spec.retained()
        r = spectrum_free_radius(spec, 2j)
        assert r == pytest.approx(np.abs(lam - 2j).min())

    def test_raises_when_filter_empties(self):
        # circulant shift: all eigenvectors are extended waves with ~10
        # percent boundary mass, far above the retention threshold
        n = 32
        S = np.roll(np.eye(n), 1, axis=0)
        spec = eigenvalues(wrap(S))
        with pytest.raises(SolverError):
            spectrum_free_radius(spec, 0j)

    def test_radius_invariant_under_unitary_conjugation(self, rng):
        n = 64
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        Q, _ = np.linalg.qr(rng.normal(size=(n, n))
                            + 1j * rng.normal(size=(n, n)))
        A = wrap(M)
        B = wrap(Q @ M @ Q.conj().T)
        # threshold above 1 disables the boundary filter
        ra = spectrum_free_radius(eigenvalues(A), 0.3 + 0.1j, threshold=2.0)
        rb = spectrum_free_radius(eigenvalues(B), 0.3 + 0.1j, threshold=2.0)
        assert ra == pytest.approx(rb, rel=1e-8)


class TestQuantizedOperator:
    def test_real_symbol_real_spectrum(self):
        real_bump = plain_symbol(
            lambda x, xi: np.cos(xi) * np.exp(-x ** 2) + 0j, "rb",
            xi_extent=2.5)
        P = assemble_weyl(real_bump, RealGrid(4.0, 128), 0.05)
        spec = eigenvalues(P)
        assert np.abs(spec.eigenvalues.imag).max() < 1e-10


class TestCsv:
    def test_spectrum_csv_layout(self):
        spec = eigenvalues(wrap(np.diag([1.0 + 2.0j, -0.5j])))
        lines = spectrum_csv_lines(spec)
        assert lines[0] == "re_lambda,im_lambda,boundary_mass"
        assert len(lines) == 3
        fields = lines[1].split(",")
        assert len(fields) == 3
        assert complex(float(fields[0]), float(fields[1])) in (1 + 2j, -0.5j)

    def test_pseudospectrum_csv_layout(self):
        field = pseudospectrum(wrap(np.eye(4)), ZGrid(0j, 1.0, 1.0, 2, 2))
        lines = pseudospectrum_csv_lines(field)
        assert lines[0] == "re_z,im_z,sigma_min"
        assert len(lines) == 5
        vals = [float(l.split(",")[2]) for l in lines[1:]]
        assert vals == pytest.approx([abs(z - 1.0) for z in
                                      field.z_grid.nodes().ravel()])
