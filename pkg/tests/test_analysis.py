import numpy as np
import pytest

from cornerfem.analysis import (
    ConvergenceRow,
    ConvergenceTable,
    ErrorField,
    IncompatibleGridsError,
    RunSettings,
    comparative_error,
    convergence_study,
    default_settings,
    fit_order,
    max_error_evolution,
    run_with_reference,
)
from cornerfem.fem import UniformMesh
from cornerfem.problem import Level, burgers_paper, heat_sine
from cornerfem.timestep import TimeGrid, integrate

NU = 0.2


def heat_exact(x, t):
    return np.exp(-NU * np.pi**2 * t) * np.sin(np.pi * x)


class TestComparativeError:
    def test_self_is_zero(self):
        mesh = UniformMesh(16)
        h = integrate(heat_sine(), Level.NONE, mesh, TimeGrid.with_steps(0.1, 10))
        err = comparative_error(h, h)
        assert np.all(err.e == 0.0) and err.e.shape == h.u.shape

    def test_nested_sampling_reads_reference_values(self):
        coarse = integrate(heat_sine(), Level.NONE, UniformMesh(8), TimeGrid.with_steps(0.1, 5))
        ref = integrate(heat_sine(), Level.NONE, UniformMesh(32), TimeGrid.with_steps(0.1, 20))
        err = comparative_error(coarse, ref)
        assert np.array_equal(err.e, np.abs(coarse.u - ref.u[::4, ::4]))
        assert np.max(np.abs(ref.x[::4] - coarse.x)) <= 1e-14

    def test_incompatible(self):
        a = integrate(heat_sine(), Level.NONE, UniformMesh(12), TimeGrid.with_steps(0.1, 5))
        b = integrate(heat_sine(), Level.NONE, UniformMesh(40), TimeGrid.with_steps(0.1, 5))
        with pytest.raises(IncompatibleGridsError):
            comparative_error(a, b)
        c = integrate(heat_sine(), Level.NONE, UniformMesh(24), TimeGrid.with_steps(0.1, 7))
        with pytest.raises(IncompatibleGridsError):
            comparative_error(a, c)
        with pytest.raises(IncompatibleGridsError):
            run_with_reference(burgers_paper(), Level.NONE, 48, RunSettings(n_ref=1000))

    def test_uncorrected_peak_next_to_corner(self):
        _, _, err = run_with_reference(burgers_paper(), Level.NONE, 64, default_settings("burgers_paper", "solve"))
        k, j = np.unravel_index(np.argmax(err.e), err.e.shape)
        assert j <= 2


class TestMaxEvolution:
    def test_zero_field(self):
        f = ErrorField(np.linspace(0, 1, 5), np.linspace(0, 1, 3), np.zeros((3, 5)))
        t, m = max_error_evolution(f)
        assert np.all(m == 0.0) and len(m) == 3

    def test_per_time_max(self):
        e = np.arange(12.0).reshape(3, 4)
        t, m = max_error_evolution(ErrorField(np.arange(4.0), np.arange(3.0), e))
        assert np.array_equal(m, [3.0, 7.0, 11.0])


class TestFitOrder:
    @pytest.mark.parametrize("p", [-0.2, 1.0, 2.0, 3.5])
    def test_synthetic(self, p):
        dx = 1.0 / np.array([32, 64, 128, 256])
        assert abs(fit_order(dx, 3.7 * dx**p) - p) <= 1e-10


class TestConvergence:
    def test_heat_exact_order(self):
        settings = RunSettings(dt_factor=1.0, dt_power=2)
        table = convergence_study(heat_sine(), Level.NONE, [16, 32, 64], settings=settings, exact=heat_exact)
        assert 1.7 <= table.order_final_time <= 2.3

    def test_heat_comparative_order(self):
        # second order in time with dt ~ dx^2 keeps the time error negligible; with
        # larger steps time and space errors partly cancel and the fit is meaningless
        settings = RunSettings(dt_factor=1.0, dt_power=2, scheme="sbdf2", n_ref=512)
        table = convergence_study(heat_sine(), Level.NONE, [16, 32, 64], settings=settings)
        assert 1.7 <= table.order_final_time <= 2.3

    def test_reporter_and_workers(self):
        seen = []
        settings = RunSettings(dt_factor=1.0, dt_power=2, n_ref=128)
        a = convergence_study(heat_sine(), Level.NONE, [32, 16, 8], reporter=seen.append, settings=settings)
        b = convergence_study(heat_sine(), Level.NONE, [8, 16, 32], settings=settings, workers=3)
        assert [r.N for r in seen] == [8, 16, 32]
        assert a == b

    def test_validation(self):
        with pytest.raises(ValueError):
            convergence_study(heat_sine(), Level.NONE, [16, 32])
        with pytest.raises(IncompatibleGridsError):
            convergence_study(heat_sine(), Level.NONE, [16, 32, 48])
        with pytest.raises(ValueError):
            ConvergenceTable((ConvergenceRow(32, 1 / 32, 1, 1), ConvergenceRow(16, 1 / 16, 1, 1)), 0.0, 0.0)

    def test_pinned_reference(self):
        st = RunSettings(dt_factor=0.5, n_ref=256, reference_level=Level.C2)
        _, ref, _ = run_with_reference(burgers_paper(), Level.NONE, 32, st)
        assert ref.correction.level is Level.C2

    def test_default_settings(self):
        assert default_settings(None, "solve") == RunSettings()
        assert default_settings("burgers_paper", "convergence").dt_power == 2
        with pytest.raises(ValueError):
            default_settings(None, "plot")
