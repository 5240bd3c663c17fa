import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from algebroids import (
    Hamiltonian,
    Lagrangian,
    NewtonConvergenceError,
    Sampler,
    SingularJacobianError,
    check_homogeneity,
    check_round_trip,
    legendre_transform,
    legendre_transform_h,
    parse,
    phi_h,
    phi_l,
    solve_fiber,
    solve_fiber_h,
    var,
)

CUBE_ROOT_4_OVER_3 = 1.1006424163623729  # real root of 3 y^3 = 4
CUBE_ROOT_4 = 1.5874010519681994


@pytest.fixture(scope="module")
def spaces():
    import pathlib

    from algebroids import load_model

    models = pathlib.Path(__file__).resolve().parent.parent / "models"
    model = load_model(models / "classical.model")
    return model.bundles["E"], model.bundles["Edual"]


class TestFiberHessian:
    def test_euclidean_identity(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        out = lag.fiber_hessian((0, 0), (1, 1))
        assert out.regular
        assert out.matrix == pytest.approx(np.eye(2))
        assert out.inverse == pytest.approx(np.eye(2))

    def test_anisotropic_diagonal(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("y1^2 + 1/2*y2^2"))
        out = lag.fiber_hessian((0, 0), (1, 1))
        assert out.matrix == pytest.approx(np.diag([2.0, 1.0]))
        assert out.inverse == pytest.approx(np.diag([0.5, 1.0]))

    def test_offdiagonal_involution(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("y1*y2"))
        out = lag.fiber_hessian((0.3, -1), (2, 5))
        assert out.regular
        assert out.matrix == pytest.approx(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert out.inverse == pytest.approx(out.matrix)

    def test_singular_hessian_flagged(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*y1^2"))
        out = lag.fiber_hessian((0, 0), (1, 1))
        assert not out.regular
        assert out.inverse is None

    def test_variance_enforced(self, spaces):
        E, Ed = spaces
        with pytest.raises(ValueError):
            Lagrangian(Ed, parse("1/2*p1^2"))
        with pytest.raises(ValueError):
            Hamiltonian(E, parse("1/2*y1^2"))


class TestFiberMaps:
    def test_euclidean_is_identity_on_fibers(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        assert phi_l(lag, (0.2, 0.4), (3, -1)) == pytest.approx([3.0, -1.0])

    def test_diagonal_contraction(self, spaces):
        E, Ed = spaces
        lag = Lagrangian(E, parse("y1^2 + 1/2*y2^2"))
        assert phi_l(lag, (0, 0), (1, 1)) == pytest.approx([2.0, 1.0])
        ham = Hamiltonian(Ed, parse("1/4*p1^2 + 1/2*p2^2"))
        assert phi_h(ham, (0, 0), (2, 1)) == pytest.approx([1.0, 1.0])

    def test_homogeneous_map_equals_fiber_gradient(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        x, y = (0.5, -0.2), (1.2, 0.7)
        assert phi_l(lag, x, y) == pytest.approx(lag.gradient(x, y))


class TestFiberSolve:
    def test_euclidean_single_sweep(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        out = solve_fiber(lag, (0, 0), (3, -1))
        assert out.solution == pytest.approx([3.0, -1.0])
        assert out.iterations == 1

    def test_diagonal_two_sweeps(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("y1^2 + 1/2*y2^2"))
        out = solve_fiber(lag, (0, 0), (2, 1))
        assert out.solution == pytest.approx([1.0, 1.0])
        assert out.iterations <= 2

    def test_quartic_scalar_root(self, spaces):
        # fiber map of the quartic: 3 y^3 = target, solved per component
        E, _ = spaces
        lag = Lagrangian(E, parse("1/4*(y1^4 + y2^4)"))
        out = solve_fiber(lag, (0, 0), (4, 4))
        assert out.solution == pytest.approx([CUBE_ROOT_4_OVER_3] * 2, rel=1e-9)
        assert out.iterations <= 15

    def test_residual_contract(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/4*(y1^4 + y2^4)"))
        p = (2.5, -1.5)
        out = solve_fiber(lag, (0, 0), p)
        got = phi_l(lag, (0, 0), out.solution)
        assert np.abs(got - np.asarray(p)).max() <= 1e-10 * (1 + np.abs(p).max())

    def test_singular_jacobian_reported_with_iterate(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/4*(y1^4 + y2^4)"))
        with pytest.raises(SingularJacobianError) as err:
            solve_fiber(lag, (0, 0), (4, 0))
        assert err.value.last_iterate is not None

    def test_no_convergence_reported(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/4*(y1^4 + y2^4)"))
        with pytest.raises(NewtonConvergenceError) as err:
            solve_fiber(lag, (0, 0), (4, 1), maxiter=2)
        assert err.value.iterations == 2

    def test_dual_solve(self, spaces):
        _, Ed = spaces
        ham = Hamiltonian(Ed, parse("1/4*p1^2 + 1/2*p2^2"))
        out = solve_fiber_h(ham, (0, 0), (1, 1))
        assert out.solution == pytest.approx([2.0, 1.0])

    @given(
        st.lists(st.floats(-2, 2, allow_nan=False), min_size=3, max_size=3),
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=2),
    )
    @settings(max_examples=40, deadline=None)
    def test_random_positive_definite_quadratics(self, spaces, entries, target):
        # any quadratic with positive-definite fiber matrix solves in at
        # most two sweeps and reproduces the linear solution
        E, _ = spaces
        a, b, c = (round(v, 3) for v in entries)
        A = np.array([[1.0 + a * a, a * b], [a * b, 1.0 + b * b + abs(c)]])
        expr = parse(
            f"1/2*({A[0, 0]}*y1^2 + {A[1, 1]}*y2^2) + {A[0, 1]}*y1*y2"
        )
        lag = Lagrangian(E, expr)
        p = np.array([round(v, 3) for v in target])
        out = solve_fiber(lag, (0.0, 0.0), p)
        assert out.iterations <= 2
        assert out.solution == pytest.approx(np.linalg.solve(A, p), abs=1e-8)


class TestTransforms:
    def test_euclidean_pair(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        H = legendre_transform(lag)
        assert H((0, 0), (3, -1)) == pytest.approx(5.0)

    def test_potential_changes_sign(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2) + x1^2"))
        H = legendre_transform(lag)
        # H = p^2/2 - x1^2 at p = y
        assert H((1.0, 0.0), (2.0, 0.0)) == pytest.approx(2.0 - 1.0)

    def test_symbolic_transform_when_solution_registered(self, spaces):
        E, Ed = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        H = legendre_transform(lag).hamiltonian(Ed, (var("p1"), var("p2")))
        sampler = Sampler(points=30, seed=5)
        from algebroids import equivalent

        assert equivalent(H.expr, parse("1/2*(p1^2 + p2^2)"), sampler)

    def test_double_transform_recovers_lagrangian(self, spaces):
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2) + x1^2 + 1/4*y1^4"))
        back = legendre_transform_h(legendre_transform(lag))
        rng = np.random.default_rng(11)
        for _ in range(10):
            x = rng.uniform(-2, 2, size=2)
            y = rng.uniform(-2, 2, size=2)
            assert back(x, y) == pytest.approx(lag.value(x, y), abs=1e-8)

    def test_hamiltonian_transform(self, spaces):
        _, Ed = spaces
        ham = Hamiltonian(Ed, parse("1/2*(p1^2 + p2^2)"))
        lag = legendre_transform_h(ham)
        assert lag((0, 0), (3, -1)) == pytest.approx(5.0)

    def test_homogeneous_pair_composes_to_identity_on_values(self, spaces):
        # for the fiberwise 2-homogeneous example the transform evaluated
        # along the fiber map returns the original values
        E, _ = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        H = legendre_transform(lag)
        rng = np.random.default_rng(12)
        for _ in range(5):
            x = rng.uniform(-2, 2, size=2)
            y = rng.uniform(-2, 2, size=2)
            p = phi_l(lag, x, y)
            assert H(x, p) == pytest.approx(lag.value(x, y), abs=1e-10)

    def test_homogeneous_dual_side_composes_to_identity_on_values(self, spaces):
        # mirror statement for a fiberwise 2-homogeneous dual function
        _, Ed = spaces
        ham = Hamiltonian(Ed, parse("1/2*(p1^2 + p2^2) + 1/4*p1*p2"))
        L = legendre_transform_h(ham)
        rng = np.random.default_rng(13)
        for _ in range(5):
            x = rng.uniform(-2, 2, size=2)
            p = rng.uniform(-2, 2, size=2)
            y = phi_h(ham, x, p)
            assert L(x, y) == pytest.approx(ham.value(x, p), abs=1e-8)

    def test_inhomogeneous_composition_misses_by_potential(self, spaces):
        # with an added potential the composed value differs by twice the
        # potential at generic base points
        import pathlib

        from algebroids import load_model

        models = pathlib.Path(__file__).resolve().parent.parent / "models"
        E1 = load_model(models / "generalized.model").bundles["E"]
        # use a plain classical line bundle instead: potential example
        from algebroids import AnchoredBundle, GeneralizedLieAlgebroid, add, coords, identity_map

        M, N = coords("M", "x", 1), coords("N", "k", 1)
        alg = GeneralizedLieAlgebroid(M, N, identity_map(M, N), identity_map(N, M), 1, ((add(1.0),),), {})
        E = AnchoredBundle(alg, 1, "primal", ((add(1.0),),), ((add(1.0),),))
        lag = Lagrangian(E, parse("1/2*y1^2 + x1^2"))
        H = legendre_transform(lag)
        x, y = (1.5,), (0.8,)
        p = phi_l(lag, x, y)
        gap = H(x, p) - lag.value(x, y)
        assert abs(gap) >= 1.5**2
        assert gap == pytest.approx(-2 * 1.5**2)


class TestRoundTrip:
    def test_euclidean(self, spaces, sampler):
        E, Ed = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        ham = Hamiltonian(Ed, parse("1/2*(p1^2 + p2^2)"))
        report = check_round_trip(lag, ham, sampler)
        assert report.passed
        assert report.worst_residual == 0.0

    def test_diagonal(self, spaces, sampler):
        E, Ed = spaces
        lag = Lagrangian(E, parse("y1^2 + 1/2*y2^2"))
        ham = Hamiltonian(Ed, parse("1/4*p1^2 + 1/2*p2^2"))
        report = check_round_trip(lag, ham, sampler)
        assert report.passed
        inverse_rows = [r for r in report.rows if r.name == "L-inverse-hessian-matches-H"]
        assert inverse_rows and inverse_rows[0].passed

    def test_mismatched_fails(self, spaces, sampler):
        E, Ed = spaces
        lag = Lagrangian(E, parse("1/2*(y1^2 + y2^2)"))
        ham = Hamiltonian(Ed, parse("1/2*(p1^2 + p2^2) + p1^3"))
        report = check_round_trip(lag, ham, sampler)
        assert not report.passed
        assert report.worst_residual > 1e-3


class TestHomogeneity:
    def test_euclidean_accepted(self, spaces, sampler):
        E, _ = spaces
        report = check_homogeneity(Lagrangian(E, parse("1/2*(y1^2 + y2^2)")), sampler)
        assert report.verdict
        assert report.euler_worst == pytest.approx(0.0, abs=1e-14)

    def test_base_coupling_rejected(self, spaces, sampler):
        E, _ = spaces
        report = check_homogeneity(Lagrangian(E, parse("1/2*(y1^2 + y2^2) + x1*y1")), sampler)
        assert not report.verdict
        assert not report.euler_ok
        assert report.euler_worst > 1e-3

    def test_indefinite_rejected(self, spaces, sampler):
        E, _ = spaces
        report = check_homogeneity(Lagrangian(E, parse("1/2*(y1^2 - y2^2)")), sampler)
        assert report.euler_ok
        assert not report.hessian_positive_definite
        assert not report.verdict

    def test_dual_side_accepted(self, spaces, sampler):
        _, Ed = spaces
        report = check_homogeneity(Hamiltonian(Ed, parse("1/2*(p1^2 + p2^2)")), sampler)
        assert report.verdict

    def test_samples_stay_off_zero_section(self, spaces, sampler):
        E, _ = spaces
        report = check_homogeneity(Lagrangian(E, parse("1/2*(y1^2 + y2^2)")), sampler)
        assert report.witness is None or max(
            abs(report.witness["y1"]), abs(report.witness["y2"])
        ) >= 0.1
