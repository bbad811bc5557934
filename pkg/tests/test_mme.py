import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from esep import dist, mme
from esep import fixtures as fx
from esep.dist import JointTable

T1_HY = 1.802340382331
T1_I = 1.593524763074


def table(rows, xs=None, ys=None):
    rows = np.asarray(rows, dtype=float)
    xs = xs or tuple(range(rows.shape[0]))
    ys = ys or tuple(range(rows.shape[1]))
    return JointTable(("X", "Y"), (xs, ys), rows / rows.sum())


class TestBounds:
    def test_example1(self):
        t = fx.ace_example_table()
        lower, avg = mme.mme_lower(t, "X", "Y")
        assert lower == pytest.approx(1.0, abs=1e-12) and avg == lower
        assert mme.mme_upper_trivial(t, "X", "Y") == pytest.approx(1.0, abs=1e-12)

    def test_table1(self):
        t = fx.genetics_table()
        assert mme.mme_lower(t, "X", "Y")[0] == pytest.approx(T1_I, abs=1e-12)
        assert mme.mme_upper_trivial(t, "X", "Y") == pytest.approx(T1_HY, abs=1e-12)

    def test_point_mass_y(self):
        t = table([[0.5], [0.5]])
        assert mme.mme_upper_trivial(t, "X", "Y") == 0.0

    def test_overlap(self):
        with pytest.raises(ValueError):
            mme.mme_lower(fx.genetics_table(), "X", "X")

    def test_ace_zero(self):
        assert mme.ace(fx.ace_example_table(), "X", "Y", 1, 0) == pytest.approx(0.0, abs=1e-12)


class TestProjection:
    @settings(max_examples=100)
    @given(arrays(np.float64, (3, 5), elements=st.floats(-5, 5, allow_nan=False)))
    def test_rows_on_simplex(self, v):
        p = mme.project_simplex(v)
        assert np.all(p >= 0) and np.allclose(p.sum(axis=-1), 1.0)

    def test_fixed_point(self):
        p = np.array([[0.2, 0.3, 0.5], [1.0, 0.0, 0.0]])
        assert np.allclose(mme.project_simplex(p), p)

    def test_known(self):
        assert np.allclose(mme.project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
        assert np.allclose(mme.project_simplex(np.array([0.5, 0.5, 0.5])), [1 / 3] * 3)


class TestEstimate:
    def test_example1_exact(self):
        est = mme.mme_estimate(fx.ace_example_table(), "X", "Y", w_card_max=3, restarts=3)
        assert est.converged and est.numeric_bits == pytest.approx(1.0, abs=0.01)
        assert est.w_cardinality == 2

    def test_independent_constant_w(self):
        t = table(np.outer([0.3, 0.7], [0.2, 0.5, 0.3]))
        est = mme.mme_estimate(t, "X", "Y", restarts=2)
        assert est.converged and est.w_cardinality == 1
        assert est.numeric_bits == pytest.approx(0.0, abs=1e-6)

    def test_bijection_needs_copy(self):
        t = table(np.eye(3))
        est = mme.mme_estimate(t, "X", "Y", restarts=3, seed=1)
        assert est.numeric_bits == pytest.approx(np.log2(3), abs=0.01)
        # a constant W cannot reproduce the dependence
        assert est.trace[0] == (1, None)

    def test_sandwich_and_trace(self):
        t = fx.genetics_table()
        est = mme.mme_estimate(t, "X", "Y", restarts=2, seed=3, iters=150)
        assert est.converged
        assert est.lower_bits - est.tol <= est.numeric_bits <= est.trivial_upper_bits + est.tol

    def test_covariate(self):
        # X and Y copy each other when C = 0 and are independent when C = 1
        mapping = {}
        for x in (0, 1):
            mapping[(0, x, x)] = 0.25
            for y in (0, 1):
                mapping[(1, x, y)] = 0.125
        t = JointTable.from_dict(("C", "X", "Y"), mapping)
        est = mme.mme_estimate(t, "X", "Y", "C", restarts=2)
        assert est.lower_bits == pytest.approx(1.0) and est.averaged_lower_bits == pytest.approx(0.5)
        assert est.converged and est.lower_bits - 1e-3 <= est.numeric_bits <= 1.0 + 1e-6

    def test_deterministic(self):
        t = table([[0.4, 0.1], [0.1, 0.4]])
        a = mme.mme_estimate(t, "X", "Y", restarts=2, seed=5)
        b = mme.mme_estimate(t, "X", "Y", restarts=2, seed=5)
        assert a == b

    def test_infeasible_reported(self):
        t = table(np.eye(3))
        est = mme.mme_estimate(t, "X", "Y", w_card_max=2, restarts=2)
        assert not est.converged and est.numeric_bits is None

    def test_needs_singletons(self):
        t = dist.product(fx.genetics_table(), JointTable(("Z",), ((0, 1),), [0.5, 0.5]))
        with pytest.raises(ValueError):
            mme.mme_estimate(t, ("X", "Z"), "Y")

    @settings(max_examples=8, deadline=None)
    @given(arrays(np.float64, (2, 2), elements=st.floats(0.01, 1)))
    def test_sandwich_random(self, rows):
        t = table(rows)
        est = mme.mme_estimate(t, "X", "Y", restarts=1, iters=100)
        assert est.converged
        assert est.lower_bits - 1e-3 <= est.numeric_bits <= est.trivial_upper_bits + 1e-9
