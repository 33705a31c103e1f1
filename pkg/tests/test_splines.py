import numpy as np
import pytest

from asg1kit.splines import (
    Partition,
    UniSpline,
    UniSplineSpace,
    antiderivative,
    bezier_segments,
    derivative,
    dimension,
    embed,
    eval_spline,
    greville_points,
    interpolate_function,
    multiply_by_linear,
    refine,
    reverse,
    uniform_partition,
)

import oracles


def random_spline(space, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return UniSpline(space, scale * rng.standard_normal(space.dim))


# -- partitions ----------------------------------------------------------------

def test_uniform_partition_values():
    assert uniform_partition(1).breakpoints == (0.0, 1.0)
    assert uniform_partition(1).grid_size == 1.0
    assert uniform_partition(4).breakpoints == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert uniform_partition(4).grid_size == 0.25
    assert uniform_partition(8).grid_size == 0.125


def test_uniform_partition_rejects_zero():
    with pytest.raises(ValueError):
        uniform_partition(0)


@pytest.mark.parametrize("bad", [(0.0,), (0.1, 1.0), (0.0, 0.9), (0.0, 0.5, 0.5, 1.0)])
def test_partition_validation(bad):
    with pytest.raises(ValueError):
        Partition(bad)


def test_reverse():
    assert reverse(Partition((0.0, 1.0))).breakpoints == (0.0, 1.0)
    assert reverse(Partition((0.0, 0.3, 1.0))).breakpoints == (0.0, 0.7, 1.0)
    z = Partition((0.0, 0.2, 0.5, 1.0))
    np.testing.assert_allclose(
        reverse(reverse(z)).as_array(), z.as_array(), atol=1e-15
    )


def test_refine_inserts_midpoints():
    z = refine(Partition((0.0, 0.5, 1.0)))
    assert z.breakpoints == (0.0, 0.25, 0.5, 0.75, 1.0)


# -- dimension -----------------------------------------------------------------

def test_dimension_examples():
    assert dimension(UniSplineSpace(3, 1, uniform_partition(1))) == 4
    assert dimension(UniSplineSpace(3, 1, uniform_partition(4))) == 10
    assert dimension(UniSplineSpace(5, 2, uniform_partition(2))) == 9


def test_dimension_against_knot_count_oracle():
    for p in range(1, 7):
        for k in range(-1, p):
            for n in range(1, 9):
                Z = uniform_partition(n)
                S = UniSplineSpace(p, k, Z)
                assert dimension(S) == oracles.count_basis_functions(
                    p, k, Z.breakpoints
                )


# -- evaluation ----------------------------------------------------------------

def test_partition_of_unity():
    S = UniSplineSpace(4, 2, uniform_partition(5))
    one = UniSpline(S, np.ones(S.dim))
    x = np.linspace(0.0, 1.0, 1000)
    assert np.max(np.abs(one(x) - 1.0)) <= 1e-13


def test_linear_reproduction_derivative():
    S = UniSplineSpace(3, 1, uniform_partition(4))
    f = interpolate_function(S, lambda x: x)
    assert abs(eval_spline(f, 0.37, 1) - 1.0) <= 1e-12


@pytest.mark.parametrize("p,k,n", [(3, 1, 4), (4, 2, 5), (5, 3, 3), (2, 0, 6)])
def test_eval_matches_bezier_extraction_oracle(p, k, n):
    Z = uniform_partition(n)
    S = UniSplineSpace(p, k, Z)
    f = random_spline(S, seed=p * 100 + n)
    x = np.linspace(0.0, 1.0, 57)
    ref = oracles.eval_piecewise(p, k, Z.breakpoints, f.coefficients, x)
    assert np.max(np.abs(f(x) - ref)) <= 1e-13


def test_eval_outside_domain_rejected():
    S = UniSplineSpace(2, 0, uniform_partition(2))
    f = random_spline(S)
    with pytest.raises(ValueError):
        f(1.5)
    with pytest.raises(ValueError):
        f(-0.2)


def test_polynomial_reproduction():
    for p in (2, 3, 5):
        S = UniSplineSpace(p, p - 2, uniform_partition(3))
        f = interpolate_function(S, lambda x: (1 + x) ** p / 2 ** p)
        x = np.linspace(0, 1, 101)
        assert np.max(np.abs(f(x) - (1 + x) ** p / 2 ** p)) <= 1e-12


def test_eval_one_sided_limits():
    # x^2 on [0, 0.5], (1-x)^2 on [0.5, 1]: C^0 with a kink at 0.5.  The
    # derivative at 0.5 must be the right limit -1 (the left limit is +1),
    # and at x=1 the limit from the left.
    Z = Partition((0.0, 0.5, 1.0))
    S = UniSplineSpace(2, 0, Z)
    f = interpolate_function(S, lambda x: np.minimum(x, 1.0 - x) ** 2)
    assert f(0.5, 1) == pytest.approx(-1.0, abs=1e-12)
    assert f(1.0, 1) == pytest.approx(0.0, abs=1e-12)
    assert f(0.5) == pytest.approx(0.25, abs=1e-13)


# -- derivative / antiderivative -------------------------------------------------

def test_derivative_of_constant_is_zero():
    S = UniSplineSpace(3, 2, uniform_partition(4))
    one = UniSpline(S, np.ones(S.dim))
    d = derivative(one)
    assert np.max(np.abs(d.coefficients)) == 0.0


def test_derivative_of_x_squared():
    S = UniSplineSpace(3, 1, uniform_partition(4))
    f = interpolate_function(S, lambda x: x * x)
    d = derivative(f)
    x = np.linspace(0, 1, 51)
    assert np.max(np.abs(d(x) - 2 * x)) <= 1e-12
    assert d.space == UniSplineSpace(2, 0, S.partition)


@pytest.mark.parametrize("p,k", [(3, 1), (4, 2), (5, 4)])
def test_derivative_matches_eval(p, k):
    S = UniSplineSpace(p, k, uniform_partition(5))
    f = random_spline(S, seed=7)
    d = derivative(f)
    x = np.linspace(0, 1, 200)
    assert np.max(np.abs(d(x) - f(x, 1))) <= 1e-12


def test_antiderivative_examples():
    S0 = UniSplineSpace(2, 0, uniform_partition(3))
    zero = UniSpline(S0, np.zeros(S0.dim))
    const3 = antiderivative(zero, 3.0)
    x = np.linspace(0, 1, 20)
    assert np.max(np.abs(const3(x) - 3.0)) <= 1e-14

    one = UniSpline(S0, np.ones(S0.dim))
    lin = antiderivative(one, 0.0)
    assert np.max(np.abs(lin(x) - x)) <= 1e-14


def test_derivative_antiderivative_roundtrip():
    S = UniSplineSpace(3, 1, uniform_partition(4))
    g = random_spline(UniSplineSpace(2, 0, S.partition), seed=3)
    back = derivative(antiderivative(g, 1.25))
    assert np.max(np.abs(back.coefficients - g.coefficients)) <= 1e-13

    f = random_spline(S, seed=4)
    again = antiderivative(derivative(f), float(f(0.0)))
    assert np.max(np.abs(again.coefficients - f.coefficients)) <= 1e-12


# -- multiply by linear -----------------------------------------------------------

def test_multiply_constant():
    S = UniSplineSpace(3, 1, uniform_partition(3))
    one = UniSpline(S, np.ones(S.dim))
    g = multiply_by_linear(one, 2.0, 0.0)
    assert g.space == UniSplineSpace(4, 1, S.partition)
    x = np.linspace(0, 1, 40)
    assert np.max(np.abs(g(x) - 2.0)) <= 1e-13


def test_multiply_x_by_x():
    S = UniSplineSpace(3, 1, uniform_partition(4))
    f = interpolate_function(S, lambda x: x)
    g = multiply_by_linear(f, 0.0, 1.0)
    x = np.linspace(0, 1, 40)
    assert np.max(np.abs(g(x) - x * x)) <= 1e-13


@pytest.mark.parametrize("p,k", [(2, 1), (3, 1), (4, 2)])
def test_multiply_random_pointwise(p, k):
    S = UniSplineSpace(p, k, uniform_partition(5))
    f = random_spline(S, seed=11)
    g = multiply_by_linear(f, -0.7, 1.9)
    x = np.linspace(0, 1, 100)
    assert np.max(np.abs(g(x) - (-0.7 + 1.9 * x) * f(x))) <= 1e-12


# -- bezier extraction consistency ------------------------------------------------

def test_bezier_segments_against_oracle():
    S = UniSplineSpace(3, 1, uniform_partition(4))
    f = random_spline(S, seed=21)
    ours = bezier_segments(f)
    ref = oracles.bezier_extract(3, 1, S.partition.breakpoints, f.coefficients)
    assert np.max(np.abs(ours - ref)) <= 1e-13


# -- embedding ---------------------------------------------------------------------

def test_embed_smoothness_drop():
    Z = uniform_partition(4)
    f = random_spline(UniSplineSpace(3, 2, Z), seed=5)
    g = embed(f, UniSplineSpace(3, 1, Z))
    x = np.linspace(0, 1, 100)
    assert np.max(np.abs(g(x) - f(x))) <= 1e-12


def test_embed_degree_raise():
    Z = uniform_partition(4)
    f = random_spline(UniSplineSpace(3, 1, Z), seed=6)
    g = embed(f, UniSplineSpace(4, 1, Z))
    x = np.linspace(0, 1, 100)
    assert np.max(np.abs(g(x) - f(x))) <= 1e-12


def test_embed_transitivity():
    Z = uniform_partition(3)
    f = random_spline(UniSplineSpace(3, 2, Z), seed=8)
    a = embed(embed(f, UniSplineSpace(4, 2, Z)), UniSplineSpace(5, 1, Z))
    b = embed(f, UniSplineSpace(5, 1, Z))
    x = np.linspace(0, 1, 100)
    assert np.max(np.abs(a(x) - b(x))) <= 1e-11


def test_embed_rejects_non_nesting():
    Z = uniform_partition(4)
    f = random_spline(UniSplineSpace(3, 1, Z), seed=9)
    with pytest.raises(ValueError):
        embed(f, UniSplineSpace(3, 2, Z))  # more smoothness than the source
    with pytest.raises(ValueError):
        embed(f, UniSplineSpace(2, 1, Z))  # lower degree


def test_embed_into_refined_partition():
    Z = uniform_partition(2)
    f = random_spline(UniSplineSpace(3, 1, Z), seed=10)
    g = embed(f, UniSplineSpace(3, 1, refine(Z)))
    x = np.linspace(0, 1, 100)
    assert np.max(np.abs(g(x) - f(x))) <= 1e-12


def test_greville_points_cover_endpoints():
    S = UniSplineSpace(3, 1, uniform_partition(4))
    g = greville_points(S)
    assert g[0] == 0.0 and g[-1] == 1.0
    assert len(g) == S.dim
