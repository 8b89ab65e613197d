import numpy as np
import pytest

from oracles import SQRT_PI
from pohozaev.errors import InputError
from pohozaev.gridfn import (GridFunction, GridSpec, bump, bump_tests, dilate, divergence,
                             gaussian, gradient, gradient_transpose, integrate, read_table,
                             sample, sech_soliton, write_table)


def test_spacing_and_axis():
    spec = GridSpec(1, 12.0, 2049)
    assert spec.spacing == 24.0 / 2048
    ax = spec.axis()
    assert ax[0] == -12.0 and ax[-1] == pytest.approx(12.0, abs=1e-12)
    assert ax[1024] == 0.0


@pytest.mark.parametrize("bad", [(0, 1.0, 16), (1, -1.0, 16), (1, 1.0, 4), (1, np.inf, 16),
                                 (4, 1.0, 400)])
def test_gridspec_validation(bad):
    with pytest.raises(InputError):
        GridSpec(*bad)


def test_preset_values():
    spec = GridSpec(1, 12.0, 2049)
    assert gaussian(spec).values[1024] == 1.0
    b = bump(spec, 1.0)
    assert np.all(b.values[np.abs(spec.axis()) >= 1] == 0)
    assert sech_soliton(spec).values[1024] == pytest.approx(np.sqrt(2), rel=1e-15)
    with pytest.raises(InputError):
        sech_soliton(GridSpec(2, 5.0, 16))
    with pytest.raises(InputError):
        sample("lorentzian", spec)


def test_grid_function_is_read_only_and_records_margin():
    spec = GridSpec(1, 3.0, 64)
    u = gaussian(spec)
    with pytest.raises(ValueError):
        u.values[0] = 1.0
    assert u.decay_margin == pytest.approx(np.exp(-9.0))
    with pytest.raises(InputError):
        GridFunction(spec, np.full(64, np.nan))
    with pytest.raises(InputError):
        GridFunction(spec, np.zeros(10))


def test_arithmetic_and_grid_mismatch():
    a = gaussian(GridSpec(1, 3.0, 32))
    np.testing.assert_array_equal((a + a).values, (2 * a).values)
    np.testing.assert_array_equal((a - a).values, 0.0)
    np.testing.assert_array_equal((-a).values, -a.values)
    with pytest.raises(InputError):
        a + gaussian(GridSpec(1, 4.0, 32))


def test_integrate_gaussian():
    spec = GridSpec(1, 12.0, 2048)
    assert integrate(gaussian(spec)) == pytest.approx(SQRT_PI, rel=1e-8, abs=0)
    assert integrate(GridFunction(spec, np.zeros(2048))) == 0.0
    spec2 = GridSpec(2, 8.0, 129)
    assert integrate(gaussian(spec2)) == pytest.approx(np.pi, rel=1e-8)


def test_gradient_of_constant_and_affine():
    spec = GridSpec(2, 2.0, 17)
    c = GridFunction(spec, np.full(spec.shape, 3.5))
    np.testing.assert_array_equal(gradient(c).components, 0.0)
    x = spec.coords()
    g = gradient(GridFunction(spec, 1.7 * x[0] - 0.3 * x[1]))
    np.testing.assert_allclose(g.components[0], 1.7, rtol=1e-13)
    np.testing.assert_allclose(g.components[1], -0.3, rtol=1e-12)
    assert g.pointwise().shape == (17, 17, 2)


def test_gradient_exact_on_quadratics_including_edges():
    spec = GridSpec(1, 1.0, 21)
    x = spec.axis()
    g = gradient(GridFunction(spec, x ** 2)).components[0]
    np.testing.assert_allclose(g, 2 * x, atol=1e-13)


def test_divergence_zeroes_boundary():
    spec = GridSpec(2, 1.0, 11)
    x = spec.coords()
    field = np.moveaxis(np.array([x[0] ** 2, x[1]]), 0, -1)
    d = divergence(field, spec)
    assert np.all(d[spec.boundary_mask()] == 0)
    inner = ~spec.boundary_mask()
    np.testing.assert_allclose(d[inner], (2 * x[0] + 1)[inner], atol=1e-13)


def test_gradient_transpose_is_weighted_adjoint():
    spec = GridSpec(1, 2.0, 33)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(33), rng.standard_normal(33)
    w = spec.weights()
    du = gradient(GridFunction(spec, u)).components[0]
    lhs = np.sum(w * v * du)
    rhs = -np.sum(w * u * gradient_transpose(v, spec))
    assert lhs == pytest.approx(rhs, rel=1e-13)
    # away from the ends it is the central divergence
    d = divergence(v[:, None], spec)
    np.testing.assert_allclose(gradient_transpose(v, spec)[3:-3], d[3:-3], rtol=1e-13)


def test_dilate_identity_and_rescaled_box():
    u = gaussian(GridSpec(1, 6.0, 64))
    assert dilate(u, 1.0) is u
    v = dilate(u, 2.0)
    assert v.spec.half_width == 3.0
    np.testing.assert_array_equal(v.values, u.values)
    with pytest.raises(InputError):
        dilate(u, 0.0)


def test_bump_tests_vanish_on_boundary():
    for spec in (GridSpec(1, 20.0, 512), GridSpec(2, 6.0, 48)):
        tests = bump_tests(spec)
        assert len(tests) == 20
        assert all(t.decay_margin == 0.0 and np.any(t.values) for t in tests)
    with pytest.raises(InputError):
        bump_tests(GridSpec(1, 2.0, 64), radius=1.5)


def test_table_round_trip(tmp_path):
    u = gaussian(GridSpec(2, 3.0, 9), 0.7)
    path = tmp_path / "u.txt"
    write_table(u, path)
    v = read_table(path)
    assert v.spec == u.spec
    np.testing.assert_array_equal(v.values, u.values)
    w = sample("custom_table", u.spec, path=path)
    np.testing.assert_array_equal(w.values, u.values)


def test_table_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 2.0\n")
    with pytest.raises(InputError):
        read_table(p)
    p.write_text("1 2.0 8\n1 2 3\n")
    with pytest.raises(InputError):
        read_table(p)
