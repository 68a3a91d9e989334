import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqdisc.kernels import Kernel, cross, cross_grad, cross_hess, gram, kernel_eval


def make_kernel(family, rho2=2.0, ls=(1.0, 2.0, 0.5)):
    return Kernel(family, rho2, np.array(ls), jitter=1e-10)


def test_validation():
    with pytest.raises(ValueError):
        make_kernel("cubic")
    with pytest.raises(ValueError):
        Kernel("rbf", -1.0, np.array([1.0]), 1e-10)
    with pytest.raises(ValueError):
        Kernel("rbf", 1.0, np.array([0.0]), 1e-10)


def test_dict_round_trip():
    k = make_kernel("matern52")
    k2 = Kernel.from_dict(k.to_dict())
    assert k2.family == k.family and k2.rho2 == k.rho2
    assert np.array_equal(k2.lengthscales, k.lengthscales)


def test_rbf_hand_value():
    # k = rho2 * exp(-0.5 * sum((dz_j / l_j)^2)); dz=(1,2,0) with l=(1,2,0.5)
    # gives exponent -0.5 * (1 + 1) = -1.
    k = make_kernel("rbf")
    z, zp = np.array([1.0, 2.0, 0.0]), np.array([0.0, 0.0, 0.0])
    assert np.isclose(kernel_eval(k, z, zp), 2.0 * np.exp(-1.0), rtol=1e-14)


def test_matern52_hand_value():
    # u = sqrt(5) * r with r^2 = sum((dz_j / l_j)^2) = 2 here;
    # k = rho2 * (1 + u + u^2/3) * exp(-u)
    k = make_kernel("matern52")
    z, zp = np.array([1.0, 2.0, 0.0]), np.array([0.0, 0.0, 0.0])
    u = np.sqrt(5.0 * 2.0)
    expect = 2.0 * (1.0 + u + u * u / 3.0) * np.exp(-u)
    assert np.isclose(kernel_eval(k, z, zp), expect, rtol=1e-14)


@pytest.mark.parametrize("family", ["rbf", "matern52"])
def test_stationarity_and_symmetry(family):
    k = make_kernel(family)
    rng = np.random.default_rng(0)
    z, zp, shift = rng.normal(size=(3, 3))
    assert np.isclose(kernel_eval(k, z, zp), kernel_eval(k, zp, z), rtol=1e-14)
    assert np.isclose(
        kernel_eval(k, z + shift, zp + shift), kernel_eval(k, z, zp), rtol=1e-12
    )
    assert np.isclose(kernel_eval(k, z, z), k.rho2, rtol=1e-14)


@pytest.mark.parametrize("family", ["rbf", "matern52"])
def test_cross_grad_matches_fd(family):
    k = make_kernel(family)
    rng = np.random.default_rng(1)
    Zs = rng.normal(size=(4, 3))
    Z = rng.normal(size=(6, 3))
    dims = (1, 2)
    K, G = cross_grad(k, Zs, Z, dims)
    assert np.allclose(K, cross(k, Zs, Z), rtol=1e-14)
    h = 1e-6
    for t, j in enumerate(dims):
        Zp, Zm = Zs.copy(), Zs.copy()
        Zp[:, j] += h
        Zm[:, j] -= h
        fd = (cross(k, Zp, Z) - cross(k, Zm, Z)) / (2 * h)
        assert np.allclose(G[:, :, t], fd, atol=1e-7)


@pytest.mark.parametrize("family", ["rbf", "matern52"])
def test_cross_hess_matches_fd_of_grad(family):
    k = make_kernel(family)
    rng = np.random.default_rng(2)
    Zs = rng.normal(size=(3, 3)) * 2.0
    Z = rng.normal(size=(5, 3))
    dims = (0, 2)
    K, G, H = cross_hess(k, Zs, Z, dims)
    _, G0 = cross_grad(k, Zs, Z, dims)
    assert np.allclose(G, G0, rtol=1e-13)
    h = 1e-5
    for t, j in enumerate(dims):
        Zp, Zm = Zs.copy(), Zs.copy()
        Zp[:, j] += h
        Zm[:, j] -= h
        _, Gp = cross_grad(k, Zp, Z, dims)
        _, Gm = cross_grad(k, Zm, Z, dims)
        fd = (Gp - Gm) / (2 * h)
        assert np.allclose(H[:, :, :, t], fd, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(
    family=st.sampled_from(["rbf", "matern52"]),
    rho2=st.floats(1e-3, 1e3),
    seed=st.integers(0, 2**16),
)
def test_gram_is_positive_definite(family, rho2, seed):
    rng = np.random.default_rng(seed)
    ls = rng.uniform(0.1, 3.0, 4)
    k = Kernel(family, rho2, ls, jitter=1e-8)
    Z = rng.normal(size=(12, 4))
    K = gram(k, Z)
    np.linalg.cholesky(K)  # raises if not PD
    assert np.allclose(K, K.T, rtol=1e-12)
