import math

import numpy as np
import pytest

from camplab.ensembles import (SignalModel, make_instance, problem_size, rng_stream, sample_matrix,
                               sample_noise, sample_nonzeros, sample_signal, stream_id)
from camplab.errors import DomainError


@pytest.mark.parametrize("kind", ["gaussian", "rademacher", "ternary"])
def test_matrix_moments(kind):
    n, N = 200, 2000
    A = sample_matrix(kind, n, N, rng_stream(0, "moments", kind))
    assert A.shape == (n, N)
    # E|A|^2 = 1/n, parts with equal variance, mean zero
    assert np.mean(np.abs(A) ** 2) * n == pytest.approx(1.0, abs=0.01)
    assert np.var(A.real) * 2 * n == pytest.approx(1.0, abs=0.01)
    assert np.var(A.imag) * 2 * n == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(A)) * math.sqrt(n) < 0.01
    # columns have unit norm on average
    assert np.mean(np.linalg.norm(A, axis=0) ** 2) == pytest.approx(1.0, abs=0.01)


def test_ternary_support_and_values():
    n = 100
    A = sample_matrix("ternary", n, 5000, rng_stream(1, "ternary"))
    parts = np.concatenate([A.real.ravel(), A.imag.ravel()])
    c = math.sqrt(3 / (4 * n))
    vals = np.unique(np.round(parts / c, 12))
    assert set(vals) == {-1.0, 0.0, 1.0}
    assert np.mean(parts == 0) == pytest.approx(1 / 3, abs=0.005)


def test_rademacher_values():
    A = sample_matrix("rademacher", 50, 60, rng_stream(2, "r"))
    assert np.allclose(np.abs(A.real), math.sqrt(0.5 / 50))
    assert np.allclose(np.abs(A.imag), math.sqrt(0.5 / 50))


def test_matrix_argument_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(DomainError):
        sample_matrix("cauchy", 5, 10, rng)
    with pytest.raises(DomainError):
        sample_matrix("gaussian", 11, 10, rng)


def test_coefficient_ensembles():
    rng = np.random.default_rng(4)
    up = sample_nonzeros("up", 10_000, rng)
    assert np.allclose(np.abs(up), 1.0)
    # phases roughly uniform: first circular moment near zero
    assert abs(np.mean(up)) < 0.03
    assert np.all(sample_nonzeros("zp", 5, rng) == 1)
    ga = sample_nonzeros("ga", 100_000, rng)
    assert np.mean(np.abs(ga) ** 2) == pytest.approx(2.0, rel=0.02)
    uf = sample_nonzeros("uf", 100_000, rng)
    assert uf.real.min() > 0 and uf.real.max() <= 1 and uf.imag.min() > 0
    pm = sample_nonzeros("point_mass", 10, rng, gamma=4.0)
    assert np.allclose(np.abs(pm), 4.0)
    with pytest.raises(DomainError):
        sample_nonzeros("bogus", 3, rng)


def test_bernoulli_signal_sparsity():
    x = sample_signal(SignalModel(0.1, "up"), 100_000, np.random.default_rng(0))
    assert np.mean(x != 0) == pytest.approx(0.1, abs=0.005)
    with pytest.raises(DomainError):
        SignalModel(1.5)


def test_noise_scaling():
    w = sample_noise(0.3, 200_000, np.random.default_rng(0))
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.09, rel=0.01)
    assert np.all(sample_noise(0.0, 10, np.random.default_rng(0)) == 0)
    with pytest.raises(DomainError):
        sample_noise(-1.0, 3, np.random.default_rng(0))


def test_problem_size_floors_with_fuzz():
    assert problem_size(0.25, 0.1, 1000) == (250, 25)
    assert problem_size(0.29, 1.0, 100) == (29, 29)
    assert problem_size(0.3, 0.1, 1000) == (300, 30)


def test_instance_has_exact_sparsity_and_consistent_data():
    inst = make_instance(0.5, 0.2, 500, sigma=0.0, seed=3)
    assert (inst.n, inst.N) == (250, 500)
    assert np.count_nonzero(inst.truth) == 50
    np.testing.assert_allclose(inst.y, inst.matrix @ inst.truth, atol=1e-13)


def test_instance_at_n_equals_500():
    inst = make_instance(0.5, 0.1, 1000, ensemble="rademacher", sigma=0.1, seed=0)
    assert inst.n == 500 and np.count_nonzero(inst.truth) == 50
    noise = inst.y - inst.matrix @ inst.truth
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(0.01, rel=0.2)


def test_streams_are_deterministic_and_separated():
    a = make_instance(0.25, 0.1, 400, sigma=0.1, seed=7, labels=("x", 1))
    b = make_instance(0.25, 0.1, 400, sigma=0.1, seed=7, labels=("x", 1))
    c = make_instance(0.25, 0.1, 400, sigma=0.1, seed=7, labels=("x", 2))
    assert np.array_equal(a.y, b.y) and np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)
    assert stream_id("a", 1) == stream_id("a", 1) != stream_id("a", 2)


def test_paired_ensembles_share_signal_but_not_matrix_bits():
    g = make_instance(0.25, 0.1, 400, "gaussian", sigma=0.1, seed=1)
    r = make_instance(0.25, 0.1, 400, "rademacher", sigma=0.1, seed=1)
    assert np.array_equal(g.truth, r.truth)
    np.testing.assert_allclose(g.y - g.matrix @ g.truth, r.y - r.matrix @ r.truth, atol=1e-14)
    # different matrix streams: the rademacher signs do not follow gaussian signs
    agree = np.mean(np.sign(g.matrix.real) == np.sign(r.matrix.real))
    assert abs(agree - 0.5) < 0.02


def test_instance_argument_errors():
    with pytest.raises(DomainError):
        make_instance(0.0, 0.1, 100)
    with pytest.raises(DomainError):
        make_instance(0.5, 3.0, 100)
