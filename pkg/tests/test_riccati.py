import math

import numpy as np
import pytest

from hardedge.exceptions import ParameterError, StepSizeError
from hardedge.rng import EnvironmentPath, RandomStream
from hardedge.riccati import (HardEdgeParams, SoftEdgeParams, TransitionParams, cdf_Lambda_k, count_batch,
                              count_explosions_p, count_zeros_psi, hard_to_soft, integrate_q, survival_batch,
                              survival_q, transition_grids)
from hardedge.sbo import build_generator, build_speed_scale, environment
from hardedge.stats import EmpiricalDistribution, binomial_se
from hardedge.sturm import sturm_count

INF = math.inf


@pytest.mark.parametrize("beta,a", [(1.0, 0.0), (2.0, 0.5), (4.0, -0.8)])
def test_zero_lambda_has_no_crossings(beta, a):
    for i in range(20):
        p = HardEdgeParams(beta, a, 0.0, L=12.0)
        assert count_explosions_p(p, RandomStream(1, i)).count == 0
        assert count_zeros_psi(p, RandomStream(1, i)).count == 0


@pytest.mark.parametrize("lam,count", [(1.40, 0), (1.50, 1), (7.5, 1), (7.7, 2)])
def test_noiseless_brackets(lam, count):
    # noiseless eigenvalues at a = 0 are j^2/4 = 1.4458, 7.6178
    p = HardEdgeParams(INF, 0.0, lam, L=12.0)
    assert count_explosions_p(p).count == count
    assert count_zeros_psi(p).count == count


def test_crossing_locations():
    run = count_explosions_p(HardEdgeParams(2.0, 0.0, 40.0, L=12.0), RandomStream(4))
    assert run.count == run.crossings.size > 0
    assert np.all(np.diff(run.crossings) > 0)
    assert 0 < run.crossings[0] and run.crossings[-1] <= 12.0
    assert not run.survived


def test_riccati_exact_law():
    lams = [0.5, 1.0, 2.0]
    counts = count_batch(2.0, 0.0, lams, 20000, seed=101, L=20.0)
    for j, lam in enumerate(lams):
        p = np.mean(counts[:, j] == 0)
        assert abs(p - math.exp(-lam)) <= 3 * binomial_se(math.exp(-lam), 20000)


@pytest.mark.slow
def test_psi_exact_law():
    # the plain Euler scheme carries a first-order bias of about -2 dx here
    counts = count_batch(2.0, 0.0, [1.0], 10 ** 5, seed=102, L=20.0, dx=2.0 ** -11, route="psi")
    p = np.mean(counts[:, 0] == 0)
    assert abs(p - math.exp(-1)) <= 3 * binomial_se(math.exp(-1), 10 ** 5)


def test_routes_agree_in_law():
    a = count_batch(2.0, 0.0, [3.0], 10 ** 4, seed=103, L=12.0)[:, 0]
    b = count_batch(2.0, 0.0, [3.0], 10 ** 4, seed=104, L=12.0, route="psi")[:, 0]
    assert EmpiricalDistribution(a).ks_two_sample(EmpiricalDistribution(b)) <= 0.02


def test_counts_monotone_in_lambda():
    c = count_batch(1.0, 0.5, [0.5, 1, 2, 4, 8, 16], 300, seed=5, L=12.0)
    assert np.all(np.diff(c, axis=1) >= 0)


def test_cdf_of_higher_eigenvalue_is_smaller():
    p0, se0 = cdf_Lambda_k(2.0, 0.0, 2.0, 0, 2000, seed=6, L=12.0)
    p1, _ = cdf_Lambda_k(2.0, 0.0, 2.0, 1, 2000, seed=6, L=12.0)
    assert p1 <= p0 and se0 == pytest.approx(binomial_se(p0, 2000))
    assert cdf_Lambda_k(2.0, 0.0, 0.0, 0, 200, seed=6, L=12.0)[0] == 0.0
    with pytest.raises(ParameterError):
        cdf_Lambda_k(2.0, 0.0, 1.0, -1, 10, seed=1)


@pytest.mark.parametrize("beta,a", [(1.0, 0.0), (2.0, 1.0), (4.0, 0.5)])
def test_riccati_counts_match_operator_counts(beta, a):
    # same environment for both: explosion counts and Sturm counts of the
    # discretized operator must agree except for eigenvalues within the
    # discretization error of lam
    L, h, n = 12.0, 2.0 ** -8, 400
    lams = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    ric = np.empty((n, lams.size), dtype=int)
    op = np.empty_like(ric)
    for i in range(n):
        path = environment(L, h, beta, RandomStream(200, i))
        T = build_generator(build_speed_scale(a, beta, L, h, path)).matrix
        for j, lam in enumerate(lams):
            ric[i, j] = count_explosions_p(HardEdgeParams(beta, a, lam, L=L, dx=h), path=path).count
            op[i, j] = sturm_count(T, lam)
    assert np.mean(ric != op) <= 0.02
    for j in range(lams.size):
        p1, p2 = np.mean(ric[:, j] == 0), np.mean(op[:, j] == 0)
        se = math.sqrt(binomial_se(p1, n) ** 2 + binomial_se(p2, n) ** 2)
        assert abs(p1 - p2) <= 2 * se + 1e-12


def test_psi_step_guard():
    with pytest.raises(StepSizeError):
        count_zeros_psi(HardEdgeParams(2.0, 0.0, 10 ** 4, L=12.0, dx=0.01), RandomStream(1))
    with pytest.raises(StepSizeError):
        count_batch(2.0, 0.0, [10 ** 4], 2, seed=1, L=12.0, dx=0.01, route="psi")


def test_parameter_errors():
    for kw in ({"beta": 0.0}, {"a": -1.0}, {"lam": -1.0}, {"boundary": "x"}, {"dx": 0.0}):
        args = {"beta": 2.0, "a": 0.0, "lam": 1.0, **kw}
        with pytest.raises(ParameterError):
            HardEdgeParams(**args)
    with pytest.raises(ParameterError):
        count_explosions_p(HardEdgeParams(2.0, 0.0, 1.0, L=4.0))
    with pytest.raises(ParameterError):
        count_batch(2.0, 0.0, [1.0], 4, seed=1, route="euler")


def test_default_domain_length():
    assert HardEdgeParams(2.0, 0.0, 1.0).L == 12.0
    assert HardEdgeParams(2.0, 0.0, 1e4).L == pytest.approx(math.log(1e4) + 5)


def test_path_argument_reproduces_stream():
    p = HardEdgeParams(1.0, 0.0, 5.0, L=12.0)
    path = EnvironmentPath.sample(p.grid(), RandomStream(9))
    assert count_explosions_p(p, path=path).count == count_explosions_p(p, RandomStream(9)).count


def test_soft_edge_extremes():
    s = survival_batch(2.0, [-10.0, 0.0, 10.0], 10 ** 4, seed=7)
    assert np.mean(s[:, 2]) >= 0.999
    assert np.mean(s[:, 0]) <= 1e-3
    assert np.all(s[:, 0] <= s[:, 1]) and np.all(s[:, 1] <= s[:, 2])


def test_soft_edge_single_path():
    params = SoftEdgeParams(2.0, 0.0)
    assert params.x_max == 10.0 and SoftEdgeParams(2.0, -3.0).x_max == 13.0
    run = integrate_q(params, RandomStream(3))
    assert survival_q(params, RandomStream(3)) == run.survived


def test_transition_params():
    tp = TransitionParams(100.0, 1.0, 2.0)
    assert tp.a == pytest.approx(19.0) and tp.lam == pytest.approx(100 - 100 ** (2 / 3))
    with pytest.raises(ParameterError):
        TransitionParams(1.0, 0.0, 0.5)
    with pytest.raises(ParameterError):
        TransitionParams(8.0, 10.0)


def test_transition_grids_are_scaled_copies():
    tp = TransitionParams(1000.0, 0.0)
    q, h, L = transition_grids(tp, 2.0 ** -7, 10.0)
    assert np.allclose(h[: q.size], q * 0.1, rtol=1e-14, atol=0)
    assert L == h[-1] >= 12.0 and np.all(np.diff(h) > 0)


def test_hard_to_soft_reproducible():
    r1 = hard_to_soft(100.0, 0.0, 2.0, 200, seed=8)
    r2 = hard_to_soft(100.0, 0.0, 2.0, 200, seed=8)
    assert r1 == r2
    assert 0 <= r1.p_hard <= 1 and r1.se_diff >= 0
    assert r1.abs_diff == abs(r1.p_hard - r1.p_soft)
