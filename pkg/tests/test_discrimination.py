import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2 as chi2_dist

from seqdisc import (
    DesignSpace,
    ExperimentDataset,
    NoiseModel,
    ParameterSpace,
    ParametricModel,
    akaike_weights,
    chi2_test,
    design_aw,
    design_bf,
    design_bh,
    update_posteriors,
)
from seqdisc.discrimination import (
    CriterionInputs,
    DiscriminationState,
    aic_from_loglik,
    check_termination,
    gaussian_logpdf,
    pointwise_akaike_weights,
)
from seqdisc.exceptions import AllLikelihoodsZero


def two_model_inputs(mu2=1.0, priors=(0.5, 0.5)):
    return CriterionInputs(
        mus=np.array([[0.0], [mu2]]),
        covs=np.array([[[1.0]], [[1.0]]]),
        n_params=np.array([3, 3]),
        priors=np.array(priors),
    )


def test_bh_frozen_two_model_value():
    # Delta=1, both predictive covariances 1, equal priors:
    # 0.25 * (1 * (1 + 1) * 1 + tr(1 + 1 - 2)) = 0.5
    assert np.isclose(design_bh(two_model_inputs()), 0.5, rtol=1e-14)


def test_bh_trace_term_vanishes_for_equal_covs():
    # with equal covariances only the quadratic term remains
    val = design_bh(two_model_inputs(mu2=2.0))
    assert np.isclose(val, 0.25 * 4.0 * 2.0, rtol=1e-12)
    assert np.isclose(val, 2.0 * design_bh(two_model_inputs(mu2=np.sqrt(2))), rtol=1e-9)


def test_bh_scales_with_priors():
    a = design_bh(two_model_inputs(priors=(0.5, 0.5)))
    b = design_bh(two_model_inputs(priors=(0.9, 0.1)))
    assert np.isclose(b / a, (0.9 * 0.1) / 0.25, rtol=1e-12)


def test_bf_frozen_value():
    # Delta=2, Sigma_1=Sigma_2=1 (already including unit measurement
    # noise): 4/2 + tr(2 * 1 / 2) = 3
    inputs = two_model_inputs(mu2=2.0)
    assert np.isclose(design_bf(inputs, NoiseModel([[1.0]])), 3.0, rtol=1e-14)


def test_bf_identical_models_hits_floor():
    # indistinguishable models with pure-noise covariances give exactly E
    for E in (1, 2, 3):
        noise = NoiseModel(np.eye(E) * 0.3)
        inputs = CriterionInputs(
            mus=np.zeros((2, E)),
            covs=np.stack([noise.covariance] * 2),
            n_params=np.array([2, 2]),
            priors=np.array([0.5, 0.5]),
        )
        assert abs(design_bf(inputs, noise) - E) < 1e-12


def test_aw_frozen_two_model_weight():
    # equal complexity, separation Delta^2/Sigma = 4: w_1 = 1/(1 + e^-2)
    w = pointwise_akaike_weights(two_model_inputs(mu2=2.0))
    assert np.isclose(w[0], 1.0 / (1.0 + np.exp(-2.0)), rtol=1e-14)
    val = design_aw(two_model_inputs(mu2=2.0))
    assert np.isclose(val, w @ [0.5, 0.5], rtol=1e-14)


def test_aw_prefers_separated_models():
    assert design_aw(two_model_inputs(mu2=3.0)) > design_aw(two_model_inputs(mu2=0.5))


def test_gaussian_logpdf_matches_scipy():
    from scipy.stats import multivariate_normal

    rng = np.random.default_rng(0)
    mu = rng.normal(size=3)
    A = rng.normal(size=(3, 3))
    cov = A @ A.T + np.eye(3)
    y = rng.normal(size=3)
    assert np.isclose(
        gaussian_logpdf(y, mu, cov),
        multivariate_normal.logpdf(y, mu, cov),
        rtol=1e-10,
    )


def test_posterior_update_hand_value():
    # scalar observation y=0.25 under N(0,1) vs N(1,1), flat prior:
    # pi_1 = 1 / (1 + exp(logL2 - logL1)) with logL2-logL1 = -0.25
    mus = np.array([[0.0], [1.0]])
    covs = np.array([[[1.0]], [[1.0]]])
    pi = update_posteriors(np.array([0.5, 0.5]), np.array([0.25]), mus, covs)
    expect = 1.0 / (1.0 + np.exp(-0.25))
    assert np.isclose(pi[0], expect, rtol=1e-12)
    assert np.isclose(pi.sum(), 1.0, atol=1e-14)


def test_posterior_update_exchangeable_under_permutation():
    rng = np.random.default_rng(1)
    mus = rng.normal(size=(3, 2))
    covs = np.stack([np.eye(2) * s for s in (0.5, 1.0, 2.0)])
    priors = np.array([0.2, 0.3, 0.5])
    y = rng.normal(size=2)
    pi = update_posteriors(priors, y, mus, covs)
    perm = np.array([2, 0, 1])
    pi_p = update_posteriors(priors[perm], y, mus[perm], covs[perm])
    assert np.allclose(pi_p, pi[perm], rtol=1e-12)


def test_posterior_update_keeps_zero_prior_dead():
    mus = np.array([[0.0], [0.1]])
    covs = np.array([[[1.0]], [[1.0]]])
    pi = update_posteriors(np.array([1.0, 0.0]), np.array([0.0]), mus, covs)
    assert pi[1] == 0.0


def test_all_likelihoods_zero_raises():
    mus = np.array([[0.0], [0.0]])
    covs = np.array([[[1e-300]], [[1e-300]]])
    with np.errstate(over="ignore"):
        with pytest.raises(AllLikelihoodsZero):
            update_posteriors(np.array([0.5, 0.5]), np.array([1e160]), mus, covs)


def _line_model():
    return ParametricModel(
        name="line",
        design_space=DesignSpace(np.array([[0.0, 10.0]])),
        parameter_space=ParameterSpace(np.array([[-5.0, 5.0]])),
        output_dim=2,
        evaluator=lambda x, th: np.array([th[0] * x[0], th[0] + x[0]]),
    )


def test_chi2_zero_residual_passes():
    model = _line_model()
    theta = np.array([1.2])
    ds = ExperimentDataset(model.design_space, 2)
    for x in (1.0, 2.0, 5.0):
        ds.append(np.array([x]), model.evaluate(np.array([x]), theta))
    stat, dof, ok = chi2_test(model, ds, theta, NoiseModel(np.eye(2) * 0.1))
    assert stat == 0.0 and dof == 3 * 2 - 1 and ok


def test_chi2_rejects_gross_misfit():
    model = _line_model()
    theta = np.array([1.2])
    ds = ExperimentDataset(model.design_space, 2)
    for x in (1.0, 2.0, 5.0):
        ds.append(np.array([x]), model.evaluate(np.array([x]), theta) + 5.0)
    stat, dof, ok = chi2_test(model, ds, theta, NoiseModel(np.eye(2) * 1e-2))
    assert not ok
    assert stat > chi2_dist.ppf(0.95, dof)


def test_chi2_invariant_under_output_rotation():
    # rotating outputs and transforming the noise accordingly leaves the
    # weighted residual statistic unchanged
    model = _line_model()
    theta = np.array([0.7])
    rng = np.random.default_rng(2)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    cov = np.array([[0.2, 0.05], [0.05, 0.3]])

    ds = ExperimentDataset(model.design_space, 2)
    rot = ExperimentDataset(model.design_space, 2)
    rot_model = ParametricModel(
        name="rot",
        design_space=model.design_space,
        parameter_space=model.parameter_space,
        output_dim=2,
        evaluator=lambda x, th: Q @ model.evaluator(x, th),
    )
    for x in (1.0, 3.0, 7.0):
        y = model.evaluate(np.array([x]), theta) + rng.normal(0, 0.3, 2)
        ds.append(np.array([x]), y)
        rot.append(np.array([x]), Q @ y)
    s1, _, _ = chi2_test(model, ds, theta, NoiseModel(cov))
    s2, _, _ = chi2_test(rot_model, rot, theta, NoiseModel(Q @ cov @ Q.T))
    assert np.isclose(s1, s2, rtol=1e-10)


def test_chi2_insufficient_data():
    from seqdisc.exceptions import InsufficientData

    model = _line_model()
    ds = ExperimentDataset(model.design_space, 2)
    with pytest.raises(InsufficientData):
        chi2_test(model, ds, np.array([0.0]), NoiseModel(np.eye(2)))


def test_akaike_weights_sum_and_shift_invariance():
    aic = np.array([10.0, 12.0, 30.0])
    w = akaike_weights(aic)
    assert abs(w.sum() - 1.0) < 1e-12
    assert np.allclose(w, akaike_weights(aic + 123.4), rtol=1e-12)
    assert np.isclose(w[0] / w[1], np.exp(1.0), rtol=1e-12)


def test_aic_from_loglik():
    assert aic_from_loglik(-10.0, 4) == 28.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**16))
def test_akaike_weights_always_normalised(seed):
    aic = np.random.default_rng(seed).uniform(-500, 500, 5)
    w = akaike_weights(aic)
    assert abs(w.sum() - 1.0) < 1e-12
    assert np.all(w >= 0)


def make_state(pi=None, chi2_pass=None, weights=None):
    n = 3
    return DiscriminationState(
        posteriors=np.array(pi if pi is not None else [1 / 3] * 3),
        chi2_stats=np.zeros(n),
        chi2_pass=np.array(chi2_pass if chi2_pass is not None else [True] * 3),
        aic=np.zeros(n),
        weights=np.array(weights if weights is not None else [1 / 3] * 3),
    )


def test_termination_pi_threshold():
    s = check_termination(make_state(pi=[0.9995, 0.0005, 0.0]), "pi", 3, 40)
    assert s.status == "decided" and s.winner == 0
    s = check_termination(make_state(pi=[0.9, 0.1, 0.0]), "pi", 3, 40)
    assert s.status == "ongoing"


def test_termination_chi2_rules():
    s = check_termination(make_state(chi2_pass=[False, True, False]), "chi2", 1, 40)
    assert s.status == "decided" and s.winner == 1
    s = check_termination(make_state(chi2_pass=[False] * 3), "chi2", 1, 40)
    assert s.status == "all-rejected"
    s = check_termination(make_state(chi2_pass=[True, True, False]), "chi2", 1, 40)
    assert s.status == "ongoing"


def test_termination_budget_exhaustion():
    s = check_termination(make_state(), "pi", 40, 40)
    assert s.status == "budget-exhausted"
    s = check_termination(make_state(weights=[0.9999, 1e-4, 0.0]), "aic", 40, 40)
    assert s.status == "decided" and s.winner == 0  # decision wins over budget


def test_state_dict_round_trip():
    s = make_state(pi=[0.2, 0.3, 0.5])
    s.status, s.winner = "decided", 2
    clone = DiscriminationState.from_dict(s.to_dict())
    assert np.allclose(clone.posteriors, s.posteriors)
    assert clone.status == "decided" and clone.winner == 2
