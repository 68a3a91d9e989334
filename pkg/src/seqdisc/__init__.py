"""Sequential design of experiments for model discrimination."""

from .campaign import Campaign, CampaignConfig, load_case, trace_to_csv
from .case_studies import CaseStudy, builtin_case_study_1, builtin_case_study_2
from .discrimination import (
    CriterionInputs,
    DiscriminationState,
    akaike_weights,
    chi2_test,
    design_aw,
    design_bf,
    design_bh,
    update_posteriors,
)
from .exceptions import SeqDiscError
from .external import external_model
from .marginal import (
    MarginalPrediction,
    ParameterPosterior,
    fit_parameters,
    laplace_covariance,
    marginal_predict,
    marginal_predict_t1,
    marginal_predict_t2,
)
from .models import (
    DesignSpace,
    ExperimentDataset,
    NoiseModel,
    ParameterSpace,
    ParametricModel,
)
from .ode import OdeSystem, integrate_ode
from .surrogate import ModelSurrogate, SurrogateGP

__version__ = "0.1.0"

__all__ = [
    "Campaign",
    "CampaignConfig",
    "CaseStudy",
    "CriterionInputs",
    "DesignSpace",
    "DiscriminationState",
    "ExperimentDataset",
    "MarginalPrediction",
    "ModelSurrogate",
    "NoiseModel",
    "OdeSystem",
    "ParameterPosterior",
    "ParameterSpace",
    "ParametricModel",
    "SeqDiscError",
    "SurrogateGP",
    "akaike_weights",
    "builtin_case_study_1",
    "builtin_case_study_2",
    "chi2_test",
    "integrate_ode",
    "design_aw",
    "design_bf",
    "design_bh",
    "external_model",
    "fit_parameters",
    "laplace_covariance",
    "load_case",
    "marginal_predict",
    "marginal_predict_t1",
    "marginal_predict_t2",
    "trace_to_csv",
    "update_posteriors",
]
