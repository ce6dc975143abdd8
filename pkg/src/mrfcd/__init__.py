"""Lower-bound laboratory for structural change detection in Ising and Gaussian MRFs."""

from mrfcd.errors import (
    BoundNotApplicableError,
    EnumerationCapError,
    MRFCDError,
    NotPositiveDefiniteError,
    ValidationError,
)
from mrfcd.samples import SampleSet
from mrfcd.ising import (
    IsingModel,
    class_membership,
    clique_log_partition,
    clipped_clique_log_partition,
    ising_log_partition,
    ising_log_prob,
    ising_sample,
    lemma2_bound,
    lemma2_exact_V,
)
from mrfcd.gaussian import (
    GaussianModel,
    gamma_of,
    gaussian_log_density,
    gaussian_sample,
    pairwise_delta_det,
    single_edge_precision,
)
from mrfcd.ensembles import (
    ChangeEnsemble,
    gaussian_single_edge_ensemble,
    ising_clique_ensemble,
    ising_single_edge_ensemble,
    verify_structural_difference,
)
from mrfcd.likelihood import (
    log_lr,
    log_lr_gaussian_single_edge,
    log_lr_generic,
    log_lr_ising_clique,
    log_lr_ising_single_edge,
    np_test,
)
from mrfcd.lecam import (
    BoundReport,
    bound_report,
    chi2_exact,
    chi2_gaussian_single_edge_bound,
    chi2_gaussian_single_edge_exact,
    chi2_ising_clique_bound,
    chi2_ising_clique_exact,
    chi2_ising_single_edge,
    chi2_lift,
    chi2_monte_carlo,
    risk_lower_bound,
    sample_threshold,
    tv_exact,
)
from mrfcd.risk import (
    RiskReport,
    ml_structure_detector,
    risk_vs_n_sweep,
    simulate_risk,
)

__version__ = "0.1.0"
