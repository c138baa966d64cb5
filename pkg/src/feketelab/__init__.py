"""feketelab: weighted Fekete arrays, Vandermonde/Gram/Bergman machinery,
and equidistribution diagnostics on meshes of compact sets."""

from .basis import GradedBasis, MultiIndex, dims, enumerate_basis, eval_monomials
from .domains import Mesh, Shape, WeightFn, build_mesh, make_weight, neighborhood_mesh, shape_from_spec
from .vandermonde import LogScaledValue, delta_n_estimate, vdm_logabs, weighted_vdm_logabs
from .fekete import (
    FeketeArray,
    FeketeRecord,
    aawf_array,
    brute_force_fekete,
    exchange_refine,
    extract,
    greedy_fekete,
    make_eps_schedule,
    make_record,
)
from .gram import (
    DiscreteMeasure,
    GramMatrix,
    SingularGramError,
    bergman_at_atoms,
    bergman_function,
    check_bergman_identity,
    check_detG_identity,
    gram_matrix,
    logdet_gram,
    optimal_measure,
)
from .perturbation import (
    ConcavityReport,
    PolyProbe,
    derivative_experiment,
    concavity_scan,
    f_n,
    fn_prime_direct,
    fn_prime_fd,
    perturbed_weight,
    probe_from_spec,
)
from .convergence import (
    ConvergenceReport,
    EquilibriumReference,
    arcsine_reference,
    bidisk_reference,
    circle_reference,
    diagonal_diameter_scan,
    empirical_measure,
    extrapolate_limit,
    gaussian_disk_reference,
    moment_vector,
    radial_equilibrium,
    reference_for,
    smoothed_energy,
    convergence_experiment,
    weak_star_discrepancy,
)

__version__ = "0.1.0"
