"""Design-based estimation of spillover effects on networks."""

__version__ = "0.1.0"

from .errors import (InconsistentProbabilityError, ParameterError, ParseError,  # noqa: E402
                     UndefinedEstimateError)
from .netgraph import (Graph, generate_small_world, load_graph, remove_ties,  # noqa: E402
                       save_graph, second_degree_set)
from .design import (AssignmentSet, Clustering, HierarchicalAssignment,  # noqa: E402
                     bernoulli_assignment, cluster_randomization, complete_randomization,
                     enumerate_support, epsilon_net_clustering, two_stage_assignment)
from .exposure import (Exposure, ExposureMapping, ExposureProbabilities,  # noqa: E402
                       exposure_probabilities, map_exposures, misspecify)
from .outcomes import (DGPSpec, PotentialOutcomeTable, dilated_baseline,  # noqa: E402
                       dilated_outcomes, generate_outcomes, realize_observed)
from .estimators import (EstimateReport, constant_effects_variance,  # noqa: E402
                         conservative_variance, estimate_contrast, hajek_contrast,
                         hajek_mean, ht_contrast, ht_total)
from .hierarchical import (HierarchicalDataset, MarginalEffectsReport,  # noqa: E402
                           load_hierarchical, marginal_effects)
