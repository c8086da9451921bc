"""fracspec: boundary spectral data, forward maps, and potential
reconstruction for the 1-D restricted fractional Laplacian with potential."""

from .opcore import (DiscreteOperator, FractionalOrder, GammaFactors, Grid1D,
                     Potential, add_potential, assemble_fractional_laplacian,
                     build_grid, bump_profile, gamma_factors, make_potential,
                     normalization_constant)
from .spectral import (AdmissibilityConstants, SpectralData, admissibility,
                       boundary_trace, check_trace_bound, default_mode_count,
                       eigendecompose, validate_theta_admissible)
from .forward import (BoundaryFunction, DNSample, EllipticSolution,
                      ParabolicSolution, boundary_function, boundary_pairing,
                      dn_map, dn_series_direct, extend_parabolic,
                      ibp_cross_residual, laplace_boundary, laplace_dn,
                      neumann_difference_series, solve_elliptic_series,
                      solve_parabolic, verify_laplace_consistency)
from .waveobs import (AdjointHeatSolution, WaveState, adjoint_heat,
                      density_gramian, equipartition_residual, evolve_wave,
                      heat_observability_check, pohozaev_residual, wave_energy,
                      wave_observability)
from .inverse import (ReconstructionResult, SpectralMisfit, TransportReport,
                      UniquenessConfig, eig_derivative, reconstruct,
                      spectral_misfit, trace_derivative, transport_residual,
                      uniqueness_experiment)
from .cache import cache_key, cache_path, load_cache, save_cache

__version__ = "0.1.0"
