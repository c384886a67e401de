"""Zero-range-potential scattering for the 3D Laplacian.

Resolvents of point-potential perturbations via the Krein formula, on-shell
scattering matrices in finite-rank form, incremental point addition with
determinant recursions, and sphere/volume quadrature supporting both.
"""

from .config import (
    CouplingOperator,
    PointConfiguration,
    SeparationData,
    SummabilityReport,
    build_configuration,
    check_summability,
    lattice_line,
    separation_sequence,
)
from .greens import QMatrix, SpectralPoint, free_green, overlap_numeric, overlap_oracle, q_matrix
from .incremental import (
    COMPOSITION_D_EXPONENT,
    DET_D_EXPONENT,
    IncrementalState,
    UpdateData,
    add_point,
    det_recursion,
    direct_state,
    remove_last_point,
    resolve_d_exponent,
    s_composition_update,
    s_rank_one_update,
    update_data,
)
from .resolvent import (
    VolumeGrid,
    apply_free_resolvent,
    apply_perturbed_resolvent,
    green_columns,
    hilbert_identity_residual,
    make_box_grid,
    make_grid as make_volume_grid,
    q_identity_residual,
    smallest_singular_value,
)
from .scattering import (
    CrossSectionResult,
    PlaneWaveVectors,
    SMatrixData,
    assemble_s,
    assemble_s_scaled,
    cayley_on_span,
    cross_section,
    det_s,
    gram_analytic,
    gram_quadrature,
    grid_operator_matrix,
    kernel_matrix,
    plane_wave_at,
    plane_wave_vectors,
    s_apply,
    s_kernel,
    unitarity_defect,
    unitarity_defect_dense,
)
from .sphere import SphereGrid, default_resolution, grid_for, inner_product, j_conjugate, make_grid

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
