"""Texture-capable two-phase segmentation by eigen-patch reconstruction.

Images are segmented by minimizing, per region, a blend of a smoothed
intensity model and the reconstruction error of local patches under a
learned orthonormal patch basis, with the region boundary evolved as a
level set.  See README.md for the energy, defaults, and CLI usage.
"""
from .basis import (DegenerateRegionError, GDConfig, PatchBasis, SolverReport,
                    basis_tile_image, gd_solve_basis, load_basis, mix_basis,
                    projection_energy, reconstruction_error_total, save_basis,
                    svd_solve_basis)
from .images import as_image, as_mask, load_image, save_image
from .kernels import active_backend, available_backends
from .levelset import (LevelSetState, distance_gradient_norm, evolve_step,
                       init_from_mask, label_change_fraction, reinitialize,
                       signed_distance, zero_crossing_displacement)
from .metrics import error_rate_two_phase, evaluate, per_region_error_rates
from .mosaic import (MosaicSpec, TextureDescriptor, make_cross_mosaic,
                     make_mosaic, centered_rect_mask, seed_circles_in_region,
                     seed_circles_mask, template_mask, texture_field)
from .regions import (RegionModel, assign_labels, coupled_error, fit_region,
                      patch_error_map, pc_fit, ps_fit)
from .segment import (NU_SMOOTH, NU_TEXTURE, SegmentationConfig,
                      SegmentationResult, segment_one_vs_all,
                      segment_two_phase)

__version__ = "0.1.0"

__all__ = [
    "DegenerateRegionError", "GDConfig", "PatchBasis", "SolverReport",
    "basis_tile_image", "gd_solve_basis", "load_basis", "mix_basis",
    "projection_energy", "reconstruction_error_total", "save_basis",
    "svd_solve_basis",
    "as_image", "as_mask", "load_image", "save_image",
    "active_backend", "available_backends",
    "LevelSetState", "distance_gradient_norm", "evolve_step",
    "init_from_mask", "label_change_fraction", "reinitialize",
    "signed_distance", "zero_crossing_displacement",
    "error_rate_two_phase", "evaluate", "per_region_error_rates",
    "MosaicSpec", "TextureDescriptor", "make_cross_mosaic", "make_mosaic",
    "centered_rect_mask", "seed_circles_in_region", "seed_circles_mask",
    "template_mask", "texture_field",
    "RegionModel", "assign_labels", "coupled_error", "fit_region",
    "patch_error_map", "pc_fit", "ps_fit",
    "NU_SMOOTH", "NU_TEXTURE", "SegmentationConfig", "SegmentationResult",
    "segment_one_vs_all", "segment_two_phase",
    "__version__",
]
