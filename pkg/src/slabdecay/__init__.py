"""Surface-measure Fourier decay, slab measures and lattice discrepancy."""
__version__ = "0.1.0"

from .surface import (  # noqa: E402
    CATALOG_BODIES,
    CATALOG_PATCHES,
    ClosedBody,
    ConvexPatch,
    Direction,
    make_catalog_patch,
    make_closed_body,
)
from .geometry import fit_power_law, max_slab, slab_measure, support_min  # noqa: E402
from .oscint import carved_transform, closed_transform, mu_hat  # noqa: E402
from .lattice import count_points, discrepancy_profile, predicted_exponent  # noqa: E402

__all__ = [
    "CATALOG_BODIES", "CATALOG_PATCHES", "ClosedBody", "ConvexPatch", "Direction",
    "carved_transform", "closed_transform", "count_points", "discrepancy_profile",
    "fit_power_law", "make_catalog_patch", "make_closed_body", "max_slab", "mu_hat",
    "predicted_exponent", "slab_measure", "support_min",
]
