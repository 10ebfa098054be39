"""Eigenfunction triple-product spectral measures on the flat torus and the round sphere."""

from .errors import ConstructionError, DomainError, ResourceError
from .geometry import (
    FrequencyTriple,
    Kind,
    ManifoldDescriptor,
    TriangleClass,
    classify,
    heron_area,
    interface_integral,
    leray_volume,
    leray_volume_oracle,
    unit_sphere_volume,
)
from .lattice import TorusMeasure, annulus_count, enumerate_shell, torus_measure, triangle_count
from .measure import JointSpectralMeasure, SpectralAtom, box_measure, tail_sum
from .smoothing import SmoothingKernel, build_kernel, convolve, eval_rho, interface_sum
from .sphere import gaunt_square_sum, sphere_measure, three_j_zero
from .verify import (
    VerificationReport,
    bad_cone_scan,
    good_cone_scan,
    interface_scan,
    main_term,
    tail_scan,
    weyl_check,
)

__version__ = "0.1.0"
