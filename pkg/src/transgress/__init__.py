"""Secondary Chern-Euler transgression form on sphere bundles, checked by quadrature.

Submodules: :mod:`exterior` (differential forms on chart boxes), :mod:`geometry`
(framed bundles with connections), :mod:`quadrature`, :mod:`transgression`
(Ψ, the Euler form, sections), :mod:`indices` (indices of zeros) and
:mod:`harness` (scenarios, verifiers, CLI).
"""
from .exterior import (ChartDomain, KForm, SmoothMap, differential, exterior_derivative, matwedge,
                       pullback, wedge)
from .geometry import (Chart, FramedGeometry, Region, StabilizedGeometry, builtin_geometry,
                       curvature_from_connection, frame_change, levi_civita_from_metric, stabilize)
from .indices import IsolatedZero, index, index_by_degree, index_nondegenerate, sum_indices, winding_number
from .quadrature import QuadratureSpec, boundary_integral, integrate, integrate_over_atlas
from .transgression import (BundleSection, SphereBundleMap, euler_form, fiber_map, psi, psi_j,
                            section_from_ambient_field, section_from_vector_field, sphere_volume, theta)

__version__ = "0.1.0"
