"""Symmetric tensor fields, ray transforms and CGO-based recovery experiments."""
from ._kernels import HAVE_COMPILED
from .cgo import PhaseBundle, PhaseError, RotatedFrame, build_phases
from .mrt_inversion import injectivity_verdict
from .ray_transform import Ray, momentum_transform
from .recovery import CoefficientSet, decay_sweep, induction_driver, limiting_integral
from .tensor_algebra import SymTensor, i_delta, sym_product, symmetrize
from .tensor_fields import GridField, inner_derivative, read_field, saint_venant, write_field

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED",
    "CoefficientSet",
    "GridField",
    "PhaseBundle",
    "PhaseError",
    "Ray",
    "RotatedFrame",
    "SymTensor",
    "build_phases",
    "decay_sweep",
    "i_delta",
    "induction_driver",
    "injectivity_verdict",
    "inner_derivative",
    "limiting_integral",
    "momentum_transform",
    "read_field",
    "saint_venant",
    "sym_product",
    "symmetrize",
    "write_field",
]
