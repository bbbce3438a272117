"""pecurves: equivalence of paths and oriented curves in (pseudo-)Euclidean
space under the (special) pseudo-orthogonal groups and their motion groups,
over the real or complex numbers."""

from .arclength import (CurveVerdict, MonotoneReparam, PathType, TypedInterval,
                        arc_integral, arc_param, classify_type, curves_equivalent,
                        invert_param, is_nondegenerate, random_reparam, reparam_jet,
                        reparametrize, speed)
from .equivalence import (EquivalenceVerdict, Failure, GroupElement, apply,
                          compose_elements, invert_element, paths_equivalent,
                          recover_linear, recover_translation, sample_group_element)
from .errors import (DegeneratePathError, DimensionMismatchError, EvalDomainError,
                     IndeterminateTailError, IntervalMismatchError, InversionError,
                     JetOrderError, PathParseError, PECurvesError, QuadratureError,
                     SignatureError, StrongRegularityError)
from .forms import (FieldTag, GroupFamily, GroupTag, Signature, e_p_matrix,
                    euclidean_form, h_matrix, membership_defect, pseudo_form)
from .invariants import (FrameMatrices, GeneratorSignature, PointwiseReport,
                         det_m, frame_matrices, frenet_matrix, generator_signature,
                         gram, is_strongly_regular, signature_from_jet)
from .pathexpr import (Expr, Interval, Jet, PathDef, differentiate, eval_expr,
                       eval_jet, parse_expression, parse_path, sample_grid, to_text)

__version__ = "0.1.0"
