"""Generalized Kronecker product decomposition of tensors and convolutions."""

__version__ = "0.1.0"

from .complexity import (
    ConfigCandidate,
    count_macs_direct,
    count_macs_kron,
    enumerate_candidates,
    flops_reduction,
    memory_reduction,
    select_configuration,
)
from .decomposition import (
    FactorShapePair,
    GkpdDecomposition,
    gkpd_solve,
    rearrange_a,
    rearrange_b,
    rearrange_w,
    reconstruct,
    reconstruction_error,
)
from .errors import GkpdError, NumericError, ParameterError, ShapeError
from .kronconv import (
    ConvFactorPair,
    ConvGeometry,
    MacCounter,
    conv2d_direct,
    kron_conv_forward,
    kron_conv_sum_forward,
    kron_matvec,
    lemma1_check,
)
from .linalg import SvdResult, svd_full, svd_truncated
from .tensor import fold, frobenius_norm, kron, split_index, unfold
