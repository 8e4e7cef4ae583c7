"""Sparse image representation with mixed discrete-cosine/B-spline dictionaries.

Builds redundant 1D dictionaries merging cosine and sampled B-spline atoms,
approximates image blocks greedily against their separable 2D tensor
products, and measures the resulting sparsity against block-DCT and CDF 9/7
wavelet thresholding baselines.
"""

from .baselines import (
    TransformCoeffs,
    cdf97_forward,
    cdf97_inverse,
    dct2_block_forward,
    dct2_block_inverse,
    threshold_to_psnr,
)
from .codec import (
    EncodedImage,
    ImageGray8,
    SparsityReport,
    decode,
    encode,
    psnr,
    psnr_to_block_sse,
    read_pgm,
    read_sic,
    write_pgm,
    write_sic,
)
from .dictionary import (
    Dictionary1D,
    Dictionary2D,
    DictionaryKind,
    MatrixDictionary,
    assemble_dictionary,
    build_cosine_dict,
    build_spline_subdict,
    correlate_all,
    eval_bspline,
    sample_prototype,
)
from .pursuit import (
    PursuitExhaustedError,
    PursuitState,
    SparseBlock,
    StoppingRule,
    orthogonalize_and_update,
    run_omp,
    select_atom,
)

__version__ = "0.1.0"

__all__ = [
    "Dictionary1D",
    "Dictionary2D",
    "DictionaryKind",
    "EncodedImage",
    "ImageGray8",
    "MatrixDictionary",
    "PursuitExhaustedError",
    "PursuitState",
    "SparseBlock",
    "SparsityReport",
    "StoppingRule",
    "TransformCoeffs",
    "assemble_dictionary",
    "build_cosine_dict",
    "build_spline_subdict",
    "cdf97_forward",
    "cdf97_inverse",
    "correlate_all",
    "dct2_block_forward",
    "dct2_block_inverse",
    "decode",
    "encode",
    "eval_bspline",
    "orthogonalize_and_update",
    "psnr",
    "psnr_to_block_sse",
    "read_pgm",
    "read_sic",
    "run_omp",
    "sample_prototype",
    "select_atom",
    "threshold_to_psnr",
    "write_pgm",
    "write_sic",
]
