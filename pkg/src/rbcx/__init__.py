"""Radiograph retrieval with single Radon projections and Radon barcodes."""

from .errors import (
    ImageFormatError,
    IndexBoundsError,
    IndexFormatError,
    IrmaParseError,
    RbcxError,
    ValidationError,
)
from .imaging import (
    PreprocessConfig,
    apply_circular_mask,
    downsample,
    load_image,
    preprocess,
    remove_bright_landmarks,
    square_pad,
)
from .index import (
    Index,
    Mode,
    QueryResult,
    RetrievalConfig,
    SelectionPool,
    assemble_pool,
    build_index,
    exploit_search,
    extract_features,
    retrieve,
    search_projection,
)
from .irma import (
    BranchingScheme,
    ErrorReport,
    IrmaCode,
    axis_error,
    code_error,
    evaluate_run,
    parse_code,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .lbp import lbp_distance, lbp_histogram
from .persistence import load_index, save_index
from .radon import (
    DEFAULT_ANGLES,
    BarcodeMethod,
    ProjectionSet,
    RadonBarcode,
    RadonProjection,
    binarize_median,
    binarize_minmax,
    make_barcode,
    project_all,
    radon_projection,
    shifted_distance,
)

__version__ = "0.1.0"
