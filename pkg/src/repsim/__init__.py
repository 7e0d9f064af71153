"""Layer similarity (RV, RV2, linear CKA) and a toy network simulator."""
from .activation_io import (
    ActivationSet, decimate, decimate_frames, global_average_pool, load_activation_set,
    read_array, read_matrix, write_activation_set, write_matrix,
)
from .errors import (
    ConfigError, DegenerateInput, EmptyResult, FormatError, ManifestError, ShapeMismatch,
)
from .metrics import (
    CrossStats, DataMatrix, SimilarityMatrix, center_columns, cross_gram_stats, linear_cka,
    pairwise_similarity, rv, rv2,
)

__version__ = "0.1.0"
