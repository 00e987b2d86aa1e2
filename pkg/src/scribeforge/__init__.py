"""scribeforge: synthetic handwritten text-line generation and augmentation.

Builds new labeled line images by stacking character fragments cut at
CTC-derived boundaries (StackMix), draws strikethrough-style Bezier scribbles
(handwritten blots), and scores recognition output with CER/WER/ACC.
"""

from .blots import BlotConfig, apply_handwritten_blots, choose_regions, generate_control_points
from .bezier import ControlPolygon, Point2, bernstein, bezier_point, rasterize_stroke, sample_curve
from .config import RunConfig, StackmixConfig, load_run_config
from .ctc import (
    Alphabet,
    BoundarySet,
    PosteriorMatrix,
    SymbolSpan,
    extract_boundaries,
    forced_align,
    frames_to_pixels,
    read_posteriors,
    write_posteriors,
)
from .errors import (
    AlignmentInfeasibleError,
    CorruptBoundaryError,
    InvalidTranscriptError,
    PosteriorFormatError,
    ScribeforgeError,
    UndefinedDenominatorError,
    UnsynthesizableLineError,
)
from .manifest import ManifestRecord, load_manifest, save_manifest
from .metrics import EvalPair, EvalReport, accuracy, cer, evaluate, levenshtein, wer
from .raster import (
    RasterImage,
    Rect,
    composite_ink,
    hstack,
    load_image,
    new_blank,
    resize_to_height,
    save_image,
    vstack,
)
from .rng import RngState, derive_seed
from .stackmix import (
    Fragment,
    FragmentIndex,
    ImageStore,
    MweLexicon,
    SynthesisResult,
    TokenizerBank,
    build_fragment_index,
    build_mwe_lexicons,
    filter_corpus,
    load_boundaries,
    load_index,
    save_boundaries,
    save_index,
    synthesize_line,
    synthesize_page,
    tokenize,
)

__version__ = "0.1.0"
