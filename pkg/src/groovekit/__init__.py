"""groovekit: drum groove corpus tools.

MIDI ingestion and 16th-note quantization, the drumroll text codec,
prompt/completion generation baselines, and pattern-and-fill structural
evaluation, with a CLI tying the pipeline together (``groovekit --help``).
"""

from .dataset import (
    CorpusStats,
    DatasetRecord,
    MissingColumn,
    Rejection,
    SPLITS,
    STYLE_BUCKETS,
    build_corpus,
    emit_finetune_records,
    filter_corpus,
    load_metadata,
    style_bucket,
)
from .drumroll import (
    Anomaly,
    BadCharacter,
    BadLineLength,
    DrumrollDoc,
    DrumrollError,
    EmptyInput,
    END,
    MisplacedSep,
    MissingEnd,
    PartialMeasure,
    SEP,
    TrailingContent,
    decode_repair,
    decode_strict,
    encode,
    encode_fragment,
    iter_documents,
)
from .evaluate import (
    ClusterResult,
    EmptySet,
    EvalReport,
    GrooveAnalysis,
    GrooveJudgment,
    JudgeConfig,
    VariationProfile,
    aggregate,
    analyze_groove,
    backbeat_consistency,
    duplication_histogram,
    judge,
    kmeans_1d,
    measure_distance,
    variation_profile,
)
from .generate import (
    CompletionRequest,
    GeneratedGroove,
    SplitMix64,
    export_prompts,
    ingest_completions,
    random_complete,
    repeat_complete,
)
from .grid import (
    DrumLane,
    DrumMap,
    DrumMapError,
    GrooveGrid,
    Measure,
    Rejected,
    default_drum_map,
    grid_index,
    load_drum_map,
    parse_drum_map,
    quantize,
    roland_td11_drum_map,
    trim_and_truncate,
)
from .smf import (
    MalformedHeader,
    MalformedTrack,
    NoteEvent,
    SmfError,
    SmfHeader,
    TimeSignature,
    TruncatedTrack,
    UnsupportedDivision,
    UnsupportedFormat,
    parse_smf,
)

__version__ = "0.1.0"

__all__ = [
    "Anomaly",
    "BadCharacter",
    "BadLineLength",
    "ClusterResult",
    "CompletionRequest",
    "CorpusStats",
    "DatasetRecord",
    "DrumLane",
    "DrumMap",
    "DrumMapError",
    "DrumrollDoc",
    "DrumrollError",
    "EmptyInput",
    "EmptySet",
    "END",
    "EvalReport",
    "GeneratedGroove",
    "GrooveAnalysis",
    "GrooveGrid",
    "GrooveJudgment",
    "JudgeConfig",
    "MalformedHeader",
    "MalformedTrack",
    "Measure",
    "MisplacedSep",
    "MissingColumn",
    "MissingEnd",
    "NoteEvent",
    "PartialMeasure",
    "Rejected",
    "Rejection",
    "SEP",
    "SPLITS",
    "STYLE_BUCKETS",
    "SmfError",
    "SmfHeader",
    "SplitMix64",
    "TimeSignature",
    "TrailingContent",
    "TruncatedTrack",
    "UnsupportedDivision",
    "UnsupportedFormat",
    "VariationProfile",
    "aggregate",
    "analyze_groove",
    "backbeat_consistency",
    "build_corpus",
    "decode_repair",
    "decode_strict",
    "default_drum_map",
    "duplication_histogram",
    "emit_finetune_records",
    "encode",
    "encode_fragment",
    "export_prompts",
    "filter_corpus",
    "grid_index",
    "ingest_completions",
    "iter_documents",
    "judge",
    "kmeans_1d",
    "load_drum_map",
    "load_metadata",
    "measure_distance",
    "parse_drum_map",
    "parse_smf",
    "quantize",
    "random_complete",
    "repeat_complete",
    "roland_td11_drum_map",
    "style_bucket",
    "trim_and_truncate",
    "variation_profile",
]
