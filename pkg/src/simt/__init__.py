"""Prefix-to-prefix simultaneous translation toolkit.

Pipeline stages: pseudo prefix-pair extraction from any forced-prefix
translation model, streaming READ/WRITE simulation under pluggable
policies, and quality-latency scoring (corpus BLEU vs. Average Lagging).
"""

__version__ = "0.1.0"

from .corpus import (
    FW_TOKEN,
    PENDING_TOKEN,
    SentencePair,
    TokenSeq,
    ToyLexicon,
    generate_toy_corpus,
    load_lexicon,
    read_parallel_corpus,
    save_lexicon,
    toy_translate,
    write_parallel_corpus,
)
from .errors import (
    AlignmentError,
    ConfigError,
    CorpusShapeError,
    ExportError,
    GatewayError,
    MalformedSentenceError,
    MetricInputError,
    OOVError,
    PolicyError,
    SimtError,
)
from .extract import (
    ExtractionConfig,
    PrefixPair,
    export_joint_corpus,
    extract_corpus,
    extract_prefix_pairs,
    read_prefix_pairs,
    write_prefix_pairs,
)
from .gateway import (
    Candidate,
    CandidateSet,
    ExternalEndpoint,
    ToyEndpoint,
    TranslateRequest,
    endpoint_from_spec,
    is_prefix_of_candidates,
    translate,
)
from .metrics import (
    BleuScore,
    LatencyScore,
    QualityLatencyPoint,
    average_lagging,
    corpus_bleu,
    score_traces,
    sweep,
    write_sweep_csv,
)
from .policies import (
    PolicyConfig,
    ReadDecision,
    ScriptedClassifier,
    WireClassifier,
    decide,
    make_read_policy,
)
from .simulate import (
    DecodingTrace,
    SourceSentence,
    TraceEvent,
    WritePolicyConfig,
    read_traces,
    render_trace,
    simulate_corpus,
    simulate_sentence,
    write_traces,
)
