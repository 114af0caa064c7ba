"""False-premise detection over knowledge graphs with logical-form retrieval."""

from .errors import (
    AllVotesUnparseable,
    ConfigError,
    DimensionMismatch,
    EmptyDataset,
    EmptyGraph,
    FormatError,
    IdMismatch,
    LengthMismatch,
    MissingComponent,
    NoCandidates,
    ParseError,
    PremiseGuardError,
    ProviderError,
    TooFewPairs,
    UnparseableVerdict,
    ZeroVector,
)
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph, Subgraph, Triple, candidate_triples, link_entity, load_triples, normalize_surface
from .logiform import (
    LogicalForm,
    TripleQuery,
    extract_logical_form,
    mask_component,
    parse_logical_form,
    serialize_canonical,
    to_triple_query,
)
from .providers import (
    CachedChat,
    CachedEmbedder,
    ChatProvider,
    ChatRequest,
    HashingEmbedder,
    HTTPChat,
    HTTPEmbedder,
    ScriptedChat,
    cosine,
    load_transcripts,
    mock_embed,
)
from .retrieve import (
    PCSTParams,
    PrizeAssignment,
    RetrievalQuery,
    RetrievalResult,
    assign_prizes,
    retrieve_embedding,
    retrieve_llm_scored,
    retrieve_pcst,
    solve_pcst,
)
from .verdict import DetectionConfig, Verdict, detect, detect_direct, detect_with_evidence, parse_yes_no
from .mitigate import AnsweredQuery, MitigationStrategy, answer, augment_query, grade_answer
from .datasets import Dataset, DatasetRecord, load_dataset
from .metrics import ConfusionCounts, MetricsReport, PairedTTestResult, compute_metrics, hop_breakdown, paired_t_test
from .evaluation import run_ablation, run_detection_eval, run_mitigation_eval

__version__ = "0.1.0"
