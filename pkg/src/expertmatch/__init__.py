"""Expertise retrieval benchmark for distributed peer review.

Proposals act as queries and reviewers as documents: every scoring method
produces an expertise matrix over (proposal, reviewer) pairs, which the
evaluation layer ranks against designated-reviewer gold pairs and
self-reported expertise grades.
"""

from .corpus import (
    Corpus,
    Grade,
    Proposal,
    PublicationRecord,
    QueryConfig,
    ReviewerProfile,
    SelfReportedLabel,
    build_reviewer_documents,
    load_corpus,
    save_corpus,
    select_publications,
)
from .embeddings import (
    EmbeddingFile,
    build_pooled_vectors,
    pool_vectors,
    read_embedding_file,
    write_embedding_file,
)
from .errors import (
    CorpusValidationError,
    EmbeddingFormatError,
    ExpertMatchError,
    InsufficientPairsError,
    ScoreParseError,
    ScoreRangeError,
)
from .evaluation import (
    EvalConfig,
    MethodEvaluation,
    MetricSummary,
    RankResult,
    WilcoxonResult,
    bootstrap_ci,
    compare_methods,
    designated_rank,
    evaluate_matrix,
    hit_at_k,
    mrr,
    ndcg_at_k,
    wilcoxon_signed_rank,
    zscore,
)
from .keywords import KeywordScore, KeywordVector, keyword_similarity, keyword_vector
from .lda import LdaConfig, LdaModel, fit_lda, truncate_theta
from .llm import LlmConfig, PairScore, build_prompt, parse_score, score_pair
from .similarity import (
    ExpertiseMatrix,
    MatrixStats,
    Representation,
    build_representation,
    cosine,
    expertise_matrix,
    l2_normalize,
    load_matrix,
    matrix_from_representation,
    matrix_stats,
    save_matrix,
)
from .synth import AdsQuery, generate_synthetic_corpus
from .tfidf import idf, tfidf_vectorize, tokenize

__version__ = "0.1.0"

__all__ = [
    "AdsQuery",
    "Corpus",
    "CorpusValidationError",
    "EmbeddingFile",
    "EmbeddingFormatError",
    "EvalConfig",
    "ExpertMatchError",
    "ExpertiseMatrix",
    "Grade",
    "InsufficientPairsError",
    "KeywordScore",
    "KeywordVector",
    "LdaConfig",
    "LdaModel",
    "LlmConfig",
    "MatrixStats",
    "MethodEvaluation",
    "MetricSummary",
    "PairScore",
    "Proposal",
    "PublicationRecord",
    "QueryConfig",
    "RankResult",
    "Representation",
    "ReviewerProfile",
    "ScoreParseError",
    "ScoreRangeError",
    "SelfReportedLabel",
    "WilcoxonResult",
    "bootstrap_ci",
    "build_pooled_vectors",
    "build_prompt",
    "build_representation",
    "build_reviewer_documents",
    "compare_methods",
    "cosine",
    "designated_rank",
    "evaluate_matrix",
    "expertise_matrix",
    "fit_lda",
    "generate_synthetic_corpus",
    "hit_at_k",
    "idf",
    "keyword_similarity",
    "keyword_vector",
    "l2_normalize",
    "load_corpus",
    "load_matrix",
    "matrix_from_representation",
    "matrix_stats",
    "mrr",
    "ndcg_at_k",
    "parse_score",
    "pool_vectors",
    "read_embedding_file",
    "save_corpus",
    "save_matrix",
    "score_pair",
    "select_publications",
    "tfidf_vectorize",
    "tokenize",
    "truncate_theta",
    "wilcoxon_signed_rank",
    "write_embedding_file",
    "zscore",
]
