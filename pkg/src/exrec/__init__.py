"""exrec: two-phase expert recommendation for Stack Exchange style Q&A sites.

Phase 1 matches a question against answer text (TF-IDF cosine); phase 2
re-ranks the candidates by ExpertiseRank on the asker->answerer graph fused
with reputation features.
"""
from .corpus import CommunityUser, CorpusStore, IngestSummary, Post, PostType, ingest_dump
from .errors import DumpParseError, EmptyQueryError, ExrecError, IntegrityError, NotFoundError
from .evaluation import average_precision, evaluate, mean_average_precision, precision_at_n
from .graph import QaGraph, build_graph, expertise_rank
from .index import TfIdfIndex, build_index, match_experts
from .pipeline import FusionConfig, RankedExpertList, explain, recommend
from .reputation import compute_features, significance

__version__ = "0.1.0"

__all__ = [
    "CommunityUser", "CorpusStore", "IngestSummary", "Post", "PostType", "ingest_dump",
    "DumpParseError", "EmptyQueryError", "ExrecError", "IntegrityError", "NotFoundError",
    "average_precision", "evaluate", "mean_average_precision", "precision_at_n",
    "QaGraph", "build_graph", "expertise_rank",
    "TfIdfIndex", "build_index", "match_experts",
    "FusionConfig", "RankedExpertList", "explain", "recommend",
    "compute_features", "significance",
]
