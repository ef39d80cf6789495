"""Domain adaptation of subword tokenizers without further pretraining.

The toolkit augments a byte-level BPE tokenizer with multi-subtoken
sequences that are markedly more phrase-like in a domain corpus than in a
base corpus, then produces input-space embedding vectors for the new
tokens by subword averaging or by a fitted static-to-input projection.
"""

__version__ = "0.1.0"

from .counts import (
    UnigramTable,
    count_corpus,
    count_unigrams,
    load_table,
    merge_tables,
    save_table,
)
from .embed_init import (
    ContextualInputEmbeddings,
    ProjectionMap,
    fit_projection,
    mean_init,
    project_init,
)
from .errors import (
    AdaptokError,
    ConfigError,
    DataError,
    MissingStaticVector,
    PipelineError,
)
from .pipeline import (
    AugmentationBundle,
    PipelineConfig,
    compression_stats,
    emit_bundle,
    load_bundle,
    run_pipeline,
)
from .selection import (
    AugmentationCandidate,
    SelectionConfig,
    pointwise_kl,
    read_candidates_tsv,
    score_candidates,
    select_augmentations,
    write_candidates_tsv,
)
from .sequences import (
    SequenceDistribution,
    build_sequence_distribution,
    load_distribution,
    phrase_probability,
    save_distribution,
)
from .static_embed import (
    EmbeddingMatrix,
    SgnsConfig,
    TokenizedCorpus,
    load_word2vec_text,
    save_word2vec_text,
    tokenize_for_static,
    train_sgns,
)
from .tokenizer import (
    BpeTokenizer,
    SubwordSequence,
    load_tokenizer,
    load_tokenizer_dir,
)

__all__ = [
    "AdaptokError",
    "AugmentationBundle",
    "AugmentationCandidate",
    "BpeTokenizer",
    "ConfigError",
    "ContextualInputEmbeddings",
    "DataError",
    "EmbeddingMatrix",
    "MissingStaticVector",
    "PipelineConfig",
    "PipelineError",
    "ProjectionMap",
    "SelectionConfig",
    "SequenceDistribution",
    "SgnsConfig",
    "SubwordSequence",
    "TokenizedCorpus",
    "UnigramTable",
    "build_sequence_distribution",
    "compression_stats",
    "count_corpus",
    "count_unigrams",
    "emit_bundle",
    "fit_projection",
    "load_bundle",
    "load_distribution",
    "load_table",
    "load_tokenizer",
    "load_tokenizer_dir",
    "load_word2vec_text",
    "mean_init",
    "merge_tables",
    "phrase_probability",
    "pointwise_kl",
    "project_init",
    "read_candidates_tsv",
    "run_pipeline",
    "save_distribution",
    "save_table",
    "save_word2vec_text",
    "score_candidates",
    "select_augmentations",
    "tokenize_for_static",
    "train_sgns",
    "write_candidates_tsv",
]
