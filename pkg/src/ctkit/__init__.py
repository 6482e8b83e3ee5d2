"""ctkit: unsupervised constituency parsing via constituency tests.

Sentences are parsed without treebank supervision: candidate spans are
rewritten by linguistic constituency-test transformations (clefting,
coordination, proform substitution, movement), a grammaticality scorer
judges the results, span scores are the average judgment, and CKY decodes
the binary tree with the highest total span score. The scorer can be
initialized on a real/fake corruption task and refined by alternating
between parsing and judgment updates.
"""

__version__ = "0.1.0"

from .trees import (
    Span,
    Tree,
    binarize_right,
    normalize_for_eval,
    parse_bracketed,
    preprocess,
    read_corpus,
    read_tree_file,
    render_bracketed,
    strip_punctuation,
    write_corpus,
    write_tree_file,
)
from .transforms import ALL_TESTS, TransformedSentence, apply_test, enumerate_tests
from .corruptions import (
    ALL_CORRUPTIONS,
    BigramLM,
    corrupt,
    make_realfake_dataset,
    make_rng,
    train_bigram,
)
from .scorer import (
    ConstantScorer,
    GrammaticalityScorer,
    JudgmentCache,
    LabeledExample,
    NativeScorer,
    featurize,
)
from .decoder import Chart, mbr_parse, parse_corpus, parse_sentence, score_spans
from .training import (
    TrainConfig,
    export_refinement_batch,
    refine_epoch,
    sample_refinement_examples,
    train_initial,
)
from .evaluation import (
    EvalReport,
    baseline_tree,
    classify_span,
    corpus_f1,
    crossing_patterns,
    per_test_pass_rates,
    recall_by_label,
    sentence_f1,
)
from .synth import (
    DerivedCorpus,
    OracleScorer,
    SyntheticGrammar,
    default_grammar,
    oracle_judge,
    recognize,
    sample_corpus,
)
from .remote import RemoteScorer, ScorerTransportError

__all__ = [name for name in dir() if not name.startswith("_")]
