"""Toolkit for causally consistent event abstraction and causal discovery.

Phase 1 groups story event mentions into causally consistent abstractions
via pivot correlation clustering; Phase 2 lifts annotated relations into a
cluster-level causal graph and runs constraint-based discovery over
story/cluster co-occurrence data. Companion modules cover annotation
aggregation (majority voting, Krippendorff's alpha, an HTTP task service)
and a multi-choice QA evaluation harness.
"""

from .corpus import (
    CAUSED_BY,
    CAUSES,
    NO_RELATION,
    EventMention,
    MentionCausalSet,
    Story,
    StoryCollection,
    load_stories,
    mention_relation,
    normalize_mention,
    serialize,
)
from .similarity import (
    EmbeddingTable,
    ParaphraseTable,
    SimilarityMatrix,
    combined_similarity,
    cosine,
    event_cluster_similarity,
    load_embeddings,
    load_paraphrases,
)
from .clustering import (
    Cluster,
    ClusterSet,
    candidate_clusters_for_outlier,
    enforce_causal_consistency,
    load_clusters,
    phase_one,
    pivot_cluster,
    prune_clusters,
    save_clusters,
)
from .metrics import (
    adjusted_rand_index,
    bidirectional_ratio,
    bleu,
    homogeneity,
    intercluster_count_matrix,
    normalized_mutual_information,
    self_loop_ratio,
    silhouette,
)
from .causal_graph import (
    CausalGraph,
    CooccurrenceMatrix,
    StructureCensus,
    build_cooccurrence,
    count_structures,
    frequency_subgraph,
    is_acyclic,
    lift_relations,
)
from .discovery import (
    BernoulliSCM,
    BinaryDataset,
    Cpdag,
    DSeparationOracle,
    chi_square_sf,
    ci_test,
    contingency_table,
    d_separated,
    dag_to_cpdag,
    evaluate_graph,
    pc,
    pc_from_independence,
    sample_scm,
)
from .annotation import (
    AnnotationRecord,
    AnnotationTask,
    ESCALATE,
    generate_tasks,
    generate_topic_alignment_tasks,
    generate_topic_match_tasks,
    krippendorff_alpha,
    majority_vote,
    requeue_with_context,
    unify_subclusterings,
)
from .qa import (
    DiscoveryItem,
    LlmEndpoint,
    QaItem,
    baseline_predict,
    build_qa,
    classification_report,
    generate_negatives,
    parse_answer,
    render_prompt,
    retrieve_cg_hint,
    score_qa,
)

__version__ = "0.1.0"
