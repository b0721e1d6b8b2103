"""stepsift: curation of web-agent demonstration trajectories.

Selects a fixed-budget, importance- and diversity-balanced subset of steps
per trajectory and prunes each step's accessibility-tree state to a window
centered on the gold action target, emitting a compact curated training set
plus quality and approximation statistics.
"""

from .axtree import (AXTreeNode, DuplicateBidError, LinearizedState,
                     MissingTargetError, count_tokens, find_target, parse_state)
from .pipeline import ConfigError, PipelineConfig, RunStats, run_pipeline
from .prompts import (IngestReport, PromptSlotError, ingest_synthesized,
                      render_judge_prompt, render_reasoning_prompt)
from .pruning import (PruneConfig, PruneRangeError, PruneReport,
                      prune_by_bid, prune_non_node, prune_offset,
                      prune_semantic, prune_step, prune_target_centered,
                      prune_union)
from .selection import (EnumerationGuardError, SelectionConfig,
                        SelectionResult, StudyReport, StudySpec,
                        approximation_study, objective, select,
                        select_diversity_only, select_exact, select_greedy,
                        select_importance_only, select_random)
from .similarity import (CacheBuildError, CosineSimilarity, EmbeddingTable,
                         MissingEmbeddingError, OverlapSimilarity,
                         ProviderError, RemoteSimilarity, ScoreCache,
                         SimilarityProvider, build_cache, diversity,
                         importance, load_embedding_table, make_provider,
                         pseudo_distance, text_key, write_embedding_table)
from .trajectory import (Action, CuratedStep, DatasetError, Step, Trajectory,
                         UnknownActionError, load_curated, load_trajectories,
                         write_curated, write_trajectories)

__version__ = "0.1.0"
