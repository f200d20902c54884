"""Benchmark toolkit for knowledge-graph link prediction as binary
classification on entity embeddings, trained globally or per relation."""

__version__ = "0.1.0"

from kglinkbench.errors import (
    DegenerateTrainingSetError,
    KGBenchError,
    LeakageError,
    ParseError,
    SamplingError,
    TrainingDivergedError,
)
from kglinkbench.graphcore import KnowledgeGraph, Triple, load_graph, relation_subgraph
from kglinkbench.split import DataSplit, SplitConfig, build_split, sample_negatives, split_edges
from kglinkbench.embed import EmbeddingConfig, EmbeddingSpace, init_embeddings, score, train_embeddings
from kglinkbench.featclass import Classifier, ClassifierConfig, edge_features, predict, train_classifier
from kglinkbench.metrics import ConfusionCounts, EvalReport, aggregate, confusion, prf1
from kglinkbench.bench import BenchConfig, learning_curve, run_global, run_local

__all__ = [
    "BenchConfig",
    "Classifier",
    "ClassifierConfig",
    "ConfusionCounts",
    "DataSplit",
    "DegenerateTrainingSetError",
    "EmbeddingConfig",
    "EmbeddingSpace",
    "EvalReport",
    "KGBenchError",
    "KnowledgeGraph",
    "LeakageError",
    "ParseError",
    "SamplingError",
    "SplitConfig",
    "TrainingDivergedError",
    "Triple",
    "aggregate",
    "build_split",
    "confusion",
    "edge_features",
    "init_embeddings",
    "learning_curve",
    "load_graph",
    "predict",
    "prf1",
    "relation_subgraph",
    "run_global",
    "run_local",
    "sample_negatives",
    "score",
    "split_edges",
    "train_classifier",
    "train_embeddings",
]
