"""mcrgraph: learn review-comment behavior from code-review corpora.

Pipeline: ingest pull-request corpora -> parse file revisions into AST
program graphs -> anchor review comments and derive weak labels -> train
GCN/GAT node classifiers and a comment-quality regressor -> evaluate and
render annotated reports.
"""

__version__ = "0.1.0"

from .astgraph import AstGraph, NodeKind, parse_source  # noqa: F401
from .corpus import PullRequest, ReviewComment, ReviewCorpus, load_corpus, save_corpus  # noqa: F401
from .errors import McrGraphError  # noqa: F401
from .labeling import Commented, LabeledGraph, MetaTopic, label_graph, split_dataset  # noqa: F401
from .tensor import Tensor  # noqa: F401

__all__ = [
    "AstGraph",
    "Commented",
    "LabeledGraph",
    "McrGraphError",
    "MetaTopic",
    "NodeKind",
    "PullRequest",
    "ReviewComment",
    "ReviewCorpus",
    "Tensor",
    "__version__",
    "label_graph",
    "load_corpus",
    "parse_source",
    "save_corpus",
    "split_dataset",
]
