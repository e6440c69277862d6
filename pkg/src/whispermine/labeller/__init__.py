from .projection import TsneResult, project_pca, project_tsne
from .session import LABEL_VOCAB, Session, SessionStore
from .snippets import Snippet, snippetize

__all__ = [
    "LABEL_VOCAB",
    "Session",
    "SessionStore",
    "Snippet",
    "TsneResult",
    "project_pca",
    "project_tsne",
    "snippetize",
]
