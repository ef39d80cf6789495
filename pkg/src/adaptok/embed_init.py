"""Input-space initialization of augmented tokens.

Two routes: the mean of a sequence's constituent subword input embeddings,
and a linear map fitted from static word-vector space to the model's input
embedding space on shared tokens, then applied to the domain static vector
of each new token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, MissingStaticVector
from .static_embed import EmbeddingMatrix, load_word2vec_text
from .tokenizer import SubwordSequence

FIT_METHODS = ("closed_form", "gradient_descent")


@dataclass
class ContextualInputEmbeddings:
    """The language model's input embedding table, keyed by token string."""

    dim: int
    rows: dict[str, np.ndarray]
    source_model_id: str = ""

    @classmethod
    def from_word2vec_text(cls, path, source_model_id: str = "") -> "ContextualInputEmbeddings":
        emb = load_word2vec_text(path)
        return cls(dim=emb.dim, rows=emb.rows, source_model_id=source_model_id)

    def __contains__(self, token: str) -> bool:
        return token in self.rows


@dataclass
class ProjectionMap:
    """Linear map from static space to contextual input space (rows act on the right)."""

    matrix: np.ndarray
    fit_method: str
    ridge: float
    fit_residual: float


def mean_init(seq: SubwordSequence, emb: ContextualInputEmbeddings) -> np.ndarray:
    """Component-wise mean of the sequence's subword vectors."""
    try:
        vecs = [emb.rows[t] for t in seq.tokens]
    except KeyError as exc:
        raise DataError(f"subtoken {exc.args[0]!r} missing from input embeddings") from None
    stacked = np.stack(vecs).astype(np.float64)
    return stacked.mean(axis=0).astype(np.float32)


def fit_projection(
    x_base: EmbeddingMatrix,
    c_base: ContextualInputEmbeddings,
    method: str = "closed_form",
    ridge: float = 1e-6,
) -> ProjectionMap:
    """Fit M minimizing ||X M - C||_F over tokens present in both tables.

    X holds static vectors as rows, C the matching input-embedding rows.
    ``closed_form`` solves the (ridge-regularized) normal equations exactly;
    ``gradient_descent`` iterates the same convex objective and lands within
    a few percent of the exact optimum.
    """
    if method not in FIT_METHODS:
        raise ConfigError(f"fit method must be one of {FIT_METHODS}, got {method!r}")
    if ridge < 0:
        raise ConfigError(f"ridge must be nonnegative, got {ridge}")
    shared = sorted(set(x_base.rows) & set(c_base.rows))
    if not shared:
        raise ConfigError("fitting set is empty: no tokens shared between X and C")
    x = np.stack([x_base.rows[t] for t in shared]).astype(np.float64)
    c = np.stack([c_base.rows[t] for t in shared]).astype(np.float64)

    gram = x.T @ x
    gram_reg = gram + ridge * np.eye(gram.shape[0])
    xc = x.T @ c
    if method == "closed_form":
        try:
            np.linalg.cholesky(gram_reg)  # PSD gram: fails exactly when singular
            m = np.linalg.solve(gram_reg, xc)
        except np.linalg.LinAlgError:
            raise ConfigError(
                "normal equations are singular; refit with ridge > 0"
            ) from None
    else:
        m = _gradient_descent(gram, xc, ridge)
    residual = float(np.linalg.norm(x @ m - c))
    return ProjectionMap(matrix=m, fit_method=method, ridge=ridge, fit_residual=residual)


def _gradient_descent(gram: np.ndarray, xc: np.ndarray, ridge: float, max_iter: int = 50000) -> np.ndarray:
    # Fixed step 1/L with L the largest curvature; converges on any instance.
    lmax = float(np.linalg.eigvalsh(gram)[-1]) + ridge
    if lmax <= 0:
        return np.zeros_like(xc)
    lr = 1.0 / lmax
    m = np.zeros_like(xc)
    tol = 1e-12 * (1.0 + float(np.linalg.norm(xc)))
    for _ in range(max_iter):
        grad = gram @ m - xc + ridge * m
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            break
        m -= lr * grad
    return m


def project_init(seq_surface: str, x_domain: EmbeddingMatrix, pmap: ProjectionMap) -> np.ndarray:
    """Map a new token's domain static vector into the input space.

    Raises MissingStaticVector when the surface has no static row (for
    example, it fell under the trainer's min_count); callers usually fall
    back to mean_init and record the substitution.
    """
    vec = x_domain.rows.get(seq_surface)
    if vec is None:
        raise MissingStaticVector(seq_surface)
    return vec.astype(np.float64) @ pmap.matrix
