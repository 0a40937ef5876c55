"""Pairwise semantic similarity between event mentions.

The score of a pair is the average of embedding cosine similarity and
paraphrase likelihood, clamped into [0, 1], with annotated causal pairs
forced to exactly 0 so they can never be clustered together. Embeddings
and paraphrase probabilities are ingested from files; no model inference
happens here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import MentionCausalSet


class SimilarityError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    vectors: dict[str, np.ndarray]
    dim: int

    def __post_init__(self):
        for mid, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise SimilarityError(
                    f"embedding for {mid!r} has dimension {vec.shape}, "
                    f"expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vec)):
                raise SimilarityError(f"non-finite embedding for {mid!r}")

    def __contains__(self, mid):
        return mid in self.vectors


@dataclass
class ParaphraseTable:
    """Symmetric paraphrase probabilities; absent pairs fall back to a default."""

    scores: dict[tuple[str, str], float] = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        normalized = {}
        for (a, b), p in self.scores.items():
            if not 0.0 <= p <= 1.0:
                raise SimilarityError(f"paraphrase score {p} for ({a}, {b}) "
                                      "outside [0, 1]")
            normalized[_key(a, b)] = p
        self.scores = normalized

    def get(self, x: str, y: str) -> float:
        return self.scores.get(_key(x, y), self.default)


def _key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read an embeddings file: header ``d=<dim>``, then rows
    ``mention_id<TAB>f1 f2 ... fd``."""
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("d="):
            raise SimilarityError(f"embeddings file {path} missing d= header")
        dim = int(header[2:])
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            mid, _, values = line.partition("\t")
            vec = np.array([float(v) for v in values.split()], dtype=np.float64)
            if vec.size != dim:
                raise SimilarityError(
                    f"{path}:{line_no}: expected {dim} values, got {vec.size}")
            vectors[mid] = vec
    return EmbeddingTable(vectors=vectors, dim=dim)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"d={table.dim}\n")
        for mid in sorted(table.vectors):
            row = " ".join(f"{v:.8g}" for v in table.vectors[mid])
            fh.write(f"{mid}\t{row}\n")


def load_paraphrases(path: str | Path, default: float = 0.0) -> ParaphraseTable:
    """Read a paraphrase file: rows ``id_a<TAB>id_b<TAB>prob``."""
    scores = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise SimilarityError(
                    f"{path}:{line_no}: expected 3 tab-separated fields")
            scores[(parts[0], parts[1])] = float(parts[2])
    return ParaphraseTable(scores=scores, default=default)


def save_paraphrases(table: ParaphraseTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (a, b) in sorted(table.scores):
            fh.write(f"{a}\t{b}\t{table.scores[(a, b)]:.8g}\n")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors; zero-norm vectors are an error."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise SimilarityError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise SimilarityError("cosine undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def combined_similarity(x: str, y: str, emb: EmbeddingTable,
                        phr: ParaphraseTable,
                        causal: MentionCausalSet) -> float:
    """Average of cosine and paraphrase likelihood in [0, 1].

    Negative cosines are clamped to 0 before averaging. Pairs annotated as
    causal in either direction score exactly 0.
    """
    if x == y:
        raise SimilarityError("combined_similarity requires distinct mentions")
    if causal.is_causal(x, y):
        return 0.0
    for mid in (x, y):
        if mid not in emb:
            raise SimilarityError(f"no embedding for mention {mid!r}")
    f_cos = max(0.0, cosine(emb.vectors[x], emb.vectors[y]))
    f_phr = phr.get(x, y)
    return min(1.0, max(0.0, 0.5 * (f_cos + f_phr)))


@dataclass
class SimilarityMatrix:
    """Dense symmetric mention-similarity matrix with an id index."""

    ids: list[str]
    scores: np.ndarray
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {mid: i for i, mid in enumerate(self.ids)}
        n = len(self.ids)
        if self.scores.shape != (n, n):
            raise SimilarityError(
                f"matrix shape {self.scores.shape} does not match {n} ids")

    @property
    def n(self) -> int:
        return len(self.ids)

    def get(self, x: str, y: str) -> float:
        return float(self.scores[self.index[x], self.index[y]])

    @classmethod
    def from_tables(cls, mention_ids: list[str], emb: EmbeddingTable,
                    phr: ParaphraseTable, causal: MentionCausalSet,
                    dtype=np.float32) -> "SimilarityMatrix":
        ids = list(mention_ids)
        n = len(ids)
        mat = np.empty((n, emb.dim), dtype=np.float64)
        for i, mid in enumerate(ids):
            if mid not in emb:
                raise SimilarityError(f"no embedding for mention {mid!r}")
            mat[i] = emb.vectors[mid]
        norms = np.linalg.norm(mat, axis=1)
        if np.any(norms == 0.0):
            bad = ids[int(np.argmax(norms == 0.0))]
            raise SimilarityError(f"zero-norm embedding for mention {bad!r}")
        unit = mat / norms[:, None]
        cos = np.clip(unit @ unit.T, 0.0, None)

        phrmat = np.full((n, n), phr.default, dtype=np.float64)
        idx = {mid: i for i, mid in enumerate(ids)}
        for (a, b), p in phr.scores.items():
            if a in idx and b in idx:
                phrmat[idx[a], idx[b]] = p
                phrmat[idx[b], idx[a]] = p

        scores = np.clip(0.5 * (cos + phrmat), 0.0, 1.0)
        scores = 0.5 * (scores + scores.T)
        for cause, effect in causal.pairs:
            if cause in idx and effect in idx:
                scores[idx[cause], idx[effect]] = 0.0
                scores[idx[effect], idx[cause]] = 0.0
        np.fill_diagonal(scores, 1.0)
        return cls(ids=ids, scores=scores.astype(dtype), index=idx)


def event_cluster_similarity(y: str, members, S: SimilarityMatrix) -> float:
    """Mean similarity between mention y and a cluster, excluding y itself."""
    others = [m for m in members if m != y]
    if not others:
        raise SimilarityError("cluster similarity undefined for empty cluster")
    yi = S.index[y]
    return float(np.mean([S.scores[yi, S.index[m]] for m in others]))
