"""Similarity scoring: importance, pseudo-distance, pairwise diversity, and
the pluggable provider backends with per-trajectory caching.

A provider maps a pair of texts to a score in [0, 1] that is ~1 for
identical texts. Three backends ship:

* ``OverlapSimilarity`` -- Jaccard overlap of lowercased whitespace tokens;
  deterministic and dependency-free, used by the test suite.
* ``CosineSimilarity`` -- cosine over precomputed unit-norm embeddings read
  from a vector file, mapped to [0, 1] via (1 + cos) / 2.
* ``RemoteSimilarity`` -- fetches embeddings from an embedding sidecar over
  HTTP (batch POST /embed), then scores like the cosine backend; embeddings
  are cached per text.

Embedding files are line-delimited JSON keyed by a content hash of the exact
text (rule ``sha256-utf8-hex-v1``: SHA-256 of the UTF-8 bytes, lowercase hex
digest), with the first 64 characters of the text stored alongside as a
collision check::

    {"hash_rule": "sha256-utf8-hex-v1", "model_id": str, "dim": int}   # header, optional
    {"key": str, "text_prefix": str, "vector": [float, ...]}           # one per text

Derived scores: pseudo-distance d(x, y) = 1 - sim(x, y); step diversity
D(i, j) = max(d(state_i, state_j), d(answer_i, answer_j)); importance of a
step = sim(goal, state text).
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .trajectory import Step, Trajectory

HASH_RULE = "sha256-utf8-hex-v1"
TEXT_PREFIX_LEN = 64
SELF_SIM_EPS = 1e-6

MODE_EAGER = "eager"
MODE_LAZY = "lazy"


class ProviderError(RuntimeError):
    """A similarity backend failed to score a pair."""


class MissingEmbeddingError(ProviderError):
    def __init__(self, text: str):
        self.text_prefix = text[:TEXT_PREFIX_LEN]
        super().__init__(f"no embedding for text starting {self.text_prefix!r}")


class EmbeddingFormatError(ValueError):
    pass


class CacheBuildError(RuntimeError):
    """Provider failure while building a trajectory's score cache."""

    def __init__(self, trajectory_id: str, detail: str):
        self.trajectory_id = trajectory_id
        super().__init__(f"trajectory {trajectory_id!r}: {detail}")


def text_key(text: str) -> str:
    """Content-hash key for embedding lookup (rule sha256-utf8-hex-v1)."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


class SimilarityProvider:
    """Base contract: ``sim`` in [0, 1], ~1 on identical non-empty texts."""

    provider_id = "base"

    def sim(self, a: str, b: str) -> float:
        raise NotImplementedError

    def sim_many(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.sim(a, b) for a, b in pairs]


class OverlapSimilarity(SimilarityProvider):
    """Jaccard similarity over lowercased whitespace tokens."""

    provider_id = "overlap"

    def sim(self, a: str, b: str) -> float:
        ta = set(a.lower().split())
        tb = set(b.lower().split())
        if not ta and not tb:
            return 1.0
        if not ta or not tb:
            return 0.0
        return len(ta & tb) / len(ta | tb)


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: dict[str, np.ndarray]
    prefixes: dict[str, str]
    dim: int
    model_id: str | None = None


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Read an embedding file; vectors are validated unit-norm within 1e-4."""
    vectors: dict[str, np.ndarray] = {}
    prefixes: dict[str, str] = {}
    dim: int | None = None
    model_id: str | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "hash_rule" in obj and "key" not in obj:
                if obj["hash_rule"] != HASH_RULE:
                    raise EmbeddingFormatError(
                        f"embedding file {path} uses hash rule "
                        f"{obj['hash_rule']!r}, expected {HASH_RULE!r}")
                model_id = obj.get("model_id")
                continue
            key = obj.get("key")
            vec = np.asarray(obj.get("vector"), dtype=np.float64)
            if not isinstance(key, str) or vec.ndim != 1 or vec.size == 0:
                raise EmbeddingFormatError(f"{path}:{line_no}: malformed record")
            if dim is None:
                dim = int(vec.size)
            elif vec.size != dim:
                raise EmbeddingFormatError(
                    f"{path}:{line_no}: dimension {vec.size} != {dim}")
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-4:
                raise EmbeddingFormatError(
                    f"{path}:{line_no}: vector norm {norm:.6f} not unit")
            vectors[key] = vec
            prefixes[key] = obj.get("text_prefix", "")
    return EmbeddingTable(vectors=vectors, prefixes=prefixes,
                          dim=dim or 0, model_id=model_id)


def write_embedding_table(path: str | Path,
                          entries: Iterable[tuple[str, Sequence[float]]],
                          model_id: str) -> int:
    """Write (text, vector) pairs in the embedding file format; returns count.

    Vectors are L2-normalized on write; duplicate texts are deduplicated by
    content key, first occurrence wins.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seen: set[str] = set()
    count = 0
    dim: int | None = None
    records = []
    for text, vector in entries:
        vec = np.asarray(vector, dtype=np.float64)
        if dim is None:
            dim = int(vec.size)
        elif vec.size != dim:
            raise EmbeddingFormatError(f"dimension {vec.size} != {dim}")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise EmbeddingFormatError("zero vector cannot be normalized")
        key = text_key(text)
        if key in seen:
            continue
        seen.add(key)
        records.append({
            "key": key,
            "text_prefix": text[:TEXT_PREFIX_LEN],
            "vector": [float(x) for x in vec / norm],
        })
        count += 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"hash_rule": HASH_RULE, "model_id": model_id,
                             "dim": dim or 0}) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return count


def _half_cosine(va: np.ndarray, vb: np.ndarray) -> float:
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.5
    cos = float(np.dot(va, vb) / (na * nb))
    cos = max(-1.0, min(1.0, cos))
    return _clamp01((1.0 + cos) / 2.0)


class CosineSimilarity(SimilarityProvider):
    """Cosine over a precomputed embedding table, mapped to [0, 1]."""

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.provider_id = f"cosine:{table.model_id or 'file'}:{HASH_RULE}"

    def _vector(self, text: str) -> np.ndarray:
        key = text_key(text)
        vec = self.table.vectors.get(key)
        if vec is None:
            raise MissingEmbeddingError(text)
        prefix = self.table.prefixes.get(key, "")
        if prefix and prefix != text[:TEXT_PREFIX_LEN]:
            raise EmbeddingFormatError(
                f"hash collision: key {key[:12]}... stored prefix {prefix!r} "
                f"does not match text {text[:TEXT_PREFIX_LEN]!r}")
        return vec

    def sim(self, a: str, b: str) -> float:
        return _half_cosine(self._vector(a), self._vector(b))


class RemoteSimilarity(SimilarityProvider):
    """Embeddings fetched from an embedding sidecar over HTTP.

    Batch requests against one endpoint are serialized; per-text embeddings
    are cached so repeated scoring never re-requests a text.
    """

    def __init__(self, endpoint: str, batch_size: int = 64, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.timeout = timeout
        self.provider_id = f"remote:{self.endpoint}"
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _post_embed(self, texts: list[str]) -> list[np.ndarray]:
        payload = json.dumps({"texts": texts}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint + "/embed", data=payload,
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ProviderError(f"embed request to {self.endpoint} failed: {exc}") from exc
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError(
                f"embed response from {self.endpoint} returned "
                f"{len(vectors) if isinstance(vectors, list) else 'no'} vectors "
                f"for {len(texts)} texts")
        return [np.asarray(v, dtype=np.float64) for v in vectors]

    def _ensure(self, texts: Iterable[str]) -> None:
        with self._lock:
            todo = [t for t in dict.fromkeys(texts) if t not in self._cache]
            for start in range(0, len(todo), self.batch_size):
                chunk = todo[start:start + self.batch_size]
                for text, vec in zip(chunk, self._post_embed(chunk)):
                    self._cache[text] = vec

    def sim(self, a: str, b: str) -> float:
        self._ensure((a, b))
        return _half_cosine(self._cache[a], self._cache[b])

    def sim_many(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        self._ensure(t for pair in pairs for t in pair)
        return [_half_cosine(self._cache[a], self._cache[b]) for a, b in pairs]


def make_provider(spec: str) -> SimilarityProvider:
    """Build a provider from a CLI spec: overlap | cosine:FILE | remote:URL."""
    if spec == "overlap":
        return OverlapSimilarity()
    if spec.startswith("cosine:"):
        return CosineSimilarity(load_embedding_table(spec[len("cosine:"):]))
    if spec.startswith("remote:"):
        return RemoteSimilarity(spec[len("remote:"):])
    raise ValueError(f"unknown similarity spec {spec!r}")


# ---------------------------------------------------------------------------
# derived scores


def pseudo_distance(x: str, y: str, sim: SimilarityProvider) -> float:
    """1 - sim(x, y); small for semantically similar texts."""
    return _clamp01(1.0 - sim.sim(x, y))


def importance(goal: str, step: Step, sim: SimilarityProvider) -> float:
    """Goal relevance of the step's state text (pruned text when the step
    was pruned before scoring)."""
    return _clamp01(sim.sim(goal, step.state_raw))


def diversity(step_i: Step, step_j: Step, sim: SimilarityProvider) -> float:
    """Max of the state-pair and answer-pair pseudo-distances."""
    scores = sim.sim_many([(step_i.state_raw, step_j.state_raw),
                           (step_i.answer, step_j.answer)])
    return max(_clamp01(1.0 - s) for s in scores)


class ScoreCache:
    """Unary importance vector plus a lazily filled symmetric pair matrix.

    Entries are immutable once computed. ``provider_id`` stamps which backend
    produced the scores so caches from different backends are never mixed.
    """

    def __init__(self, phi: Sequence[float], provider_id: str, pair_fn=None):
        self._phi = [float(_clamp01(p)) for p in phi]
        self._pair_fn = pair_fn
        self.provider_id = provider_id
        t = len(self._phi)
        self._d = np.full((t, t), np.nan)
        np.fill_diagonal(self._d, 0.0)

    @classmethod
    def from_matrix(cls, phi: Sequence[float], d: np.ndarray,
                    provider_id: str = "synthetic") -> "ScoreCache":
        d = np.asarray(d, dtype=np.float64)
        t = len(phi)
        if d.shape != (t, t):
            raise ValueError(f"pair matrix shape {d.shape} != ({t}, {t})")
        if not np.allclose(d, d.T, atol=1e-12):
            raise ValueError("pair matrix must be symmetric")
        if not np.allclose(np.diag(d), 0.0, atol=1e-12):
            raise ValueError("pair matrix diagonal must be zero")
        cache = cls(phi, provider_id)
        cache._d = d.copy()
        return cache

    @property
    def size(self) -> int:
        return len(self._phi)

    def phi(self, t: int) -> float:
        return self._phi[t]

    def phi_vector(self) -> list[float]:
        return list(self._phi)

    def d(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        value = self._d[i, j]
        if math.isnan(value):
            if self._pair_fn is None:
                raise KeyError(f"pair ({i}, {j}) not cached and no pair source")
            value = _clamp01(float(self._pair_fn(i, j)))
            self._d[i, j] = value
            self._d[j, i] = value
        return float(value)

    def fill(self) -> None:
        for i in range(self.size):
            for j in range(i + 1, self.size):
                self.d(i, j)

    @property
    def computed_pairs(self) -> int:
        iu = np.triu_indices(self.size, k=1)
        return int(np.count_nonzero(~np.isnan(self._d[iu])))

    def ensure_provider(self, provider_id: str) -> None:
        if provider_id != self.provider_id:
            raise ValueError(
                f"cache built with provider {self.provider_id!r} cannot be "
                f"used with {provider_id!r}")


def build_cache(traj: Trajectory, sim: SimilarityProvider,
                mode: str = MODE_LAZY) -> ScoreCache:
    """Score a trajectory: importance for every step, diversity on demand
    (lazy) or for every pair up front (eager)."""
    if mode not in (MODE_EAGER, MODE_LAZY):
        raise ValueError(f"unknown cache mode {mode!r}")
    steps = traj.steps

    def pair(i: int, j: int) -> float:
        try:
            return diversity(steps[i], steps[j], sim)
        except Exception as exc:
            raise CacheBuildError(
                traj.id, f"diversity({i}, {j}) failed: {exc}") from exc

    try:
        phi = [importance(traj.goal, step, sim) for step in steps]
    except CacheBuildError:
        raise
    except Exception as exc:
        raise CacheBuildError(traj.id, f"importance scoring failed: {exc}") from exc

    cache = ScoreCache(phi, provider_id=sim.provider_id, pair_fn=pair)
    if mode == MODE_EAGER:
        cache.fill()
    return cache
