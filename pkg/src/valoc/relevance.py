"""Trainable pairwise relevance over frozen embeddings, and top-k context.

A logistic head scores whether two segments of one video belong to the
same answer span.  Pair features are the elementwise product concatenated
with the elementwise absolute difference of the two embeddings, so the
head sees both symmetric agreement and asymmetric offset.  The anchor
side carries the question: ``"question: Q [SEP] S_i"``.
"""

from __future__ import annotations

import logging
import random
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import TrainingError
from .model import InValSample, VideoSegment
from .optim import Adam, bce_with_logits, probability, sigmoid
from .providers import EmbeddingVector, TextEmbedder, cosine

log = logging.getLogger(__name__)

RELEVANCE_MAGIC = b"IVALRH01"


@dataclass(frozen=True)
class PairExample:
    anchor_text: str
    other_text: str
    label: int


@dataclass(frozen=True, eq=False)
class RelevanceHead:
    w: np.ndarray  # (2D,)
    b: float


def join_question_subtitle(question: str, subtitle: str) -> str:
    return f"question: {question} [SEP] {subtitle}"


def build_pair_dataset(
    samples: list[InValSample], per_video_cap: int, seed: int
) -> list[PairExample]:
    """Sample balanced in-span / out-of-span segment pairs per video.

    Positives pair two labeled-1 segments (ordered), negatives pair a
    labeled-1 anchor with a labeled-0 other.  Classes are balanced 1:1 by
    downsampling and capped at ``per_video_cap`` pairs per video.  Samples
    with no positive segment contribute nothing.
    """
    rng = random.Random(seed)
    pairs: list[PairExample] = []
    skipped = 0
    for sample in samples:
        pos = [s for s in sample.segments if s.label == 1]
        neg = [s for s in sample.segments if s.label == 0]
        if not pos:
            skipped += 1
            continue
        positives = [(a, b) for a in pos for b in pos if a.seg_id != b.seg_id]
        negatives = [(a, b) for a in pos for b in neg]
        rng.shuffle(positives)
        rng.shuffle(negatives)
        take = min(len(positives), len(negatives), max(per_video_cap // 2, 1))
        for a, b in positives[:take]:
            pairs.append(
                PairExample(join_question_subtitle(sample.question, a.subtitle), b.subtitle, 1)
            )
        for a, b in negatives[:take]:
            pairs.append(
                PairExample(join_question_subtitle(sample.question, a.subtitle), b.subtitle, 0)
            )
    if skipped:
        log.warning("build_pair_dataset: skipped %d samples with no positive segment", skipped)
    rng.shuffle(pairs)
    return pairs


def pair_features(anchor_emb: EmbeddingVector, other_emb: EmbeddingVector) -> np.ndarray:
    a, o = anchor_emb.values, other_emb.values
    if a.shape != o.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {o.shape}")
    return np.concatenate([a * o, np.abs(a - o)])


def score_pair(head: RelevanceHead, features: np.ndarray) -> float:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != head.w.shape:
        raise ValueError(f"feature dim {features.shape} != head dim {head.w.shape}")
    return float(probability(np.array([head.w @ features + head.b]))[0])


def relevance_loss_and_grad(
    w: np.ndarray, b: float, feats: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray, float]:
    """Mean BCE and its analytic gradient (checked against finite differences)."""
    logits = feats @ w + b
    loss = bce_with_logits(logits, labels)
    delta = (sigmoid(logits) - labels) / len(labels)
    return loss, feats.T @ delta, float(np.sum(delta))


def _featurize(pairs: list[PairExample], embedder: TextEmbedder) -> tuple[np.ndarray, np.ndarray]:
    memo: dict[str, np.ndarray] = {}

    def emb(text: str) -> np.ndarray:
        v = memo.get(text)
        if v is None:
            v = embedder.embed_text(text).values
            memo[text] = v
        return v

    X = np.stack([pair_features(EmbeddingVector(emb(p.anchor_text)), EmbeddingVector(emb(p.other_text))) for p in pairs])
    y = np.array([p.label for p in pairs], dtype=np.float64)
    return X, y


def train_relevance_head(
    pairs: list[PairExample],
    embedder: TextEmbedder,
    epochs: int = 2,
    lr: float = 5e-5,
    seed: int = 0,
    batch_size: int = 32,
) -> tuple[RelevanceHead, list[float]]:
    """Minimize mean BCE with Adam (0.9/0.999, eps 1e-8), mini-batch 32.

    Returns the final head and the full-dataset loss after each epoch.
    """
    if not pairs:
        raise ValueError("train_relevance_head needs a non-empty pair list")
    X, y = _featurize(pairs, embedder)
    n, dim = X.shape
    w = np.zeros(dim)
    b = 0.0
    opt = Adam(lr=lr)
    rng = np.random.default_rng(seed)
    losses: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        for bi, at in enumerate(range(0, n, batch_size)):
            idx = order[at : at + batch_size]
            loss, gw, gb = relevance_loss_and_grad(w, b, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1} batch {bi}")
            new = opt.step({"w": w, "b": np.array([b])}, {"w": gw, "b": np.array([gb])})
            w, b = new["w"], float(new["b"][0])
        losses.append(relevance_loss_and_grad(w, b, X, y)[0])
    return RelevanceHead(w=w, b=b), losses


def top_k_context(
    segments: list[VideoSegment] | tuple[VideoSegment, ...],
    question: str,
    head: RelevanceHead | None,
    k: int,
    embedder: TextEmbedder | None = None,
    searching: bool = True,
) -> tuple[VideoSegment, ...]:
    """Attach the k most relevant other segments to each segment.

    Trained path scores with the head over pair features; without a head
    it falls back to cosine between the same two embeddings.  With
    ``searching=False`` context is simply the k nearest neighbors in time
    and no embeddings are computed.  Ties break by temporal proximity,
    then by smaller seg_id.  Results depend only on seg_ids, never on the
    input order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(segments) < 2:
        raise ValueError("top_k_context needs at least 2 segments")

    ordered = sorted(segments, key=lambda s: s.seg_id)
    pos_of = {s.seg_id: i for i, s in enumerate(ordered)}

    if searching:
        if embedder is None:
            raise ValueError("top_k_context needs an embedder when searching is enabled")
        anchors = [embedder.embed_text(join_question_subtitle(question, s.subtitle)) for s in ordered]
        others = [embedder.embed_text(s.subtitle) for s in ordered]

    def score(i: int, j: int) -> float:
        if head is not None:
            return score_pair(head, pair_features(anchors[i], others[j]))
        return cosine(anchors[i], others[j])

    by_id: dict[int, tuple[int, ...]] = {}
    for i, seg in enumerate(ordered):
        candidates = [j for j in range(len(ordered)) if j != i]
        if searching:
            key = lambda j: (-score(i, j), abs(ordered[j].start_s - seg.start_s), ordered[j].seg_id)
        else:
            key = lambda j: (abs(ordered[j].start_s - seg.start_s), abs(j - i), ordered[j].seg_id)
        candidates.sort(key=key)
        by_id[seg.seg_id] = tuple(ordered[j].seg_id for j in candidates[:k])

    return tuple(replace(seg, context_ids=by_id[seg.seg_id]) for seg in segments)


def save_relevance_head(path: str | Path, head: RelevanceHead) -> None:
    dim = head.w.shape[0]
    data = np.concatenate([head.w, [head.b]]).astype("<f8")
    with open(path, "wb") as f:
        f.write(struct.pack("<8sI", RELEVANCE_MAGIC, dim))
        f.write(data.tobytes())


def load_relevance_head(path: str | Path) -> RelevanceHead:
    with open(path, "rb") as f:
        magic, dim = struct.unpack("<8sI", f.read(12))
        if magic != RELEVANCE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.shape[0] != dim + 1:
        raise ValueError(f"{path}: expected {dim + 1} values, got {data.shape[0]}")
    return RelevanceHead(w=data[:dim].astype(np.float64), b=float(data[dim]))
