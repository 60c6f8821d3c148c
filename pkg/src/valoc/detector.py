"""Fusion classifier labeling each segment in/out of the answer span.

Three stages: the visual feature is projected and squashed
(``v = sigmoid(W_v @ visual + b_v)``), concatenated with the text encoding
and fused (``g = tanh(W_f @ [v; text] + b_f)``), then read out against the
query encoding (``p = sigmoid(w_c . [query; g] + b_c)``).  Gradients are
analytic and verified against central finite differences in the tests.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import TrainingError
from .model import InValSample, PipelineConfig, VideoSegment
from .optim import Adam, bce_with_logits, probability, sigmoid
from .providers import TextEmbedder, VisualProvider

DETECTOR_MAGIC = b"IVALDT01"

_BLOCKS = ("W_v", "b_v", "W_f", "b_f", "w_c", "b_c")


@dataclass(frozen=True, eq=False)
class DetectorParams:
    W_v: np.ndarray  # (D, Dv) visual projection
    b_v: np.ndarray  # (D,)
    W_f: np.ndarray  # (D, 2D) fusion over [v; text]
    b_f: np.ndarray  # (D,)
    w_c: np.ndarray  # (2D,) readout over [query; fused]
    b_c: float

    @property
    def dim(self) -> int:
        return self.W_v.shape[0]

    @property
    def visual_dim(self) -> int:
        return self.W_v.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "W_v": self.W_v,
            "b_v": self.b_v,
            "W_f": self.W_f,
            "b_f": self.b_f,
            "w_c": self.w_c,
            "b_c": np.array([self.b_c]),
        }

    @classmethod
    def from_dict(cls, d: dict[str, np.ndarray]) -> "DetectorParams":
        return cls(
            W_v=d["W_v"], b_v=d["b_v"], W_f=d["W_f"], b_f=d["b_f"],
            w_c=d["w_c"], b_c=float(np.asarray(d["b_c"]).reshape(-1)[0]),
        )


@dataclass(frozen=True, eq=False)
class SegmentFeatures:
    visual: np.ndarray  # (Dv,)
    text: np.ndarray  # (D,) unit norm
    query: np.ndarray  # (D,) unit norm


def init_params(dim: int, visual_dim: int, seed: int) -> DetectorParams:
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per block."""
    rng = np.random.default_rng(seed)

    def uni(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return DetectorParams(
        W_v=uni((dim, visual_dim), visual_dim),
        b_v=uni((dim,), visual_dim),
        W_f=uni((dim, 2 * dim), 2 * dim),
        b_f=uni((dim,), 2 * dim),
        w_c=uni((2 * dim,), 2 * dim),
        b_c=float(uni((), 2 * dim)),
    )


def encode_segment(
    sample: InValSample,
    seg: VideoSegment,
    embedder: TextEmbedder,
    visual: VisualProvider | None = None,
    visual_dim: int = 32,
) -> SegmentFeatures:
    """Embed a segment's description with its context, plus the query.

    The text side joins the segment's description (subtitle when the
    rewriting stage was disabled) with the descriptions of its context
    segments using ``" || "``, in rank order.  A missing visual feature
    degrades to a zero vector instead of erroring, which is also how the
    visual-free ablation runs.
    """
    by_id = {s.seg_id: s for s in sample.segments}
    parts = [seg.description or seg.subtitle]
    for cid in seg.context_ids:
        ctx = by_id[cid]
        parts.append(ctx.description or ctx.subtitle)
    text_vec = embedder.embed_text(" || ".join(parts)).values
    query_vec = embedder.embed_text(sample.question_description or sample.question).values
    if visual is not None and seg.visual_feature_ref is not None:
        vis = visual.visual_feature(sample.video_id, seg.visual_feature_ref).values
    else:
        vis = np.zeros(visual.dim if visual is not None else visual_dim)
    return SegmentFeatures(visual=vis, text=text_vec, query=query_vec)


def _forward_batch(
    params: DetectorParams, Xv: np.ndarray, Xt: np.ndarray, Xq: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    V = sigmoid(Xv @ params.W_v.T + params.b_v)
    H = np.concatenate([V, Xt], axis=1)
    G = np.tanh(H @ params.W_f.T + params.b_f)
    C = np.concatenate([Xq, G], axis=1)
    logits = C @ params.w_c + params.b_c
    return logits, {"V": V, "H": H, "G": G, "C": C}


def forward(params: DetectorParams, f: SegmentFeatures) -> float:
    """Probability that one segment lies within the answer span."""
    logits, _ = _forward_batch(
        params, f.visual[None, :], f.text[None, :], f.query[None, :]
    )
    return float(probability(logits)[0])


def detector_loss_and_grads(
    params: DetectorParams,
    Xv: np.ndarray,
    Xt: np.ndarray,
    Xq: np.ndarray,
    y: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean BCE over a batch and analytic gradients for every block."""
    dim = params.dim
    n = len(y)
    logits, a = _forward_batch(params, Xv, Xt, Xq)
    loss = bce_with_logits(logits, y)

    d_logit = (sigmoid(logits) - y) / n  # (B,)
    g_wc = a["C"].T @ d_logit
    g_bc = float(np.sum(d_logit))
    dC = np.outer(d_logit, params.w_c)  # (B, 2D)
    dG = dC[:, dim:]
    dZ = dG * (1.0 - a["G"] ** 2)
    g_Wf = dZ.T @ a["H"]
    g_bf = dZ.sum(axis=0)
    dH = dZ @ params.W_f
    dV = dH[:, :dim]
    dU = dV * a["V"] * (1.0 - a["V"])
    g_Wv = dU.T @ Xv
    g_bv = dU.sum(axis=0)

    return loss, {
        "W_v": g_Wv, "b_v": g_bv, "W_f": g_Wf, "b_f": g_bf,
        "w_c": g_wc, "b_c": np.array([g_bc]),
    }


def _encode_all(
    samples: list[InValSample],
    embedder: TextEmbedder,
    visual: VisualProvider | None,
    visual_dim: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int | None]]:
    Xv, Xt, Xq, labels = [], [], [], []
    for sample in samples:
        for seg in sample.segments:
            f = encode_segment(sample, seg, embedder, visual, visual_dim)
            Xv.append(f.visual)
            Xt.append(f.text)
            Xq.append(f.query)
            labels.append(seg.label)
    return np.stack(Xv), np.stack(Xt), np.stack(Xq), labels


def train_detector(
    train: list[InValSample],
    cfg: PipelineConfig,
    embedder: TextEmbedder,
    visual: VisualProvider | None = None,
    epochs: int | None = None,
    lr: float | None = None,
    batch_size: int = 32,
) -> tuple[DetectorParams, list[float]]:
    """Fit the detector on every labeled segment of the training samples.

    Adam over mini-batches of 32 segments with seeded shuffling; returns
    the final parameters and the full-dataset loss after each epoch.
    """
    epochs = cfg.detector_epochs if epochs is None else epochs
    lr = cfg.learning_rate if lr is None else lr
    Xv, Xt, Xq, labels = _encode_all(train, embedder, visual, cfg.visual_dim)
    if any(l is None for l in labels):
        raise TrainingError("train_detector: every training segment needs a label")
    y = np.array(labels, dtype=np.float64)

    params = init_params(cfg.embedding_dim, Xv.shape[1], cfg.seed)
    opt = Adam(lr=lr)
    rng = np.random.default_rng(cfg.seed)
    losses: list[float] = []
    n = len(y)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for bi, at in enumerate(range(0, n, batch_size)):
            idx = order[at : at + batch_size]
            loss, grads = detector_loss_and_grads(params, Xv[idx], Xt[idx], Xq[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1} batch {bi}")
            params = DetectorParams.from_dict(opt.step(params.as_dict(), grads))
        losses.append(detector_loss_and_grads(params, Xv, Xt, Xq, y)[0])
    return params, losses


def predict_batch(
    params: DetectorParams,
    sample: InValSample,
    threshold: float,
    embedder: TextEmbedder,
    visual: VisualProvider | None = None,
) -> InValSample:
    """Score all segments of one video as a batch and store (prob, label).

    Probabilities are computed in seg_id order and are independent of the
    stored segment order; ``label = 1`` iff ``prob >= threshold``.
    """
    ordered = sorted(sample.segments, key=lambda s: s.seg_id)
    feats = [encode_segment(sample, seg, embedder, visual, params.visual_dim) for seg in ordered]
    logits, _ = _forward_batch(
        params,
        np.stack([f.visual for f in feats]),
        np.stack([f.text for f in feats]),
        np.stack([f.query for f in feats]),
    )
    probs = probability(logits)
    by_id = {seg.seg_id: float(p) for seg, p in zip(ordered, probs)}
    segments = tuple(
        replace(seg, predicted_prob=by_id[seg.seg_id], label=int(by_id[seg.seg_id] >= threshold))
        for seg in sample.segments
    )
    return replace(sample, segments=segments)


def save_detector(path: str | Path, params: DetectorParams) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<8sII", DETECTOR_MAGIC, params.dim, params.visual_dim))
        for name in _BLOCKS:
            block = np.asarray(params.as_dict()[name], dtype="<f8")
            f.write(block.tobytes())


def load_detector(path: str | Path) -> DetectorParams:
    with open(path, "rb") as f:
        magic, dim, visual_dim = struct.unpack("<8sII", f.read(16))
        if magic != DETECTOR_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(f.read(), dtype="<f8")
    shapes = {
        "W_v": (dim, visual_dim), "b_v": (dim,), "W_f": (dim, 2 * dim), "b_f": (dim,),
        "w_c": (2 * dim,), "b_c": (1,),
    }
    total = sum(int(np.prod(s)) for s in shapes.values())
    if data.shape[0] != total:
        raise ValueError(f"{path}: expected {total} values, got {data.shape[0]}")
    blocks = {}
    at = 0
    for name in _BLOCKS:
        size = int(np.prod(shapes[name]))
        blocks[name] = data[at : at + size].reshape(shapes[name]).astype(np.float64)
        at += size
    return DetectorParams.from_dict(blocks)
