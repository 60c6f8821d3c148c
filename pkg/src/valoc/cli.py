"""Command-line entry points for every pipeline stage.

Exit codes: 0 on success, 1 on operational failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import builder as builder_mod
from . import detector as detector_mod
from . import evaluation, ingest, localizer
from . import relevance as relevance_mod
from .errors import ValocError
from .model import PipelineConfig, Span
from .providers import (
    CachedChat,
    CachedEmbedder,
    FeatureStore,
    MockVisualProvider,
    OpenAIChat,
    OpenAIEmbedder,
    ProviderConfig,
    ResponseCache,
    SimulatedChat,
    mock_embedder_build,
)
from .providers.base import DEFAULT_CHAT_KEY_ENV, DEFAULT_EMBED_KEY_ENV


def _load_file_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _pipeline_config(args, file_cfg: dict) -> PipelineConfig:
    cfg = PipelineConfig.from_dict(dict(file_cfg.get("pipeline", {})))
    overrides = {}
    for attr, name in (
        ("seed", "seed"),
        ("rounds", "rounds"),
        ("top_k", "top_k"),
        ("threshold", "threshold"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[name] = value
    for flag, name in (("no_chatting", "chatting"), ("no_rewriting", "rewriting"), ("no_searching", "searching")):
        if getattr(args, flag, False):
            overrides[name] = False
    return replace(cfg, **overrides) if overrides else cfg


def _providers(args, cfg: PipelineConfig, file_cfg: dict) -> builder_mod.ProviderBundle:
    if getattr(args, "mock_providers", False):
        chat = SimulatedChat(seed=cfg.seed)
        embedder = mock_embedder_build(cfg.seed, cfg.embedding_dim)
        visual = MockVisualProvider(cfg.seed, cfg.visual_dim)
    else:
        chat_cfg = file_cfg.get("chat")
        embed_cfg = file_cfg.get("embed")
        if not chat_cfg or not embed_cfg:
            raise ValocError(
                "no provider configuration; pass --mock-providers or a --config file "
                "with 'chat' and 'embed' sections"
            )
        chat = OpenAIChat(ProviderConfig(**{"api_key_env": DEFAULT_CHAT_KEY_ENV, **chat_cfg}))
        embedder = OpenAIEmbedder(
            ProviderConfig(**{"api_key_env": DEFAULT_EMBED_KEY_ENV, **embed_cfg}),
            dim=cfg.embedding_dim,
        )
        features_dir = file_cfg.get("features_dir")
        visual = FeatureStore(features_dir, dim=cfg.visual_dim) if features_dir else None

    cache_dir = getattr(args, "cache_dir", None) or file_cfg.get("cache_dir")
    if cache_dir:
        cache = ResponseCache(cache_dir)
        chat = CachedChat(chat, cache)
        embedder = CachedEmbedder(embedder, cache)
    return builder_mod.ProviderBundle(chat=chat, embedder=embedder, visual=visual)


def _read_span_csv(path: str) -> list[tuple[str, Span]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValocError(f"{path}:{line_no}: expected 'sample_id,start_s,end_s'")
            try:
                rows.append((parts[0], Span(float(parts[1]), float(parts[2]))))
            except ValueError:
                raise ValocError(f"{path}:{line_no}: bad span values") from None
    return rows


def _cmd_ingest(args) -> int:
    data = Path(args.subs).read_bytes()
    doc = ingest.parse_subtitles(data, args.format)
    cues = ingest.merge_dedupe(doc)
    segments = ingest.align_segments(cues, args.video_id)
    if args.merged_out:
        Path(args.merged_out).write_text(ingest.serialize_srt(cues), encoding="utf-8")
    for seg in segments:
        print(
            json.dumps(
                {
                    "seg_id": seg.seg_id,
                    "start_s": seg.start_s,
                    "duration_s": seg.duration_s,
                    "subtitle": seg.subtitle,
                },
                ensure_ascii=False,
            )
        )
    return 0


def _cmd_build(args) -> int:
    file_cfg = _load_file_config(args.config)
    cfg = _pipeline_config(args, file_cfg)
    providers = _providers(args, cfg, file_cfg)
    raws = builder_mod.load_raw_samples(args.inputs)
    head = relevance_mod.load_relevance_head(args.relevance_head) if args.relevance_head else None
    manifest = builder_mod.build_corpus(
        raws,
        cfg,
        providers,
        args.out,
        relevance_head=head,
        description_spans_mode=args.description_spans,
        label_overlap_threshold=args.label_overlap,
    )
    manifest.save(args.manifest_out or f"{args.out}.manifest.json")
    counts = manifest.counts()
    print(f"built {counts['built']} failed {counts['failed']} skipped {counts['skipped']}")
    if raws and counts["built"] == 0:
        return 1
    return 0


def _cmd_train_relevance(args) -> int:
    file_cfg = _load_file_config(args.config)
    cfg = _pipeline_config(args, file_cfg)
    providers = _providers(args, cfg, file_cfg)
    samples = [s for s in builder_mod.load_dataset(args.dataset) if s.split == args.split]
    pairs = relevance_mod.build_pair_dataset(samples, per_video_cap=args.pair_cap, seed=cfg.seed)
    if not pairs:
        raise ValocError("no training pairs (are segments labeled?)")
    head, losses = relevance_mod.train_relevance_head(
        pairs,
        providers.embedder,
        epochs=args.epochs if args.epochs is not None else cfg.relevance_epochs,
        lr=args.lr if args.lr is not None else cfg.learning_rate,
        seed=cfg.seed,
    )
    relevance_mod.save_relevance_head(args.out, head)
    print(f"pairs {len(pairs)} loss " + " ".join(f"{l:.4f}" for l in losses))
    return 0


def _cmd_train_detector(args) -> int:
    file_cfg = _load_file_config(args.config)
    cfg = _pipeline_config(args, file_cfg)
    providers = _providers(args, cfg, file_cfg)
    samples = [s for s in builder_mod.load_dataset(args.dataset) if s.split == args.split]
    if not samples:
        raise ValocError(f"no {args.split!r} samples in {args.dataset}")
    params, losses = detector_mod.train_detector(
        samples,
        cfg,
        providers.embedder,
        visual=providers.visual,
        epochs=args.epochs,
        lr=args.lr,
    )
    detector_mod.save_detector(args.out, params)
    print(f"segments {sum(len(s.segments) for s in samples)} loss " + " ".join(f"{l:.4f}" for l in losses))
    return 0


def _cmd_localize(args) -> int:
    file_cfg = _load_file_config(args.config)
    cfg = _pipeline_config(args, file_cfg)
    providers = _providers(args, cfg, file_cfg)
    params = detector_mod.load_detector(args.detector)
    samples = builder_mod.load_dataset(args.dataset)
    if args.split != "all":
        samples = [s for s in samples if s.split == args.split]
    predictions = []
    for sample in samples:
        predicted = detector_mod.predict_batch(
            params, sample, cfg.threshold, providers.embedder, visual=providers.visual
        )
        result = localizer.lookup_span(predicted.segments)
        source = f"{args.source_dir.rstrip('/')}/{sample.video_id}.mp4" if args.source_dir else f"{sample.video_id}.mp4"
        sys.stdout.write(localizer.emit_cut_spec(result, source) + "\n")
        predictions.append((sample.sample_id, result.span))
    if args.pred_out:
        with open(args.pred_out, "w", encoding="utf-8") as f:
            for sid, span in predictions:
                f.write(f"{sid},{span.start_s:.6f},{span.end_s:.6f}\n")
    return 0


def _cmd_eval(args) -> int:
    predictions = _read_span_csv(args.pred)
    truths = _read_span_csv(args.truth)
    try:
        report = evaluation.evaluate(predictions, truths)
    except ValueError as e:
        raise ValocError(str(e)) from None
    print(evaluation.format_report(report, method=args.method))
    if args.per_sample:
        with open(args.per_sample, "w", encoding="utf-8") as f:
            evaluation.write_per_sample(report, f)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import ServerRuntime, create_app

    file_cfg = _load_file_config(args.config)
    cfg = _pipeline_config(args, file_cfg)
    providers = _providers(args, cfg, file_cfg)
    runtime = ServerRuntime(
        cfg=cfg,
        providers=providers,
        detector_params=detector_mod.load_detector(args.detector) if args.detector else None,
        relevance_head=relevance_mod.load_relevance_head(args.relevance) if args.relevance else None,
        session_ttl_s=args.session_ttl,
    )
    if args.dataset:
        for sample in builder_mod.load_dataset(args.dataset):
            runtime.add_video(sample.video_id, sample.segments, lang=sample.lang)
    uvicorn.run(create_app(runtime, ui_dir=args.ui), host=args.host, port=args.port, log_level="info")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="valoc",
        description="Interactive visual answer localization: dataset building, training, localization, evaluation, serving.",
    )
    p.add_argument("--config", metavar="PATH", help="JSON config with pipeline and provider sections")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--mock-providers", action="store_true", help="use deterministic offline providers")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="parse subtitles and print aligned segments")
    sp.add_argument("--subs", required=True, help="path to an .srt or .vtt file")
    sp.add_argument("--video-id", required=True)
    sp.add_argument("--format", choices=[ingest.SRT, ingest.VTT])
    sp.add_argument("--merged-out", help="also write merged cues as canonical SRT")
    sp.set_defaults(func=_cmd_ingest)

    sp = sub.add_parser("build", help="reconstruct an interactive dataset from raw inputs")
    sp.add_argument("--inputs", required=True, help="raw samples JSONL")
    sp.add_argument("--out", required=True, help="dataset JSONL to write")
    sp.add_argument("--cache-dir", help="persistent provider response cache")
    sp.add_argument("--manifest-out", help="manifest path (default: OUT.manifest.json)")
    sp.add_argument("--rounds", type=int, help="dialogue rounds")
    sp.add_argument("--top-k", type=int, dest="top_k", help="context size")
    sp.add_argument("--relevance-head", help="trained head for context scoring")
    sp.add_argument(
        "--description-spans",
        choices=[builder_mod.SPAN_DESCRIPTIONS, builder_mod.ALL_DESCRIPTIONS],
        default=builder_mod.SPAN_DESCRIPTIONS,
        help="what the questioning agent sees as candidate descriptions",
    )
    sp.add_argument("--label-overlap", type=float, default=builder_mod.LABEL_OVERLAP_THRESHOLD)
    sp.add_argument("--no-chatting", action="store_true")
    sp.add_argument("--no-rewriting", action="store_true")
    sp.add_argument("--no-searching", action="store_true")
    sp.set_defaults(func=_cmd_build)

    sp = sub.add_parser("train-relevance", help="train the pairwise relevance head")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", required=True, help="head artifact to write")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--split", default="train", choices=["train", "test"])
    sp.add_argument("--pair-cap", type=int, default=64, help="max pairs per video")
    sp.set_defaults(func=_cmd_train_relevance)

    sp = sub.add_parser("train-detector", help="train the fusion location detector")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", required=True, help="detector artifact to write")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--split", default="train", choices=["train", "test"])
    sp.add_argument("--cache-dir")
    sp.set_defaults(func=_cmd_train_detector)

    sp = sub.add_parser("localize", help="predict spans and emit a cut-spec CSV on stdout")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--detector", required=True, help="trained detector artifact")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--split", default="all", choices=["train", "test", "all"])
    sp.add_argument("--pred-out", help="also write 'sample_id,start,end' CSV here")
    sp.add_argument("--source-dir", help="prefix for source paths in the cut spec")
    sp.add_argument("--cache-dir")
    sp.set_defaults(func=_cmd_localize)

    sp = sub.add_parser("eval", help="score predictions against ground truth")
    sp.add_argument("--pred", required=True, help="CSV: sample_id,start_s,end_s")
    sp.add_argument("--truth", required=True, help="CSV: sample_id,start_s,end_s")
    sp.add_argument("--per-sample", help="write per-sample 'sample_id,iou' lines here")
    sp.add_argument("--method", default="valoc")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("serve", help="run the interactive session HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8080)
    sp.add_argument("--detector", help="trained detector artifact")
    sp.add_argument("--relevance", help="trained relevance head artifact")
    sp.add_argument("--dataset", help="preload videos from a dataset file")
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--top-k", type=int, dest="top_k")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--session-ttl", type=float, default=1800.0)
    sp.add_argument("--cache-dir")
    sp.add_argument("--ui", help="serve a built web UI directory at /ui")
    sp.set_defaults(func=_cmd_serve)

    return p


def cli_run(argv: list[str]) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except ValocError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_run(sys.argv[1:]))


if __name__ == "__main__":
    main()
