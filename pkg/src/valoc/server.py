"""HTTP service for live interactive localization sessions.

A session walks the state machine awaiting_answer -> ... -> ready ->
localized (or failed); the human supplies the yes/no answers that the
answering agent provides during dataset builds.  Sessions live in memory
with an idle TTL; all shared artifacts are read-only after load, and each
session serializes its own mutations behind a lock.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import detector as detector_mod
from .builder import ProviderBundle
from .errors import ConflictError, NotFoundError, ValocError
from .ingest import align_segments, merge_dedupe, parse_subtitles
from .interact import engine
from .localizer import LocalizationResult, lookup_span
from .model import NO, YES, Dialogue, DialogueTurn, PipelineConfig, VideoSegment
from .relevance import RelevanceHead, top_k_context

AWAITING_ANSWER = "awaiting_answer"
READY = "ready"
LOCALIZED = "localized"
FAILED = "failed"


@dataclass
class Session:
    session_id: str
    video_id: str
    state: str
    dialogue: Dialogue
    pending_question: Optional[str] = None
    result: Optional[LocalizationResult] = None
    created_at: float = field(default_factory=time.time)
    failure_reason: Optional[str] = None
    lang: str = "en"
    top_k: Optional[int] = None  # per-session context-size override


@dataclass
class PreparedVideo:
    video_id: str
    segments: tuple[VideoSegment, ...]
    lang: str = "en"
    # contexts depend on the session question (and k), so only descriptions
    # are precomputed here; per-question contexts are memoized at localize time
    contexts_by_question: dict[tuple[str, int], tuple[VideoSegment, ...]] = field(
        default_factory=dict
    )

    @property
    def blob(self) -> str:
        return engine.subtitles_blob(self.segments)


class ServerRuntime:
    def __init__(
        self,
        cfg: PipelineConfig,
        providers: ProviderBundle,
        detector_params=None,
        relevance_head: RelevanceHead | None = None,
        session_ttl_s: float = 1800.0,
    ):
        self.cfg = cfg
        self.providers = providers
        self.detector_params = detector_params
        self.relevance_head = relevance_head
        self.session_ttl_s = session_ttl_s
        self.videos: dict[str, PreparedVideo] = {}
        self.sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def add_video(self, video_id: str, segments: tuple[VideoSegment, ...], lang: str = "en") -> PreparedVideo:
        segments = self._describe(segments, lang)
        if self.providers.visual is not None:
            segments = tuple(replace(s, visual_feature_ref=s.seg_id) for s in segments)
        video = PreparedVideo(video_id=video_id, segments=segments, lang=lang)
        if not self.cfg.searching and len(segments) >= 2:
            # window contexts are question-free, so they can be precomputed
            video.segments = top_k_context(
                segments, "", None, self.cfg.top_k, searching=False
            )
        self.videos[video_id] = video
        return video

    def _describe(self, segments: tuple[VideoSegment, ...], lang: str) -> tuple[VideoSegment, ...]:
        if not self.cfg.rewriting:
            return segments
        descriptions = engine.rewrite_subtitles(segments, self.providers.chat, lang=lang)
        return tuple(replace(s, description=d) for s, d in zip(segments, descriptions))

    def get_video(self, video_id: str) -> PreparedVideo:
        video = self.videos.get(video_id)
        if video is None:
            raise NotFoundError(f"unknown video {video_id!r}")
        return video

    def get_session(self, session_id: str) -> Session:
        self.purge_expired()
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return session

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def purge_expired(self) -> None:
        cutoff = time.time() - self.session_ttl_s
        for sid in [s for s, sess in self.sessions.items() if sess.created_at < cutoff]:
            self.sessions.pop(sid, None)
            self._locks.pop(sid, None)


def create_session(
    runtime: ServerRuntime, video_id: str, question: str, top_k: Optional[int] = None
) -> Session:
    """Open a session; asks the first follow-up unless chatting is disabled."""
    if top_k is not None and top_k < 1:
        raise ValocError(f"top_k must be >= 1, got {top_k}")
    video = runtime.get_video(video_id)
    session = Session(
        session_id=uuid.uuid4().hex,
        video_id=video_id,
        state=READY,
        dialogue=Dialogue(initial_question=question),
        lang=video.lang,
        top_k=top_k,
    )
    rounds = runtime.cfg.rounds if runtime.cfg.chatting else 0
    if rounds > 0:
        chat_session = engine.ChatSession(
            dialogue=session.dialogue, subtitles_blob=video.blob, lang=video.lang
        )
        try:
            session.pending_question = engine.ask_further_question(
                chat_session, runtime.providers.chat, rounds
            )
            session.state = AWAITING_ANSWER
        except ValocError as e:
            session.state = FAILED
            session.failure_reason = f"chatting: {e}"
    runtime.sessions[session.session_id] = session
    return session


def submit_answer(runtime: ServerRuntime, session_id: str, answer: str) -> Session:
    """Record a yes/no answer; asks the next question or becomes ready."""
    if answer not in (YES, NO):
        raise ValocError(f"answer must be 'yes' or 'no', got {answer!r}")
    session = runtime.get_session(session_id)
    with runtime.lock_for(session_id):
        if session.state != AWAITING_ANSWER:
            raise ConflictError(f"session is {session.state}, not awaiting an answer")
        session.dialogue = session.dialogue.with_turn(
            DialogueTurn(question=session.pending_question, answer=answer)
        )
        session.pending_question = None
        rounds = runtime.cfg.rounds if runtime.cfg.chatting else 0
        if len(session.dialogue.turns) < rounds:
            video = runtime.get_video(session.video_id)
            chat_session = engine.ChatSession(
                dialogue=session.dialogue, subtitles_blob=video.blob, lang=session.lang
            )
            try:
                session.pending_question = engine.ask_further_question(
                    chat_session, runtime.providers.chat, rounds
                )
            except ValocError as e:
                session.state = FAILED
                session.failure_reason = f"chatting: {e}"
                return session
        else:
            session.state = READY
    return session


def localize_session(runtime: ServerRuntime, session_id: str) -> Session:
    """Run rewriting, context search, batch detection, and span lookup."""
    session = runtime.get_session(session_id)
    with runtime.lock_for(session_id):
        if session.state == LOCALIZED:
            return session  # idempotent
        if session.state != READY:
            raise ConflictError(f"session is {session.state}, not ready")

        video = runtime.get_video(session.video_id)
        stage = "rewrite"
        try:
            question_description = engine.rewrite_question(
                session.dialogue, runtime.providers.chat,
                lang=session.lang, rewriting=runtime.cfg.rewriting,
            )

            stage = "search"
            k = session.top_k if session.top_k is not None else runtime.cfg.top_k
            memo_key = (session.dialogue.initial_question, k)
            segments = video.contexts_by_question.get(memo_key)
            if segments is None:
                segments = video.segments
                if runtime.cfg.searching and len(segments) >= 2:
                    segments = top_k_context(
                        segments,
                        session.dialogue.initial_question,
                        runtime.relevance_head,
                        k,
                        embedder=runtime.providers.embedder,
                    )
                video.contexts_by_question[memo_key] = segments

            stage = "detector"
            if runtime.detector_params is None:
                raise ValocError("no detector artifact loaded")
            from .model import InValSample

            sample = InValSample(
                sample_id=session.session_id,
                video_id=session.video_id,
                question=session.dialogue.initial_question,
                dialogue=session.dialogue,
                segments=segments,
                question_description=question_description,
                lang=session.lang,
            )
            predicted = detector_mod.predict_batch(
                runtime.detector_params,
                sample,
                runtime.cfg.threshold,
                runtime.providers.embedder,
                visual=runtime.providers.visual,
            )

            stage = "lookup"
            session.result = lookup_span(predicted.segments)
            session.state = LOCALIZED
        except ValocError as e:
            session.state = FAILED
            session.failure_reason = f"{stage}: {e}"
    return session


def session_to_dict(session: Session, rounds_total: int) -> dict:
    result = None
    if session.result is not None:
        result = {
            "video_id": session.result.video_id,
            "span": {
                "start_s": session.result.span.start_s,
                "end_s": session.result.span.end_s,
            },
            "per_segment": [
                {"seg_id": sid, "prob": prob, "label": label}
                for sid, prob, label in session.result.per_segment
            ],
            "fallback_used": session.result.fallback_used,
        }
    return {
        "session_id": session.session_id,
        "video_id": session.video_id,
        "state": session.state,
        "dialogue": {
            "initial_question": session.dialogue.initial_question,
            "turns": [{"q": t.question, "a": t.answer} for t in session.dialogue.turns],
        },
        "pending_question": session.pending_question,
        "result": result,
        "created_at": session.created_at,
        "failure_reason": session.failure_reason,
        "rounds_total": rounds_total,
    }


class VideoBody(BaseModel):
    video_id: str
    subtitles: str
    format: Optional[str] = None
    lang: str = "en"


class SessionBody(BaseModel):
    video_id: str
    question: str
    top_k: Optional[int] = None


class AnswerBody(BaseModel):
    answer: str


def create_app(runtime: ServerRuntime, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="valoc", version="0.1.0")
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    def _rounds_total() -> int:
        return runtime.cfg.rounds if runtime.cfg.chatting else 0

    @app.exception_handler(ValocError)
    def _valoc_error(request: Request, exc: ValocError):
        if isinstance(exc, NotFoundError):
            status, code = 404, "not_found"
        elif isinstance(exc, ConflictError):
            status, code = 409, "conflict"
        else:
            status, code = 400, "bad_request"
        message = str(exc)
        stage = message.split(":", 1)[0] if ":" in message else ""
        return JSONResponse(
            status_code=status,
            content={"error": {"code": code, "stage": stage, "message": message}},
        )

    @app.get("/healthz")
    def healthz():
        return PlainTextResponse("ok")

    @app.post("/api/videos", status_code=201)
    def post_video(body: VideoBody):
        doc = parse_subtitles(body.subtitles.encode("utf-8"), body.format)
        segments = align_segments(merge_dedupe(doc), body.video_id)
        video = runtime.add_video(body.video_id, segments, lang=body.lang)
        return {"video_id": video.video_id, "segments": len(video.segments)}

    @app.get("/api/videos/{video_id}/segments")
    def get_segments(video_id: str):
        video = runtime.get_video(video_id)
        return [
            {
                "seg_id": s.seg_id,
                "start_s": s.start_s,
                "duration_s": s.duration_s,
                "subtitle": s.subtitle,
            }
            for s in video.segments
        ]

    @app.post("/api/sessions")
    def post_session(body: SessionBody):
        session = create_session(runtime, body.video_id, body.question, top_k=body.top_k)
        return session_to_dict(session, _rounds_total())

    @app.post("/api/sessions/{session_id}/answer")
    def post_answer(session_id: str, body: AnswerBody):
        session = submit_answer(runtime, session_id, body.answer)
        return session_to_dict(session, _rounds_total())

    @app.post("/api/sessions/{session_id}/localize")
    def post_localize(session_id: str):
        session = localize_session(runtime, session_id)
        return session_to_dict(session, _rounds_total())

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = runtime.get_session(session_id)
        return session_to_dict(session, _rounds_total())

    return app
