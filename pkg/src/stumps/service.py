"""FastAPI service exposing the pipeline.

Each endpoint takes a JSON request naming input/output paths plus
hyperparameters, runs the corresponding pipeline step on the server's
filesystem, and returns a JSON summary. Validation problems map to 400,
runtime failures to 500.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import pipeline
from .core import StumpsError
from .pipeline import DEFAULT_RADII, InputError
from .scene_alignment import InfeasibleSegmentationError


class SynthRequest(BaseModel):
    out_dir: str
    seed: int = 0
    scenes: int = Field(default=20, gt=0)
    hard: bool = False
    cover_all_categories: bool = False
    match_id: str = "synth"


class TrainTextRequest(BaseModel):
    commentary: str
    model_out: str
    vocab_out: str
    min_df: int = Field(default=2, gt=0)
    lam: float = Field(default=1e-4, gt=0)
    epochs: int = Field(default=50, gt=0)
    seed: int = 0
    dump_path: str | None = None
    match_id: str = "match"


class TrainShotsRequest(BaseModel):
    descriptors: str
    truth: str
    svm_out: str
    crf_out: str
    lam: float = Field(default=1e-4, gt=0)
    epochs: int = Field(default=50, gt=0)
    seed: int = 0
    pseudo_count: float = Field(default=1.0, ge=0)


class TrainScenesRequest(BaseModel):
    descriptors: str
    truth: str
    out: str
    pseudo_count: float = Field(default=1.0, ge=0)


class DetectShotsRequest(BaseModel):
    descriptors: str
    out: str
    window: int = Field(default=10, gt=0)
    threshold: float = Field(default=0.4, gt=0)
    min_shot_len: int = Field(default=10, gt=0)


class SegmentRequest(BaseModel):
    descriptors: str
    commentary: str
    scene_models: str
    out: str
    shots: str | None = None
    every_m_frames: int = Field(default=0, ge=0)
    literal_costs: bool = False
    threads: int = Field(default=1, gt=0)
    objective: str = "joint"


class SmoothRequest(BaseModel):
    descriptors: str
    shots: str
    svm_model: str
    crf_model: str
    out: str
    mode: str = "viterbi"


class AnnotateRequest(BaseModel):
    descriptors: str
    commentary: str
    segments: str
    labels: str
    text_model: str
    vocab: str
    store: str
    match_id: str = "match"
    radius: int = Field(default=10, ge=0)
    others_threshold: float = Field(default=0.6, ge=0, le=1)


class EvalRequest(BaseModel):
    truth: str
    segments: str
    labels: str
    radii: list[int] = Field(default_factory=lambda: list(DEFAULT_RADII))


class QueryRequest(BaseModel):
    store: str
    text: str
    top_k: int = Field(default=10, gt=0)


def create_app() -> FastAPI:
    app = FastAPI(title="stumps", version="0.1.0")

    def guarded(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InputError, InfeasibleSegmentationError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except StumpsError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/synth")
    def synth(req: SynthRequest):
        return guarded(
            pipeline.run_synth,
            req.out_dir,
            seed=req.seed,
            scenes=req.scenes,
            hard=req.hard,
            cover_all_categories=req.cover_all_categories,
            match_id=req.match_id,
        )

    @app.post("/train/text")
    def train_text(req: TrainTextRequest):
        return guarded(
            pipeline.run_train_text,
            req.commentary,
            req.model_out,
            req.vocab_out,
            min_df=req.min_df,
            lam=req.lam,
            epochs=req.epochs,
            seed=req.seed,
            dump_path=req.dump_path,
            match_id=req.match_id,
        )

    @app.post("/train/shots")
    def train_shots(req: TrainShotsRequest):
        return guarded(
            pipeline.run_train_shots,
            req.descriptors,
            req.truth,
            req.svm_out,
            req.crf_out,
            lam=req.lam,
            epochs=req.epochs,
            seed=req.seed,
            pseudo_count=req.pseudo_count,
        )

    @app.post("/train/scenes")
    def train_scenes(req: TrainScenesRequest):
        return guarded(
            pipeline.run_train_scenes,
            req.descriptors,
            req.truth,
            req.out,
            pseudo_count=req.pseudo_count,
        )

    @app.post("/detect-shots")
    def detect_shots(req: DetectShotsRequest):
        return guarded(
            pipeline.run_detect_shots,
            req.descriptors,
            req.out,
            window=req.window,
            threshold=req.threshold,
            min_shot_len=req.min_shot_len,
        )

    @app.post("/segment")
    def segment(req: SegmentRequest):
        if req.objective not in ("joint", "posterior"):
            raise HTTPException(status_code=400, detail=f"unknown objective {req.objective!r}")
        return guarded(
            pipeline.run_segment,
            req.descriptors,
            req.commentary,
            req.scene_models,
            req.out,
            shots_path=req.shots,
            every_m_frames=req.every_m_frames,
            literal=req.literal_costs,
            threads=req.threads,
            objective=req.objective,
        )

    @app.post("/smooth")
    def smooth(req: SmoothRequest):
        if req.mode not in ("viterbi", "max_marginal", "raw", "literal"):
            raise HTTPException(status_code=400, detail=f"unknown smooth mode {req.mode!r}")
        return guarded(
            pipeline.run_smooth,
            req.descriptors,
            req.shots,
            req.svm_model,
            req.crf_model,
            req.out,
            mode=req.mode,
        )

    @app.post("/annotate")
    def annotate(req: AnnotateRequest):
        return guarded(
            pipeline.run_annotate,
            req.descriptors,
            req.commentary,
            req.segments,
            req.labels,
            req.text_model,
            req.vocab,
            req.store,
            match_id=req.match_id,
            radius=req.radius,
            others_threshold=req.others_threshold,
        )

    @app.post("/eval")
    def evaluate(req: EvalRequest):
        return guarded(
            pipeline.run_eval, req.truth, req.segments, req.labels, radii=tuple(req.radii)
        )

    @app.post("/query")
    def query(req: QueryRequest):
        return guarded(pipeline.run_query, req.store, req.text, top_k=req.top_k)

    return app


app = create_app()
