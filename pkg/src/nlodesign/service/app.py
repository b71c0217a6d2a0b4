"""HTTP service: prediction, evolution runs, and live run inspection.

One msBNN model is loaded per service instance (swappable through
POST /model).  Run events stream as line-delimited JSON; the full route
reference lives in docs/api.md.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse

from .. import evolve, msbnn
from ..data import MoleculeSpec
from ..errors import DataError, NloDesignError
from ..features import Tier, assemble
from ..msbnn import MsbnnModel
from ..vocab import GroupVocabulary, load_default_vocabulary, load_vocabulary
from . import schemas
from .runs import IllegalTransition, Run, RunManager


class AppState:
    def __init__(self, vocab: GroupVocabulary, data_dir: Path,
                 model: MsbnnModel | None = None):
        self.vocab = vocab
        self.model = model
        self.runs = RunManager(data_dir, self._fitness_factory)

    def _fitness_factory(self, target, constants):
        if self.model is None:
            raise DataError("no model loaded")
        return evolve.make_fitness(self.model, self.vocab, target, constants)

    def require_model(self) -> MsbnnModel:
        if self.model is None:
            raise HTTPException(status_code=409, detail="no model loaded")
        return self.model


def create_app(model_path: str | Path | None = None,
               vocab_path: str | Path | None = None,
               data_dir: str | Path = "runs") -> FastAPI:
    vocab = (load_vocabulary(vocab_path) if vocab_path
             else load_default_vocabulary())
    model = msbnn.load_msbnn(model_path) if model_path else None
    state = AppState(vocab, Path(data_dir), model)
    app = FastAPI(title="nlodesign", version="0.1.0")
    app.state.core = state

    @app.exception_handler(DataError)
    async def _data_error(_request, exc: DataError):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "model_loaded": state.model is not None}

    @app.get("/vocab")
    def get_vocab():
        def region(groups):
            return [{"name": g.name, "conj_weight": g.conj_weight,
                     "des_weights": list(g.des_weights),
                     "g_weights": list(g.g_weights)} for g in groups]
        v = state.vocab
        return {
            "schema_version": v.schema_version,
            "donors": region(v.donors),
            "bridges": region(v.bridges),
            "acceptors": region(v.acceptors),
            "connectors": [{"name": c.name, "conj_weight": c.conj_weight}
                           for c in v.connectors],
            "des_columns": {k: list(c) for k, c in v.des_columns.items()},
            "g_columns": {k: list(c) for k, c in v.g_columns.items()},
        }

    @app.get("/model")
    def model_info():
        m = state.require_model()
        return {"tier": m.tier.value, "feature_width": m.feature_width,
                "f3_width": m.f3_width}

    @app.post("/model")
    def load_model_route(req: schemas.ModelLoadRequest):
        try:
            state.model = msbnn.load_msbnn(req.path)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"tier": state.model.tier.value,
                "feature_width": state.model.feature_width}

    @app.post("/predict", response_model=schemas.PredictionModel)
    def predict(req: schemas.PredictRequest):
        model = state.require_model()
        try:
            spec = req.spec.to_spec()
            spec.validate(state.vocab, require_dpa=False)
            if model.tier == Tier.CLGC and req.f3 is None:
                raise DataError("model tier is clgc: request must include f3")
            f3 = req.f3 if model.tier == Tier.CLGC else None
            pred = msbnn.predict(model, assemble(spec, state.vocab, f3))
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.PredictionModel.from_prediction(pred)

    def _get_run(run_id: str) -> Run:
        run = state.runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        return run

    def _run_record(run: Run) -> schemas.RunRecordModel:
        with run.lock:
            trace = list(run.engine.trace)
            cands = run.engine.candidates()
            return schemas.RunRecordModel(
                run_id=run.run_id,
                state=run.state,
                config=schemas.EvolutionConfigModel(
                    **evolve.config_to_dict(run.config)),
                trace_so_far=[schemas.GenerationStatsModel(
                    generation=s.generation, best_g=s.best_g, mean_g=s.mean_g,
                    best_genome=list(s.best_genome)) for s in trace],
                candidates_so_far=[schemas.CandidateModel.from_record(c)
                                   for c in cands],
                created=run.created,
                updated=run.updated,
            )

    @app.post("/runs", status_code=201)
    def create_run(cfg: schemas.EvolutionConfigModel):
        state.require_model()
        try:
            run = state.runs.create(cfg.to_config(), state.vocab)
        except NloDesignError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"run_id": run.run_id}

    @app.get("/runs")
    def list_runs():
        return {"runs": state.runs.list_ids()}

    @app.get("/runs/{run_id}", response_model=schemas.RunRecordModel)
    def get_run(run_id: str):
        return _run_record(_get_run(run_id))

    @app.get("/runs/{run_id}/events")
    def run_events(run_id: str, start: int = 0):
        run = _get_run(run_id)

        def stream():
            idx = start
            while True:
                with run.lock:
                    while idx >= len(run.events):
                        if run.state in ("done", "failed"):
                            return
                        run.wake.wait(timeout=0.5)
                    batch = run.events[idx:]
                    idx = len(run.events)
                for event in batch:
                    yield json.dumps(event, sort_keys=True) + "\n"

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    def _control(run_id: str, action) -> dict:
        run = _get_run(run_id)
        try:
            action(run)
        except IllegalTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"run_id": run.run_id, "state": run.state}

    @app.post("/runs/{run_id}/pause")
    def pause_run(run_id: str):
        return _control(run_id, state.runs.pause)

    @app.post("/runs/{run_id}/resume")
    def resume_run(run_id: str, req: schemas.ResumeRequest | None = None):
        target = constants = None
        if req is not None:
            if req.target is not None:
                target = req.target.to_target()
            if req.constants is not None:
                constants = req.constants.to_constants()
        return _control(run_id, lambda run: state.runs.resume(run, target, constants))

    @app.post("/runs/{run_id}/stop")
    def stop_run(run_id: str):
        run = _get_run(run_id)
        try:
            state.runs.stop(run)
        except IllegalTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        # stopping is acknowledged once the worker reaches the boundary
        deadline = time.time() + 30.0
        while time.time() < deadline:
            with run.lock:
                if run.state in ("done", "failed"):
                    break
            time.sleep(0.01)
        return {"run_id": run.run_id, "state": run.state}

    return app
