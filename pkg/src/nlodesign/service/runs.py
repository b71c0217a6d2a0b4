"""Background execution of evolution runs with pause/steer/stop control.

Each run owns one worker thread that advances the shared EvolutionEngine
one generation at a time.  State transitions and event appends happen
under the run lock; readers never block on a generation's compute.  Events
are also appended to a JSONL artifact file so finished runs survive
restarts in read-only form.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .. import evolve

LEGAL_TRANSITIONS = {
    "queued": {"running"},
    "running": {"paused", "done", "failed"},
    "paused": {"running", "done"},
    "done": set(),
    "failed": set(),
}


@dataclass
class Run:
    run_id: str
    config: evolve.EvolutionConfig
    engine: evolve.EvolutionEngine
    state: str = "queued"
    events: list[dict] = field(default_factory=list)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)
    wake: threading.Condition = None  # type: ignore[assignment]
    pause_requested: bool = False
    stop_requested: bool = False
    pending_amend: dict | None = None
    error: str | None = None

    def __post_init__(self):
        self.wake = threading.Condition(self.lock)


class RunManager:
    def __init__(self, data_dir: Path, fitness_factory):
        """fitness_factory(target, constants) builds the scoring function;
        the service wires it to the currently loaded model."""
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.fitness_factory = fitness_factory
        self.runs: dict[str, Run] = {}
        self._lock = threading.Lock()

    def create(self, cfg: evolve.EvolutionConfig, vocab) -> Run:
        fitness_fn = self.fitness_factory(cfg.target, cfg.constants)
        engine = evolve.EvolutionEngine(cfg, fitness_fn, vocab)
        run = Run(run_id=uuid.uuid4().hex[:12], config=cfg, engine=engine)
        with self._lock:
            self.runs[run.run_id] = run
        thread = threading.Thread(target=self._worker, args=(run,), daemon=True)
        thread.start()
        return run

    def get(self, run_id: str) -> Run | None:
        with self._lock:
            return self.runs.get(run_id)

    def list_ids(self) -> list[str]:
        with self._lock:
            return sorted(self.runs)

    # -- control -----------------------------------------------------------

    def pause(self, run: Run) -> None:
        with run.lock:
            self._require(run, "running", "paused")
            run.pause_requested = True
            run.wake.notify_all()

    def resume(self, run: Run, target=None, constants=None) -> None:
        with run.lock:
            self._require(run, "paused", "running")
            run.pause_requested = False
            if target is not None or constants is not None:
                run.pending_amend = {"target": target, "constants": constants}
            run.wake.notify_all()

    def stop(self, run: Run) -> None:
        with run.lock:
            if run.state in ("done", "failed"):
                raise IllegalTransition(run.state, "done")
            run.stop_requested = True
            run.wake.notify_all()

    @staticmethod
    def _require(run: Run, current: str, nxt: str) -> None:
        if run.state != current or nxt not in LEGAL_TRANSITIONS[current]:
            raise IllegalTransition(run.state, nxt)

    # -- worker ------------------------------------------------------------

    def _artifact_path(self, run: Run) -> Path:
        return self.data_dir / f"run-{run.run_id}.jsonl"

    def _emit(self, run: Run, event: dict) -> None:
        # caller holds run.lock
        event["seq"] = len(run.events)
        run.events.append(event)
        run.updated = time.time()
        run.wake.notify_all()
        with self._artifact_path(run).open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _set_state(self, run: Run, state: str) -> None:
        run.state = state
        self._emit(run, {"type": "state", "state": state})

    def _worker(self, run: Run) -> None:
        engine = run.engine
        try:
            with run.lock:
                self._set_state(run, "running")
                self._emit(run, self._generation_event(engine.trace[0], engine))
            while True:
                with run.lock:
                    while run.pause_requested and not run.stop_requested:
                        if run.state == "running":
                            self._set_state(run, "paused")
                        run.wake.wait(timeout=0.5)
                    if run.state == "paused" and not run.pause_requested:
                        if run.pending_amend:
                            amend = run.pending_amend
                            run.pending_amend = None
                            target = amend["target"] or run.config.target
                            constants = amend["constants"] or run.config.constants
                            engine.amend(
                                target=target, constants=constants,
                                fitness_fn=self.fitness_factory(target, constants))
                        self._set_state(run, "running")
                    if run.stop_requested or engine.generation >= run.config.generations:
                        self._set_state(run, "done")
                        return
                stats = engine.step()  # compute outside the lock
                with run.lock:
                    self._emit(run, self._generation_event(stats, engine))
        except Exception as exc:  # noqa: BLE001 - any failure marks the run failed
            with run.lock:
                run.error = str(exc)
                if run.state not in ("done", "failed"):
                    self._set_state(run, "failed")

    @staticmethod
    def _generation_event(stats: evolve.GenerationStats,
                          engine: evolve.EvolutionEngine) -> dict:
        best = engine.candidates()[0] if engine._seen else None
        return {
            "type": "generation",
            "generation": stats.generation,
            "best_g": stats.best_g,
            "mean_g": stats.mean_g,
            "best_candidate": evolve.result_to_dict(
                evolve.EvolutionResult(engine.cfg, [], [best]))["candidates"][0]
            if best else None,
        }


class IllegalTransition(Exception):
    def __init__(self, current: str, requested: str):
        super().__init__(f"illegal state transition {current} -> {requested}")
        self.current = current
        self.requested = requested
