"""HTTP service for live labeling sessions.

Each session owns an online learner seeded for reproducibility, serves
uniform random comparison queries, and persists an append-only answer log
plus periodic kernel checkpoints so a restart recovers the exact state.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .core import Kernel, LossModel, Query, Triplet, load_kernel, save_kernel
from .harness import normalized_error
from .linalg import top_k_eigenpairs
from .online import OnlineLearner, StepPolicy

CHECKPOINT_EVERY = 25


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _policy_from_params(params: dict[str, Any]) -> tuple[LossModel, StepPolicy]:
    kind = params.get("policy", "pa_gnmds")
    if kind == "pa_gnmds":
        return LossModel.GNMDS, StepPolicy.pa_gnmds()
    if kind == "pa_ste":
        return LossModel.STE, StepPolicy.pa_ste(float(params.get("p", 0.73)))
    if kind == "constant":
        model = LossModel(params.get("model", "ste"))
        return model, StepPolicy.constant(float(params.get("delta", 1.0)))
    raise ServiceError(422, "bad_policy", f"unknown policy {kind!r}")


@dataclass
class Session:
    id: str
    objects: list[dict]
    learner: OnlineLearner
    policy_params: dict
    seed: int
    directory: Path
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)

    def __post_init__(self):
        self.lock = threading.Lock()
        self._persist = True
        self.pending: tuple[str, Query] | None = None
        self.last_query: Query | None = None
        self.answers: list[dict] = []
        self._selector = np.random.default_rng(self.seed)
        self._query_counter = 0

    @property
    def n(self) -> int:
        return len(self.objects)

    # --- query selection: uniform, never repeating the previous query ---

    def _draw_query(self) -> Query:
        while True:
            head = int(self._selector.integers(self.n))
            o1, o2 = self._selector.choice(self.n - 1, size=2, replace=False)
            o1, o2 = int(o1), int(o2)
            if o1 >= head:
                o1 += 1
            if o2 >= head:
                o2 += 1
            q = Query(head, tuple(sorted((o1, o2))))
            if self.last_query is None or q != self.last_query:
                return q

    def next_query(self) -> tuple[str, Query]:
        with self.lock:
            if self.pending is None:
                q = self._draw_query()
                self._query_counter += 1
                self.pending = (f"q{self._query_counter}", q)
            return self.pending

    def submit_answer(self, query_id: str, chosen: int) -> dict:
        with self.lock:
            if self.pending is None or self.pending[0] != query_id:
                raise ServiceError(409, "stale_query",
                                   "answer does not match the pending query")
            qid, q = self.pending
            if chosen not in q.options:
                raise ServiceError(422, "bad_choice",
                                   f"chosen index {chosen} is not an option of {q}")
            other = q.options[0] if q.options[1] == chosen else q.options[1]
            t = Triplet(q.head, chosen, other)
            reports = self.learner.observe_with_replay(t)
            self.pending = None
            self.last_query = q
            record = {
                "query_id": qid, "head": q.head,
                "options": list(q.options), "chosen": chosen,
            }
            self.answers.append(record)
            self.updated = time.time()
            if self._persist:
                self._append_log(record)
                if len(self.answers) % CHECKPOINT_EVERY == 0:
                    self._write_checkpoint()
            first = reports[0]
            return {
                "triplet": list(t),
                "gamma": first.gamma,
                "active": first.active,
                "projected": first.projected,
                "skipped_projection": first.skipped,
                "eig_lower_bound": self.learner.kernel.eig_lower_bound,
                "replay_steps": len(reports) - 1,
                "answers": len(self.answers),
            }

    # --- read-only snapshots ---

    def kernel_snapshot(self) -> Kernel:
        with self.lock:
            return self.learner.kernel.copy()

    def embedding(self, k: int) -> list[dict]:
        if k > self.n:
            raise ServiceError(422, "bad_dimension", f"k={k} exceeds n={self.n}")
        kernel = self.kernel_snapshot()
        pairs = top_k_eigenpairs(kernel.mat, k)
        coords = np.column_stack(
            [np.sqrt(max(p.value, 0.0)) * p.vector for p in pairs]
        )
        return [
            {"index": i, "label": self.objects[i].get("label"),
             "coords": [float(x) for x in coords[i]]}
            for i in range(self.n)
        ]

    def stats(self) -> dict:
        with self.lock:
            s = self.learner.stats
            log = [Triplet(*r) for r in
                   ((a["head"], a["chosen"],
                     a["options"][0] if a["options"][1] == a["chosen"] else a["options"][1])
                    for a in self.answers)]
            err = normalized_error(self.learner.kernel, log) if log else None
            return {
                "answers": len(self.answers),
                "train_error_over_log": err,
                "updates": s.updates,
                "passive": s.passive,
                "eig_computations": s.eig_computations,
                "projections_applied": s.projections_applied,
                "skips": s.skips,
                "eig_lower_bound": self.learner.kernel.eig_lower_bound,
            }

    # --- persistence: meta.json + answers.jsonl + periodic checkpoint ---

    def _append_log(self, record: dict) -> None:
        with open(self.directory / "answers.jsonl", "a") as fh:
            fh.write(json.dumps(record) + "\n")

    def _write_checkpoint(self) -> None:
        buf = io.StringIO()
        save_kernel(self.learner.kernel, buf)
        (self.directory / "kernel.txt").write_text(buf.getvalue())
        state = {
            "answers": len(self.answers),
            "learner_rng": self.learner._rng.bit_generator.state,
            "selector_rng": self._selector.bit_generator.state,
            "steps": self.learner._steps,
            "warm_vec": (None if self.learner._warm_vec is None
                         else self.learner._warm_vec.tolist()),
            "query_counter": self._query_counter,
            "stats": vars(self.learner.stats),
        }
        (self.directory / "checkpoint.json").write_text(json.dumps(state))

    def write_meta(self) -> None:
        meta = {
            "id": self.id, "objects": self.objects,
            "policy": self.policy_params, "seed": self.seed,
            "created": self.created,
        }
        (self.directory / "meta.json").write_text(json.dumps(meta))

    @classmethod
    def load(cls, directory: Path) -> "Session":
        meta = json.loads((directory / "meta.json").read_text())
        model, policy = _policy_from_params(meta["policy"])
        learner = OnlineLearner.create(
            len(meta["objects"]), model, policy,
            int(meta["policy"].get("beta", 1)), meta["seed"],
        )
        session = cls(meta["id"], meta["objects"], learner, meta["policy"],
                      meta["seed"], directory, created=meta["created"])
        replay_from = 0
        ck = directory / "checkpoint.json"
        if ck.exists():
            state = json.loads(ck.read_text())
            with open(directory / "kernel.txt") as fh:
                learner.kernel = load_kernel(fh)
            learner._rng.bit_generator.state = state["learner_rng"]
            session._selector.bit_generator.state = state["selector_rng"]
            learner._steps = state["steps"]
            if state.get("warm_vec") is not None:
                learner._warm_vec = np.array(state["warm_vec"])
            session._query_counter = state["query_counter"]
            for key, value in state["stats"].items():
                setattr(learner.stats, key, value)
            replay_from = state["answers"]
        log_path = directory / "answers.jsonl"
        records = []
        if log_path.exists():
            with open(log_path) as fh:
                records = [json.loads(line) for line in fh if line.strip()]
        # answers before the checkpoint only repopulate the replay buffer
        # and the log; the kernel state for them came from the checkpoint
        for rec in records[:replay_from]:
            other = (rec["options"][0] if rec["options"][1] == rec["chosen"]
                     else rec["options"][1])
            t = Triplet(rec["head"], rec["chosen"], other)
            learner.observed.append(t)
            learner.j += 1
            session.answers.append(rec)
            session.last_query = Query(rec["head"], tuple(rec["options"]))
        # tail answers are replayed through the learner for exact state
        session._persist = False
        for rec in records[replay_from:]:
            qid, q = session.next_query()
            session.submit_answer(qid, rec["chosen"])
        session._persist = True
        return session


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, objects: list[dict], policy_params: dict, seed: int) -> Session:
        if len(objects) < 3:
            raise ServiceError(422, "too_few_objects", "need at least 3 objects")
        model, policy = _policy_from_params(policy_params)
        beta = int(policy_params.get("beta", 1))
        learner = OnlineLearner.create(len(objects), model, policy, beta, seed)
        sid = uuid.uuid4().hex[:12]
        directory = self.root / sid
        directory.mkdir(parents=True)
        session = Session(sid, objects, learner, policy_params, seed, directory)
        session.write_meta()
        with self._lock:
            self._sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            if sid in self._sessions:
                return self._sessions[sid]
        directory = self.root / sid
        if (directory / "meta.json").exists():
            session = Session.load(directory)
            with self._lock:
                self._sessions.setdefault(sid, session)
                return self._sessions[sid]
        raise ServiceError(404, "session_not_found", f"no session {sid!r}")


class CreateSessionBody(BaseModel):
    objects: list[dict | str]
    policy: dict = Field(default_factory=lambda: {"policy": "pa_gnmds", "beta": 1})
    seed: int = 0


class AnswerBody(BaseModel):
    query_id: str
    chosen: int


def create_app(state_dir: str | Path = "sessions",
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="rckl session service")
    store = SessionStore(state_dir)
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def _service_error(_: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        objects = [
            {"index": i, **({"label": o} if isinstance(o, str) else o)}
            for i, o in enumerate(body.objects)
        ]
        session = store.create(objects, body.policy, body.seed)
        return {"id": session.id}

    @app.get("/sessions/{sid}/query")
    def get_query(sid: str):
        qid, q = store.get(sid).next_query()
        return {"query_id": qid, "head": q.head, "options": list(q.options)}

    @app.post("/sessions/{sid}/answer")
    def post_answer(sid: str, body: AnswerBody):
        return store.get(sid).submit_answer(body.query_id, body.chosen)

    @app.get("/sessions/{sid}/embedding")
    def get_embedding(sid: str, k: int = 2):
        return {"k": k, "points": store.get(sid).embedding(k)}

    @app.get("/sessions/{sid}/stats")
    def get_stats(sid: str):
        return store.get(sid).stats()

    @app.get("/sessions/{sid}/kernel")
    def get_kernel(sid: str):
        buf = io.StringIO()
        save_kernel(store.get(sid).kernel_snapshot(), buf)
        return Response(content=buf.getvalue(), media_type="text/plain")

    @app.get("/sessions/{sid}/objects")
    def get_objects(sid: str):
        return {"objects": store.get(sid).objects}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/static", StaticFiles(directory=str(static_dir)), name="static")

    return app
