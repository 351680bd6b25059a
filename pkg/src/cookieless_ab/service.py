"""HTTP API around the simulator for the web UI and other clients.

Endpoints
---------
POST /api/designs   validate a design section, echo the normalized form
POST /api/runs      submit a run config; sweeps execute on a small
                    worker pool and are addressed by the config digest,
                    so resubmitting a finished config is a no-op and
                    resubmitting one still in flight is a 409
GET  /api/runs      list all known runs, newest first
GET  /api/runs/{id} full state of one run, including results when done

Completed runs are persisted as JSON under the state directory and
reloaded on startup, so a restarted service still knows its history.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .errors import ConfigError, ValidationError
from .core import DesignConfig
from .report import SCHEMA_VERSION, sweep_manifest
from .runconfig import RunConfig, parse_run_config
from .simulator import sweep

_TERMINAL = {"complete", "failed"}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunStore:
    """Thread-safe run registry backed by one JSON file per finished run."""

    def __init__(self, state_dir: Path, max_workers: int = 2):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._runs: dict[str, dict] = {}
        self._executor = ThreadPoolExecutor(max_workers=max_workers)
        self._load_existing()

    def _load_existing(self) -> None:
        for path in sorted(self.state_dir.glob("*.json")):
            try:
                doc = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError):
                continue
            if doc.get("schema_version") != SCHEMA_VERSION:
                continue  # a future or foreign layout; leave it alone
            run_id = doc.get("run_id")
            if isinstance(run_id, str) and doc.get("status") in _TERMINAL:
                self._runs[run_id] = doc

    def submit(self, config: RunConfig) -> tuple[dict, bool]:
        """Register a run; returns (state, created). 409s happen upstream."""
        run_id = config.run_id
        with self._lock:
            existing = self._runs.get(run_id)
            if existing is not None:
                return dict(existing), False
            state = {
                "schema_version": SCHEMA_VERSION,
                "run_id": run_id,
                "status": "pending",
                "created_at": _now(),
                "config": config.canonical(),
            }
            self._runs[run_id] = state
            snapshot = dict(state)  # worker may flip status right away
        self._executor.submit(self._execute, run_id, config)
        return snapshot, True

    def _execute(self, run_id: str, config: RunConfig) -> None:
        with self._lock:
            state = self._runs[run_id]
            if state["status"] != "pending":
                return
            state["status"] = "running"
            state["started_at"] = _now()
        try:
            result = sweep(
                config.synthetic,
                config.design,
                config.sweep_axis,
                config.sweep_values,
                config.methods,
            )
            manifest = sweep_manifest(result, run_id, config.canonical())
            with self._lock:
                state = self._runs[run_id]
                state.update(
                    status="complete",
                    finished_at=_now(),
                    axis=manifest["axis"],
                    rows=manifest["rows"],
                    failures=manifest["failures"],
                )
                snapshot = dict(state)
        except Exception as exc:  # noqa: BLE001 - failures become run state
            with self._lock:
                state = self._runs[run_id]
                state.update(
                    status="failed",
                    finished_at=_now(),
                    error=f"{type(exc).__name__}: {exc}",
                )
                snapshot = dict(state)
        self._persist(snapshot)

    def _persist(self, state: dict) -> None:
        path = self.state_dir / f"{state['run_id']}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(state, indent=2) + "\n")
        tmp.replace(path)

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            state = self._runs.get(run_id)
            return dict(state) if state is not None else None

    def list(self) -> list[dict]:
        with self._lock:
            states = [dict(s) for s in self._runs.values()]
        states.sort(key=lambda s: (s.get("created_at", ""), s["run_id"]), reverse=True)
        return [
            {
                "run_id": s["run_id"],
                "status": s["status"],
                "created_at": s.get("created_at"),
                "axis": s.get("config", {}).get("sweep", {}).get("axis"),
                "n_values": len(s.get("config", {}).get("sweep", {}).get("values", [])),
            }
            for s in states
        ]

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)


def create_app(state_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    store = RunStore(Path(state_dir))

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        # Drain the worker pool on shutdown so every finished run is
        # persisted before the process (or a test client) moves on.
        yield
        store.shutdown()

    app = FastAPI(title="cookieless-ab", version="0.1.0", lifespan=lifespan)
    app.state.store = store

    @app.exception_handler(ConfigError)
    async def _config_error(_req: Request, exc: ConfigError):
        return JSONResponse(
            status_code=400,
            content={
                "error": "invalid config",
                "issues": [{"field": p, "message": m} for p, m in exc.issues],
            },
        )

    @app.exception_handler(ValidationError)
    async def _validation_error(_req: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _body_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": f"bad request body: {exc}"})

    @app.post("/api/designs")
    async def validate_design(payload: dict):
        issues: list[tuple[str, str]] = []
        if not isinstance(payload, dict):
            raise ConfigError([("", "design must be a mapping")])
        alpha = payload.get("alpha")
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
            issues.append(("alpha", f"expected a number, got {alpha!r}"))
        salt = payload.get("cluster_salt", 0)
        if isinstance(salt, bool) or not isinstance(salt, int):
            issues.append(("cluster_salt", f"expected an integer, got {salt!r}"))
        split = payload.get("site1_split", 0.5)
        if isinstance(split, bool) or not isinstance(split, (int, float)):
            issues.append(("site1_split", f"expected a number, got {split!r}"))
        if issues:
            raise ConfigError(issues)
        try:
            design = DesignConfig(
                alpha=float(alpha), cluster_salt=int(salt), site1_split=float(split)
            )
        except ValidationError as exc:
            raise ConfigError([("design", str(exc))]) from exc
        return {
            "design": {
                "alpha": design.alpha,
                "cluster_salt": design.cluster_salt,
                "site1_split": design.site1_split,
                "treatment_labels": list(design.treatment_labels),
                "allocation": {
                    "C1": {"site2_arm3": design.alpha},
                    "C2": {"site2_arm3": 1.0 - design.alpha},
                },
            }
        }

    @app.post("/api/runs")
    async def submit_run(payload: dict):
        config = parse_run_config(payload)
        state, created = store.submit(config)
        if created:
            return JSONResponse(
                status_code=202,
                content={"run_id": state["run_id"], "status": state["status"]},
            )
        if state["status"] in _TERMINAL:
            return {"run_id": state["run_id"], "status": state["status"]}
        return JSONResponse(
            status_code=409,
            content={
                "run_id": state["run_id"],
                "status": state["status"],
                "error": "an identical run is already in flight",
            },
        )

    @app.get("/api/runs")
    async def list_runs():
        return {"runs": store.list()}

    @app.get("/api/runs/{run_id}")
    async def get_run(run_id: str):
        state = store.get(run_id)
        if state is None:
            return JSONResponse(status_code=404, content={"error": f"unknown run id {run_id!r}"})
        return state

    if static_dir is not None:
        # Mounted last so the /api routes above keep precedence.
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=Path(static_dir), html=True), name="ui")

    return app
