"""HTTP + websocket session service around the drill engine.

The service owns the clock: inbound pose frames carry a client time `t`
for the operator's bookkeeping, but ticks are stamped from the engine
clock, one tick per frame, exactly like offline replay.  Case data is
loaded once and shared read-only between sessions; each session owns its
own mutable drill state, so concurrent sessions cannot interact.
"""

import json
import math
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import engine as eng
from .distance import DistanceField, load_field
from .engine import DrillConfig, DrillState, config_from_doc
from .errors import DrillGuideError, MalformedMessage, UnknownCase
from .fileio import canonical_json
from .guidance import ZonePlan, load_plan
from .metrics import RemovalEvent, session_metrics, write_event_log

__all__ = ["create_app"]


@dataclass(frozen=True)
class _Case:
    case_id: str
    path: Path
    plan: ZonePlan
    bone: DistanceField
    cfg: DrillConfig
    home_pose_mm: tuple[float, float, float]


@dataclass
class _Session:
    session_id: str
    case: _Case
    guidance_enabled: bool
    state: DrillState
    events: list[RemovalEvent] = field(default_factory=list)
    closed: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def label(self) -> str:
        return "guided" if self.guidance_enabled else "unguided"


class _CreateSession(BaseModel):
    case_id: str
    guidance_enabled: bool = True


def _error(status: int, name: str, detail: str = "") -> JSONResponse:
    body = {"error": name}
    if detail:
        body["detail"] = detail
    return JSONResponse(body, status_code=status)


def _load_case(cases_dir: Path, case_id: str) -> _Case:
    d = cases_dir / case_id
    meta = json.loads((d / "case.json").read_text("utf-8"))
    cfg = config_from_doc(meta.get("drill", {}))
    x, y, z = (float(v) for v in meta["home_pose_mm"])
    return _Case(
        case_id=case_id,
        path=d,
        plan=load_plan(d / "plan.capp"),
        bone=load_field(d / "bone.capf"),
        cfg=cfg,
        home_pose_mm=(x, y, z),
    )


def _parse_pose_frame(raw: str):
    """Validate one inbound {"t", "pos_mm", "on"} frame."""
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"not JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedMessage("frame must be a JSON object")
    missing = {"t", "pos_mm", "on"} - set(doc)
    if missing:
        raise MalformedMessage(f"missing keys: {sorted(missing)}")
    pos = doc["pos_mm"]
    if (not isinstance(pos, (list, tuple)) or len(pos) != 3
            or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in pos)):
        raise MalformedMessage("pos_mm must be three finite numbers")
    if not isinstance(doc["on"], bool):
        raise MalformedMessage("on must be a boolean")
    if not isinstance(doc["t"], (int, float)) or not math.isfinite(doc["t"]):
        raise MalformedMessage("t must be a finite number")
    return (float(pos[0]), float(pos[1]), float(pos[2])), doc["on"]


def create_app(cases_dir, log_dir=None, max_sessions: int = 16,
               min_voxels: int = 5, merge_window_ms: int = 2000,
               ui_dir=None) -> FastAPI:
    """Build the service app over a directory of case subdirectories.

    Each case is `cases_dir/<case_id>/` holding volume.capv, plan.capp,
    bone.capf and case.json.  Finished session logs land in `log_dir`
    (default `cases_dir/_session_logs`).  When `ui_dir` is given the
    directory is served under /ui for the browser client.
    """
    cases_dir = Path(cases_dir)
    if not cases_dir.is_dir():
        raise UnknownCase(f"case directory {cases_dir} does not exist")
    log_dir = Path(log_dir) if log_dir else cases_dir / "_session_logs"

    app = FastAPI(title="drillguide session service")
    cases: dict[str, _Case] = {}
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    def case_ids() -> list[str]:
        return sorted(p.name for p in cases_dir.iterdir()
                      if (p / "case.json").is_file())

    def get_case(case_id: str) -> _Case:
        with registry_lock:
            if case_id in cases:
                return cases[case_id]
        if case_id not in case_ids():
            raise UnknownCase(case_id)
        case = _load_case(cases_dir, case_id)
        with registry_lock:
            return cases.setdefault(case_id, case)

    @app.get("/cases")
    def list_cases():
        out = []
        for cid in case_ids():
            case = get_case(cid)
            out.append({
                "case_id": cid,
                "dims": list(case.plan.spec.dims),
                "spacing_mm": list(case.plan.spec.spacing_mm),
                "home_pose_mm": list(case.home_pose_mm),
            })
        return {"cases": out}

    def _case_file(case_id: str, filename: str):
        if case_id not in case_ids():
            return _error(404, "UnknownCase", case_id)
        data = (cases_dir / case_id / filename).read_bytes()
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/cases/{case_id}/volume")
    def get_volume(case_id: str):
        return _case_file(case_id, "volume.capv")

    @app.get("/cases/{case_id}/plan")
    def get_plan(case_id: str):
        return _case_file(case_id, "plan.capp")

    @app.post("/sessions", status_code=201)
    def create_session(req: _CreateSession):
        try:
            case = get_case(req.case_id)
        except UnknownCase as exc:
            return _error(404, "UnknownCase", str(exc))
        with registry_lock:
            active = sum(1 for s in sessions.values() if not s.closed)
            if active >= max_sessions:
                return _error(429, "ResourceExhausted",
                              f"{active} sessions already active")
            sid = uuid.uuid4().hex
            sessions[sid] = _Session(
                session_id=sid,
                case=case,
                guidance_enabled=req.guidance_enabled,
                state=DrillState.fresh(case.plan, case.home_pose_mm),
            )
        return {
            "session_id": sid,
            "case_id": case.case_id,
            "guidance_enabled": req.guidance_enabled,
            "label": sessions[sid].label,
            "home_pose_mm": list(case.home_pose_mm),
            "cfg": case.cfg.as_doc(),
        }

    @app.post("/sessions/{sid}/finish")
    def finish_session(sid: str):
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            return _error(404, "SessionClosed", f"unknown session {sid}")
        with sess.lock:
            if sess.closed:
                return _error(409, "SessionClosed", f"{sid} already finished")
            sess.closed = True
            events = list(sess.events)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_path = log_dir / f"{sid}.jsonl"
        write_event_log(events, log_path)
        row = session_metrics(events, sess.case.plan, sid, sess.label,
                              min_voxels, merge_window_ms)
        doc = row.as_doc()
        doc["case_id"] = sess.case.case_id
        doc["log_path"] = str(log_path)
        return doc

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        await ws.accept()
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            await ws.send_text(canonical_json(
                {"error": "SessionClosed", "detail": f"unknown session {sid}"}))
            await ws.close(code=1008)
            return
        case = sess.case
        while True:
            try:
                raw = await ws.receive_text()
            except WebSocketDisconnect:
                return
            if sess.closed:
                await ws.send_text(canonical_json(
                    {"error": "SessionClosed", "detail": f"{sid} already finished"}))
                await ws.close(code=1008)
                return
            try:
                pose, on = _parse_pose_frame(raw)
                with sess.lock:
                    out = eng.tick(sess.state, pose, on, case.cfg, case.plan, case.bone)
                    t = sess.state.sim_time_ms
                    for ijk, zone in out.removed:
                        sess.events.append(RemovalEvent(t, ijk, zone))
            except DrillGuideError as exc:
                await ws.send_text(canonical_json(
                    {"error": type(exc).__name__, "detail": str(exc)}))
                continue
            if sess.guidance_enabled:
                removed = [[*ijk, zone.name] for ijk, zone in out.removed]
            else:
                removed = [[*ijk] for ijk, _ in out.removed]
            frame = {
                "t": t,
                "removed": removed,
                "force_n": out.force_n,
                "audio_hz": out.audio_hz,
                "warning": out.warning.name,
            }
            await ws.send_text(canonical_json(frame))

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
