import json

import pytest
from fastapi.testclient import TestClient

from drillguide import (
    DrillState,
    PoseSample,
    make_slab_case,
    run_trajectory,
    session_metrics,
    tick,
    write_case_dir,
)
from drillguide.errors import UnknownCase
from drillguide.metrics import RemovalEvent, read_event_log
from drillguide.service import create_app


@pytest.fixture(scope="module")
def service_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("cases")
    case = make_slab_case()
    write_case_dir(case, root / "slab-small")
    write_case_dir(make_slab_case(dims=(12, 12, 24)), root / "slab-tiny")
    return root, case


@pytest.fixture()
def client(service_env):
    root, _ = service_env
    app = create_app(root, max_sessions=4)
    with TestClient(app) as c:
        yield c


def open_session(client, case_id="slab-small", guidance=True):
    r = client.post("/sessions", json={"case_id": case_id,
                                       "guidance_enabled": guidance})
    assert r.status_code == 201, r.text
    return r.json()


def frame(pos_mm, on=True, t=0):
    return json.dumps({"t": t, "pos_mm": list(pos_mm), "on": on})


# ----------------------------------------------------------------------------
# HTTP surface
# ----------------------------------------------------------------------------

def test_missing_cases_dir_rejected(tmp_path):
    with pytest.raises(UnknownCase):
        create_app(tmp_path / "nowhere")


def test_list_cases(client):
    doc = client.get("/cases").json()
    ids = [c["case_id"] for c in doc["cases"]]
    assert ids == ["slab-small", "slab-tiny"]
    small = doc["cases"][0]
    assert small["dims"] == [16, 16, 28]
    assert small["spacing_mm"] == [0.48, 0.48, 0.48]
    assert len(small["home_pose_mm"]) == 3


def test_case_files_served_verbatim(client, service_env):
    root, _ = service_env
    for name, route in (("volume.capv", "volume"), ("plan.capp", "plan")):
        r = client.get(f"/cases/slab-small/{route}")
        assert r.status_code == 200
        assert r.content == (root / "slab-small" / name).read_bytes()
    r = client.get("/cases/ghost/volume")
    assert r.status_code == 404
    assert r.json()["error"] == "UnknownCase"


def test_create_session_payload(client):
    doc = open_session(client)
    assert doc["case_id"] == "slab-small"
    assert doc["label"] == "guided"
    assert doc["cfg"]["tick_ms"] == 5
    unguided = open_session(client, guidance=False)
    assert unguided["label"] == "unguided"
    assert unguided["session_id"] != doc["session_id"]


def test_create_session_unknown_case(client):
    r = client.post("/sessions", json={"case_id": "ghost"})
    assert r.status_code == 404
    assert r.json()["error"] == "UnknownCase"


def test_session_limit(service_env):
    root, _ = service_env
    app = create_app(root, max_sessions=2)
    with TestClient(app) as client:
        a = open_session(client)
        open_session(client)
        r = client.post("/sessions", json={"case_id": "slab-small"})
        assert r.status_code == 429
        assert r.json()["error"] == "ResourceExhausted"
        # finishing one frees a slot
        assert client.post(f"/sessions/{a['session_id']}/finish").status_code == 200
        open_session(client)


def test_finish_lifecycle(client, service_env):
    _, case = service_env
    sid = open_session(client)["session_id"]
    r = client.post(f"/sessions/{sid}/finish")
    assert r.status_code == 200
    doc = r.json()
    assert doc["session_id"] == sid
    assert doc["label"] == "guided"
    assert doc["breach_count"] == 0
    assert doc["drill_time_s"] == 0.0
    want = session_metrics([], case.plan, sid, "guided").as_doc()
    for key, val in want.items():
        assert doc[key] == val
    again = client.post(f"/sessions/{sid}/finish")
    assert again.status_code == 409
    assert again.json()["error"] == "SessionClosed"
    assert client.post("/sessions/none/finish").status_code == 404


# ----------------------------------------------------------------------------
# websocket streaming
# ----------------------------------------------------------------------------

def test_stream_reports_removals_with_zones(client, service_env):
    _, case = service_env
    sid = open_session(client)["session_id"]
    pose = case.volume.spec.index_to_world((8, 8, 17))  # cortical, cap 1
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        ws.send_text(frame(pose))
        out = json.loads(ws.receive_text())
    assert out["t"] == 5
    assert out["removed"] == [[8, 8, 17, "GREEN"]]
    assert out["force_n"] == pytest.approx(3.2)
    assert out["warning"] == "NONE"


def test_stream_without_guidance_omits_zones(client, service_env):
    _, case = service_env
    sid = open_session(client, guidance=False)["session_id"]
    pose = case.volume.spec.index_to_world((8, 8, 17))
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        ws.send_text(frame(pose))
        out = json.loads(ws.receive_text())
    assert out["removed"] == [[8, 8, 17]]
    assert out["warning"] == "NONE"  # feedback channels still work


def test_stream_matches_direct_engine(client, service_env):
    _, case = service_env
    sid = open_session(client)["session_id"]
    cx, cy = case.center_xy_mm
    poses = [(cx, cy, 9.4 - 0.1 * i) for i in range(20)]

    state = DrillState.fresh(case.plan, case.home_pose_mm)
    want = []
    for pose in poses:
        out = tick(state, pose, True, case.cfg, case.plan, case.bone_field)
        want.append({
            "t": state.sim_time_ms,
            "removed": [[*ijk, z.name] for ijk, z in out.removed],
            "force_n": out.force_n,
            "audio_hz": out.audio_hz,
            "warning": out.warning.name,
        })
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        got = []
        for i, pose in enumerate(poses):
            ws.send_text(frame(pose, t=i * 5))
            got.append(json.loads(ws.receive_text()))
    assert got == want


def test_malformed_frames_keep_connection_open(client, service_env):
    _, case = service_env
    sid = open_session(client)["session_id"]
    pose = case.volume.spec.index_to_world((8, 8, 17))
    bad = ["not json", "[1,2,3]", '{"t":0}',
           '{"t":0,"pos_mm":[1,2],"on":true}',
           '{"t":0,"pos_mm":[1,2,"x"],"on":true}',
           '{"t":0,"pos_mm":[1,2,3],"on":1}']
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        for raw in bad:
            ws.send_text(raw)
            out = json.loads(ws.receive_text())
            assert out["error"] == "MalformedMessage"
        ws.send_text(frame(pose))  # still alive and ticking
        assert json.loads(ws.receive_text())["t"] == 5


def test_stream_unknown_and_closed_sessions(client):
    with client.websocket_connect("/sessions/ghost/stream") as ws:
        out = json.loads(ws.receive_text())
        assert out["error"] == "SessionClosed"
    sid = open_session(client)["session_id"]
    client.post(f"/sessions/{sid}/finish")
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        ws.send_text(frame((0, 0, 0), on=False))
        out = json.loads(ws.receive_text())
        assert out["error"] == "SessionClosed"


def test_concurrent_sessions_are_isolated(client, service_env):
    _, case = service_env
    sids = [open_session(client)["session_id"] for _ in range(4)]
    cx, cy = case.center_xy_mm
    poses = {sid: (cx - 0.6 + 0.4 * i, cy, 9.3 - 0.2 * i)
             for i, sid in enumerate(sids)}

    streams = [client.websocket_connect(f"/sessions/{sid}/stream")
               for sid in sids]
    wss = [s.__enter__() for s in streams]
    try:
        outs = {sid: [] for sid in sids}
        for step in range(15):
            # interleave frames across all four sessions each step
            for sid, ws in zip(sids, wss):
                ws.send_text(frame(poses[sid], t=step * 5))
            for sid, ws in zip(sids, wss):
                outs[sid].append(json.loads(ws.receive_text()))
    finally:
        for s in streams:
            s.__exit__(None, None, None)

    for i, sid in enumerate(sids):
        # each session must match a solo offline replay of its own poses
        samples = [PoseSample(5 * (k + 1), poses[sid], True) for k in range(15)]
        log = run_trajectory(case.plan, case.bone_field, case.cfg, samples,
                             case.home_pose_mm)
        got = [(e["t"], tuple(v[:3]), v[3]) for e in outs[sid]
               for v in e["removed"]]
        want = [(ev.t_ms, ev.voxel, ev.zone.name) for ev in log]
        assert got == want, f"session {i} diverged"


def test_finish_writes_log_and_metrics_match(client, service_env, tmp_path):
    root, case = service_env
    sid = open_session(client)["session_id"]
    cx, cy = case.center_xy_mm
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        for i in range(12):
            ws.send_text(frame((cx, cy, 9.4 - 0.12 * i), t=5 * i))
            ws.receive_text()
    doc = client.post(f"/sessions/{sid}/finish").json()
    log_path = root / "_session_logs" / f"{sid}.jsonl"
    assert doc["log_path"] == str(log_path)
    events = read_event_log(log_path)
    assert events, "the descent removed material"
    assert isinstance(events[0], RemovalEvent)
    want = session_metrics(events, case.plan, sid, "guided").as_doc()
    assert {k: doc[k] for k in want} == want
