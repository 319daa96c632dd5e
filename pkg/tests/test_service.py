import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from basecamp.cloud import PointCloud, save_cloud
from basecamp.service.app import create_app


def ply_bytes(points) -> bytes:
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / "c.ply"
        save_cloud(PointCloud(np.asarray(points, dtype=float)), path)
        return path.read_bytes()


def planar_cell_cloud(rng):
    """A dense flat patch near (0.45, 0, 0) plus a volumetric blob obstacle,
    within planar2's reach."""
    patch = np.array([0.45, 0.0, 0.0]) + rng.uniform(-1, 1, (400, 3)) * [0.07, 0.07, 0.0008]
    blob = np.array([0.0, 0.7, 0.0]) + rng.uniform(-1, 1, (200, 3)) * 0.08
    return np.vstack([patch, blob])


def annotations_payload():
    return {
        "strokes": [
            {
                "label": "interact", "zone_id": "pick", "radius": 0.06,
                "samples": [{"origin": [0.45, 0.0, 1.0], "direction": [0, 0, -1]},
                            {"origin": [0.42, 0.03, 1.0], "direction": [0, 0, -1]}],
                "approach_dir": [0, 0, -1],
            },
            {
                "label": "avoid", "zone_id": "blob", "radius": 0.1,
                "samples": [{"origin": [0.0, 0.7, 1.0], "direction": [0, 0, -1]}],
            },
        ],
        "searchspace": {"center": [0, 0, 0], "orientation": [0, 0, 0, 1],
                        "half_extent_x": 0.15, "half_extent_y": 0.15},
    }


OPTIMIZE_BODY = {"robot": "planar2", "seed_targets": 1, "seed_opt": 2,
                 "per_zone": 8, "max_evals": 30}


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path)
    with TestClient(app) as c:
        yield c


def make_ready_session(client):
    sid = client.post("/v1/sessions").json()["session_id"]
    rng = np.random.default_rng(50)
    r = client.put(f"/v1/sessions/{sid}/cloud",
                   content=ply_bytes(planar_cell_cloud(rng)))
    assert r.status_code == 200, r.text
    r = client.put(f"/v1/sessions/{sid}/annotations", json=annotations_payload())
    assert r.status_code == 200, r.text
    return sid


def wait_done(client, sid, timeout=120.0):
    t0 = time.time()
    while time.time() - t0 < timeout:
        info = client.get(f"/v1/sessions/{sid}").json()
        if info["status"] not in ("optimizing",):
            return info
        time.sleep(0.1)
    raise TimeoutError("optimization did not finish")


def test_create_session_fresh_ids(client):
    r1 = client.post("/v1/sessions")
    r2 = client.post("/v1/sessions")
    assert r1.status_code == 201 and r2.status_code == 201
    assert r1.json()["session_id"] != r2.json()["session_id"]
    assert r1.json()["status"] == "annotating"


def test_get_unknown_session_404(client):
    assert client.get("/v1/sessions/doesnotexist").status_code == 404


def test_upload_cloud_summary(client):
    sid = client.post("/v1/sessions").json()["session_id"]
    rng = np.random.default_rng(51)
    body = ply_bytes(rng.uniform(-1, 1, (50, 3)))
    r = client.put(f"/v1/sessions/{sid}/cloud", content=body)
    assert r.status_code == 200
    assert r.json()["point_count"] == 50
    info = client.get(f"/v1/sessions/{sid}").json()
    assert info["point_count"] == 50


def test_upload_truncated_ply_422(client):
    sid = client.post("/v1/sessions").json()["session_id"]
    body = b"ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\n" \
           b"property float y\nproperty float z\nend_header\n0 0 0\n"
    r = client.put(f"/v1/sessions/{sid}/cloud", content=body)
    assert r.status_code == 422
    assert "line" in r.json()["detail"]


def test_reupload_invalidates_derived(client):
    sid = make_ready_session(client)
    assert client.get(f"/v1/sessions/{sid}").json()["has_annotations"]
    rng = np.random.default_rng(52)
    r = client.put(f"/v1/sessions/{sid}/cloud",
                   content=ply_bytes(planar_cell_cloud(rng)))
    assert r.status_code == 200
    assert not client.get(f"/v1/sessions/{sid}").json()["has_annotations"]


def test_annotations_before_cloud_409(client):
    sid = client.post("/v1/sessions").json()["session_id"]
    r = client.put(f"/v1/sessions/{sid}/annotations", json=annotations_payload())
    assert r.status_code == 409


def test_annotations_return_derived_geometry(client):
    sid = make_ready_session(client)
    r = client.put(f"/v1/sessions/{sid}/annotations", json=annotations_payload())
    geo = r.json()
    assert len(geo["zones"]) == 1
    assert len(geo["zones"][0]["corners"]) == 8
    assert len(geo["regions"]) == 1
    assert len(geo["regions"][0]["hull"]["vertices"]) >= 4
    assert geo["searchspace"]["half_extent_x"] == 0.15


def test_coplanar_avoid_spray_422(client):
    sid = client.post("/v1/sessions").json()["session_id"]
    rng = np.random.default_rng(53)
    flat = rng.uniform(-0.5, 0.5, (300, 3)) * [1, 1, 0]
    client.put(f"/v1/sessions/{sid}/cloud", content=ply_bytes(flat))
    payload = {
        "strokes": [{"label": "avoid", "zone_id": "wall", "radius": 0.2,
                     "samples": [{"origin": [0, 0, 1], "direction": [0, 0, -1]}]}],
        "searchspace": annotations_payload()["searchspace"],
    }
    r = client.put(f"/v1/sessions/{sid}/annotations", json=payload)
    assert r.status_code == 422
    assert "wall" in r.json()["detail"]


def test_optimize_before_annotations_409(client):
    sid = client.post("/v1/sessions").json()["session_id"]
    rng = np.random.default_rng(54)
    client.put(f"/v1/sessions/{sid}/cloud",
               content=ply_bytes(rng.uniform(0, 1, (30, 3))))
    r = client.post(f"/v1/sessions/{sid}/optimize", json=OPTIMIZE_BODY)
    assert r.status_code == 409


def test_full_run_and_result(client):
    sid = make_ready_session(client)
    r = client.post(f"/v1/sessions/{sid}/optimize", json=OPTIMIZE_BODY)
    assert r.status_code == 202, r.text
    # result is 409 while the run is active (or already finished on a fast box)
    mid = client.get(f"/v1/sessions/{sid}/result")
    assert mid.status_code in (200, 409)
    info = wait_done(client, sid)
    assert info["status"] in ("done", "below_threshold")
    assert info["progress"] == 1.0
    r = client.get(f"/v1/sessions/{sid}/result")
    assert r.status_code == 200
    payload = r.json()
    assert payload["v"] == 1
    assert payload["best"]["n_reached"] >= 1
    # payload equals the on-disk result.json byte for byte
    store = client.app.state.store
    disk = (store.root / sid / "result.json").read_bytes()
    assert r.content == disk


def test_progress_nondecreasing_and_mutations_blocked(client):
    sid = make_ready_session(client)
    body = dict(OPTIMIZE_BODY, per_zone=40, max_evals=150)
    r = client.post(f"/v1/sessions/{sid}/optimize", json=body)
    assert r.status_code == 202
    seen = []
    blocked_seen = False
    for _ in range(400):
        info = client.get(f"/v1/sessions/{sid}").json()
        seen.append(info["progress"])
        if info["status"] != "optimizing":
            break
        if not blocked_seen:
            assert client.post(f"/v1/sessions/{sid}/optimize",
                               json=OPTIMIZE_BODY).status_code == 409
            assert client.patch(f"/v1/sessions/{sid}/searchspace",
                                json={"op": "scale", "fx": 2, "fy": 2}
                                ).status_code == 409
            assert client.put(f"/v1/sessions/{sid}/annotations",
                              json=annotations_payload()).status_code == 409
            blocked_seen = True
        time.sleep(0.05)
    assert all(b >= a for a, b in zip(seen, seen[1:]))
    wait_done(client, sid)


def test_result_404_when_never_run(client):
    sid = make_ready_session(client)
    assert client.get(f"/v1/sessions/{sid}/result").status_code == 404


def test_patch_searchspace_flow(client):
    sid = make_ready_session(client)
    r = client.patch(f"/v1/sessions/{sid}/searchspace",
                     json={"op": "scale", "fx": 2, "fy": 2})
    assert r.status_code == 200
    assert r.json()["half_extent_x"] == pytest.approx(0.3)
    r = client.patch(f"/v1/sessions/{sid}/searchspace",
                     json={"op": "translate", "offset": [0.1, 0, 0]})
    assert r.status_code == 200
    assert r.json()["center"][0] == pytest.approx(0.1)
    r = client.patch(f"/v1/sessions/{sid}/searchspace",
                     json={"op": "scale", "fx": 0, "fy": 1})
    assert r.status_code == 422


def test_below_threshold_rerun_loop(client):
    """The operator loop: run, land below threshold, grow the plane, rerun."""
    sid = client.post("/v1/sessions").json()["session_id"]
    rng = np.random.default_rng(55)
    # patch far outside planar2 reach from the allowed plane
    patch = np.array([1.6, 0.0, 0.0]) + rng.uniform(-1, 1, (300, 3)) * [0.05, 0.05, 0.0008]
    client.put(f"/v1/sessions/{sid}/cloud", content=ply_bytes(patch))
    payload = {
        "strokes": [{
            "label": "interact", "zone_id": "far", "radius": 0.06,
            "samples": [{"origin": [1.6, 0.0, 1.0], "direction": [0, 0, -1]}],
            "approach_dir": [0, 0, -1],
        }],
        "searchspace": {"center": [0, 0, 0], "orientation": [0, 0, 0, 1],
                        "half_extent_x": 0.1, "half_extent_y": 0.1},
    }
    assert client.put(f"/v1/sessions/{sid}/annotations", json=payload).status_code == 200
    assert client.post(f"/v1/sessions/{sid}/optimize",
                       json=OPTIMIZE_BODY).status_code == 202
    info = wait_done(client, sid)
    assert info["status"] == "below_threshold"
    r = client.get(f"/v1/sessions/{sid}/result")
    assert r.status_code == 200
    assert r.json()["meets_threshold"] is False

    # grow the plane enough that the patch comes within reach and rerun
    r = client.patch(f"/v1/sessions/{sid}/searchspace",
                     json={"op": "scale", "fx": 10, "fy": 1})
    assert r.status_code == 200
    assert client.get(f"/v1/sessions/{sid}").json()["status"] == "annotating"
    rerun = dict(OPTIMIZE_BODY, max_evals=200)
    assert client.post(f"/v1/sessions/{sid}/optimize",
                       json=rerun).status_code == 202
    info = wait_done(client, sid)
    assert info["status"] == "done"
    assert client.get(f"/v1/sessions/{sid}/result").json()["meets_threshold"] is True


def test_restart_marks_interrupted_run_failed(tmp_path):
    app = create_app(tmp_path)
    with TestClient(app) as client:
        sid = make_ready_session(client)
        store = app.state.store
        state = json.loads((store.root / sid / "session.json").read_text())
        state["status"] = "optimizing"
        (store.root / sid / "session.json").write_text(json.dumps(state))
    # a fresh app over the same data dir: no live thread for the session
    app2 = create_app(tmp_path)
    with TestClient(app2) as client2:
        info = client2.get(f"/v1/sessions/{sid}").json()
        assert info["status"] == "failed"
        assert "interrupted" in info["failure"]


def test_studio_static_mount(tmp_path):
    studio = tmp_path / "studio"
    studio.mkdir()
    (studio / "index.html").write_text("<html><body>studio</body></html>")
    app = create_app(tmp_path / "data", studio_dir=studio)
    with TestClient(app) as client:
        r = client.get("/studio/")
        assert r.status_code == 200
        assert "studio" in r.text
