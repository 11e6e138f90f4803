"""HTTP refinement service: sessions, strokes, undo, previews, TTL, persistence."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hazetools.image import decode_image, encode_png
from hazetools.service import MAX_UPLOAD_BYTES, create_app
from hazetools.synth import make_test_scene, synthesize_haze

# steps scene at beta 0.8: rows 0..15 sit at depth 0.5 (t ~ 0.67),
# rows 32..47 at depth 2.0 (t ~ 0.20)
_NEAR = [[x, y] for x in range(2, 12) for y in range(2, 7)]
_FAR = [[x, y] for x in range(2, 12) for y in range(40, 45)]

_CONFIG = {"radius": 4, "eps_t": 0.0, "airlight": [0.9, 0.95, 1.0]}


@pytest.fixture(scope="module")
def scene_png():
    hazy, _ = synthesize_haze(make_test_scene("steps", 48, beta=0.8))
    return encode_png(hazy)


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def _create(client, scene_png, config=_CONFIG):
    files = {"image": ("scene.png", scene_png, "image/png")}
    data = {"config": json.dumps(config)} if config is not None else {}
    resp = client.post("/sessions", files=files, data=data)
    assert resp.status_code == 201, resp.text
    return resp.json()


def _preview_bytes(client, doc):
    return {name: client.get(url).content for name, url in doc["previews"].items()}


def test_healthz(client):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_create_session(client, scene_png):
    doc = _create(client, scene_png)
    assert doc["width"] == 48 and doc["height"] == 48
    assert doc["revision"] == 0
    np.testing.assert_allclose(doc["airlight"], [0.9, 0.95, 1.0], atol=1e-12)
    assert doc["config"]["radius"] == 4
    assert set(doc["previews"]) == {"input", "j", "t", "b", "weights"}
    assert all("rev=0" in url for url in doc["previews"].values())


def test_previews_are_decodable_pngs(client, scene_png):
    doc = _create(client, scene_png)
    for name, url in doc["previews"].items():
        resp = client.get(url)
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        img = decode_image(resp.content)
        assert img.shape == (48, 48, 3), name


def test_unknown_preview_and_session(client, scene_png):
    doc = _create(client, scene_png)
    assert client.get(f"/sessions/{doc['id']}/preview/depth.png").status_code == 404
    assert client.get("/sessions/feedbeef").status_code == 404
    assert client.post("/sessions/feedbeef/undo").status_code == 404
    assert client.post("/sessions/feedbeef/strokes", json={
        "strokes": [{"kind": "constraint", "pixels": [[1, 1]]}]}).status_code == 404


def test_stroke_then_undo_restores_bytes(client, scene_png):
    doc = _create(client, scene_png)
    sid = doc["id"]
    original = _preview_bytes(client, doc)

    resp = client.post(f"/sessions/{sid}/strokes", json={
        "strokes": [{"kind": "constraint", "pixels": _FAR}]})
    assert resp.status_code == 200, resp.text
    stroked = resp.json()
    assert stroked["revision"] == 1
    assert 0.0 <= stroked["t_s"] <= 1.0
    after = _preview_bytes(client, stroked)
    assert after["t"] != original["t"]

    snapshot = client.get(f"/sessions/{sid}").json()
    assert snapshot["revision"] == 1
    assert len(snapshot["messages"]) == 1
    assert snapshot["messages"][0]["target"] == stroked["t_s"]

    undo = client.post(f"/sessions/{sid}/undo")
    assert undo.status_code == 200
    assert undo.json()["revision"] == 0
    restored = _preview_bytes(client, undo.json())
    assert restored == original  # byte-for-byte, from the stored encodings

    assert client.post(f"/sessions/{sid}/undo").status_code == 409


def test_picker_sets_feasible_target(client, scene_png):
    doc = _create(client, scene_png)
    resp = client.post(f"/sessions/{doc['id']}/strokes", json={
        "strokes": [{"kind": "constraint", "pixels": _FAR},
                    {"kind": "picker", "pixels": _NEAR}]})
    assert resp.status_code == 200, resp.text
    t_s = resp.json()["t_s"]
    assert 0.55 <= t_s <= 0.8  # mean transmission of the near rows


def test_picker_below_bound_is_rejected(client, scene_png):
    doc = _create(client, scene_png)
    resp = client.post(f"/sessions/{doc['id']}/strokes", json={
        "strokes": [{"kind": "constraint", "pixels": _NEAR},
                    {"kind": "picker", "pixels": _FAR}]})
    assert resp.status_code == 422
    detail = resp.json()["detail"]
    assert detail["t_s"] < detail["min_allowed"]
    assert "lower bound" in detail["message"]


def test_stroke_validation(client, scene_png):
    doc = _create(client, scene_png)
    sid = doc["id"]
    url = f"/sessions/{sid}/strokes"
    # picker alone
    resp = client.post(url, json={"strokes": [{"kind": "picker", "pixels": [[1, 1]]}]})
    assert resp.status_code == 422
    assert "constraint" in resp.json()["detail"]
    # two pickers
    resp = client.post(url, json={"strokes": [
        {"kind": "constraint", "pixels": [[1, 1]]},
        {"kind": "picker", "pixels": [[2, 2]]},
        {"kind": "picker", "pixels": [[3, 3]]}]})
    assert resp.status_code == 422
    # empty stroke list (schema-level)
    assert client.post(url, json={"strokes": []}).status_code == 422
    # unknown kind (schema-level)
    resp = client.post(url, json={"strokes": [{"kind": "erase", "pixels": [[1, 1]]}]})
    assert resp.status_code == 422
    # out of bounds
    resp = client.post(url, json={"strokes": [{"kind": "constraint", "pixels": [[48, 0]]}]})
    assert resp.status_code == 422
    assert "out of bounds" in resp.json()["detail"]
    resp = client.post(url, json={
        "strokes": [{"kind": "constraint", "pixels": [[1, 1]]},
                    {"kind": "picker", "pixels": [[0, 48]]}]})
    assert resp.status_code == 422


def test_upload_validation(client, scene_png):
    resp = client.post("/sessions", files={"image": ("x.png", b"not a png", "image/png")})
    assert resp.status_code == 400
    resp = client.post("/sessions", files={
        "image": ("x.png", b"\x00" * (MAX_UPLOAD_BYTES + 1), "image/png")})
    assert resp.status_code == 413
    resp = client.post("/sessions", files={"image": ("x.png", scene_png, "image/png")},
                       data={"config": "{not json"})
    assert resp.status_code == 422
    resp = client.post("/sessions", files={"image": ("x.png", scene_png, "image/png")},
                       data={"config": json.dumps({"radius": 4, "blur": 3})})
    assert resp.status_code == 422
    assert "unknown config keys" in resp.json()["detail"]


def test_ttl_expiry_with_injected_clock(scene_png):
    class Clock:
        now = 0.0

        def __call__(self):
            return self.now

    clock = Clock()
    with TestClient(create_app(ttl=100.0, clock=clock)) as client:
        doc = _create(client, scene_png)
        sid = doc["id"]
        clock.now = 99.0
        assert client.get(f"/sessions/{sid}").status_code == 200  # touch refreshes
        clock.now = 190.0
        assert client.get(f"/sessions/{sid}").status_code == 200
        clock.now = 300.0
        assert client.get(f"/sessions/{sid}").status_code == 404


def test_persistence_restores_sessions(tmp_path, scene_png):
    persist = tmp_path / "state"
    with TestClient(create_app(persist_dir=str(persist))) as client:
        doc = _create(client, scene_png)
        sid = doc["id"]
        resp = client.post(f"/sessions/{sid}/strokes", json={
            "strokes": [{"kind": "constraint", "pixels": _FAR}]})
        assert resp.status_code == 200
        final = _preview_bytes(client, resp.json())
    assert (persist / f"{sid}.json").exists()

    # a fresh app over the same directory replays the message list
    with TestClient(create_app(persist_dir=str(persist))) as client:
        snapshot = client.get(f"/sessions/{sid}")
        assert snapshot.status_code == 200
        doc = snapshot.json()
        assert doc["revision"] == 1
        assert len(doc["messages"]) == 1
        restored = _preview_bytes(client, doc)
        assert restored == final  # deterministic replay, byte for byte
        assert client.post(f"/sessions/{sid}/undo").status_code == 200


def test_persistence_drops_corrupt_files(tmp_path, scene_png):
    persist = tmp_path / "state"
    persist.mkdir()
    (persist / "broken.json").write_text("{not json")
    with TestClient(create_app(persist_dir=str(persist))) as client:
        assert client.get("/healthz").status_code == 200
        _create(client, scene_png)  # store still usable


def test_static_dir_mount(tmp_path, scene_png):
    (tmp_path / "index.html").write_text("<html><body>scribble-ui</body></html>")
    with TestClient(create_app(static_dir=str(tmp_path))) as client:
        resp = client.get("/")
        assert resp.status_code == 200
        assert "scribble-ui" in resp.text
        # API routes still win over the static mount
        assert client.get("/healthz").status_code == 200
