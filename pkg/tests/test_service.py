import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import cv2
import numpy as np
import pytest
from fastapi.testclient import TestClient

from promptseg import ingest
from promptseg.segmenter import SynthSpec, rle_decode, rle_encode, synth_generate
from promptseg.service import create_app


def png_bytes(seed=0, side=160):
    image, _ = synth_generate(SynthSpec(side=side, n_instances=2, seed=seed))
    u8 = np.floor(image * 255 + 0.5).astype(np.uint8)
    ok, buf = cv2.imencode(".png", u8)
    assert ok
    return buf.tobytes()


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def upload(client, data=None, name="img.png"):
    data = data if data is not None else png_bytes()
    return client.post("/images", files={"file": (name, data, "image/png")})


class TestUpload:
    def test_valid_png(self, client):
        r = upload(client)
        assert r.status_code == 200
        body = r.json()
        assert body["width"] == 1024 and body["height"] == 1024
        assert body["image_id"]

    def test_text_file_rejected(self, client):
        r = upload(client, data=b"definitely not an image", name="a.txt")
        assert r.status_code == 415

    def test_same_file_two_sessions(self, client):
        a = upload(client).json()["image_id"]
        b = upload(client).json()["image_id"]
        assert a != b

    def test_tif_supported(self, client):
        image, _ = synth_generate(SynthSpec(side=64, n_instances=1, seed=1))
        u8 = np.floor(image * 255 + 0.5).astype(np.uint8)
        ok, buf = cv2.imencode(".tif", u8)
        assert ok
        r = upload(client, data=buf.tobytes(), name="a.tif")
        assert r.status_code == 200


class TestBackends:
    def test_baseline_always_listed(self, client):
        body = client.get("/backends").json()
        assert {"id": "baseline", "kind": "baseline"} in body

    def test_stable_across_calls(self, client):
        assert client.get("/backends").json() == client.get("/backends").json()

    def test_remote_configured(self):
        c = TestClient(create_app(remote_backend="http://example.invalid/segment"))
        ids = {b["id"] for b in c.get("/backends").json()}
        assert ids == {"baseline", "remote"}


class TestPredict:
    def test_valid_request_rle_sums_to_area(self, client):
        iid = upload(client).json()["image_id"]
        r = client.post(
            "/predict",
            json={"image_id": iid, "points": [{"x": 512, "y": 512, "label": 1}]},
        )
        assert r.status_code == 200
        body = r.json()
        assert sum(body["rle"]) == 1024 * 1024

    def test_no_positive_point(self, client):
        iid = upload(client).json()["image_id"]
        r = client.post(
            "/predict",
            json={"image_id": iid, "points": [{"x": 1, "y": 1, "label": 0}]},
        )
        assert r.status_code == 422

    def test_out_of_bounds_point(self, client):
        iid = upload(client).json()["image_id"]
        r = client.post(
            "/predict",
            json={"image_id": iid, "points": [{"x": 5000, "y": 1, "label": 1}]},
        )
        assert r.status_code == 422

    def test_unknown_image(self, client):
        r = client.post(
            "/predict",
            json={"image_id": "nope", "points": [{"x": 1, "y": 1, "label": 1}]},
        )
        assert r.status_code == 404

    def test_pure_wrt_session_state(self, client):
        iid = upload(client).json()["image_id"]
        req = {"image_id": iid, "points": [{"x": 400, "y": 400, "label": 1}]}
        a = client.post("/predict", json=req).json()
        client.post("/instances", json={"image_id": iid, "rle": a["rle"]})
        b = client.post("/predict", json=req).json()
        assert a == b


class _FixtureHandler(BaseHTTPRequestHandler):
    mask = None

    def do_POST(self):
        m = _FixtureHandler.mask
        body = json.dumps(
            {"width": m.shape[1], "height": m.shape[0], "rle": rle_encode(m)}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class TestRemoteBackendViaService:
    def test_stub_fixture_round_trip(self):
        rng = np.random.default_rng(0)
        _FixtureHandler.mask = rng.random((1024, 1024)) > 0.5
        server = HTTPServer(("127.0.0.1", 0), _FixtureHandler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            c = TestClient(
                create_app(remote_backend=f"http://127.0.0.1:{server.server_port}/")
            )
            iid = upload(c).json()["image_id"]
            r = c.post(
                "/predict",
                json={
                    "image_id": iid,
                    "backend": "remote",
                    "points": [{"x": 1, "y": 1, "label": 1}],
                },
            )
            assert r.status_code == 200
            assert r.json()["rle"] == rle_encode(_FixtureHandler.mask)
        finally:
            server.shutdown()


class TestInstances:
    def test_numbering_starts_at_one(self, client):
        iid = upload(client).json()["image_id"]
        mask = np.zeros((1024, 1024), dtype=bool)
        mask[:10, :10] = True
        r1 = client.post("/instances", json={"image_id": iid, "rle": rle_encode(mask)})
        assert r1.json()["instance_id"] == 1
        mask2 = np.zeros_like(mask)
        mask2[20:30, 20:30] = True
        r2 = client.post("/instances", json={"image_id": iid, "rle": rle_encode(mask2)})
        assert r2.json()["instance_id"] == 2

    def test_malformed_rle(self, client):
        iid = upload(client).json()["image_id"]
        r = client.post("/instances", json={"image_id": iid, "rle": [5]})
        assert r.status_code == 400

    def test_overlap_last_writer_wins(self, client, tmp_path):
        iid = upload(client).json()["image_id"]
        a = np.zeros((1024, 1024), dtype=bool)
        a[0:20, 0:20] = True
        b = np.zeros_like(a)
        b[10:30, 10:30] = True
        client.post("/instances", json={"image_id": iid, "rle": rle_encode(a)})
        client.post("/instances", json={"image_id": iid, "rle": rle_encode(b)})
        exported = client.get(f"/export/{iid}").content
        path = tmp_path / "e.png"
        path.write_bytes(exported)
        labels = ingest.load_label_map(path)
        assert labels[15, 15] == 2
        assert labels[5, 5] == 1


class TestExport:
    def test_no_saves_all_zero(self, client, tmp_path):
        iid = upload(client).json()["image_id"]
        path = tmp_path / "z.png"
        path.write_bytes(client.get(f"/export/{iid}").content)
        assert not ingest.load_label_map(path).any()

    def test_unknown_id(self, client):
        assert client.get("/export/zzz").status_code == 404

    def test_round_trip_bitwise(self, client, tmp_path):
        iid = upload(client).json()["image_id"]
        rng = np.random.default_rng(3)
        mask = rng.random((1024, 1024)) > 0.8
        client.post("/instances", json={"image_id": iid, "rle": rle_encode(mask)})
        path = tmp_path / "r.png"
        path.write_bytes(client.get(f"/export/{iid}").content)
        labels = ingest.load_label_map(path)
        assert np.array_equal(labels == 1, mask)


class TestPersistence:
    def test_session_survives_restart(self, tmp_path):
        persist = tmp_path / "persist"
        c1 = TestClient(create_app(persist_dir=str(persist)))
        iid = upload(c1).json()["image_id"]
        mask = np.zeros((1024, 1024), dtype=bool)
        mask[5:9, 5:9] = True
        c1.post("/instances", json={"image_id": iid, "rle": rle_encode(mask)})
        # new app instance over the same directory
        c2 = TestClient(create_app(persist_dir=str(persist)))
        r = c2.post("/instances", json={"image_id": iid, "rle": rle_encode(mask)})
        assert r.status_code == 200
        assert r.json()["instance_id"] == 2
