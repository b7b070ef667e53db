"""HTTP annotation service: upload an image, click points, predict, save, export.

Sessions live in memory keyed by image id; each saved instance gets the next
counter value starting at 1, and later saves overwrite overlapped pixels
(last writer wins). With a persist directory configured, sessions survive
restarts.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

import cv2
import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import ingest
from .errors import ProtocolError, PromptsegError
from .sampler import PromptSet
from .segmenter import BaselineBackend, RemoteBackend, rle_decode, rle_encode

MAX_UPLOAD_BYTES = 64 * 1024 * 1024


class Session:
    def __init__(self, image_id: str, image: np.ndarray):
        self.image_id = image_id
        self.image = image  # canonical 1024x1024 RGB uint8
        self.labels = np.zeros(image.shape[:2], dtype=np.int32)
        self.next_instance_id = 1
        self.lock = threading.Lock()


class WirePoint(BaseModel):
    x: int
    y: int
    label: int = Field(ge=0, le=1)


class PredictRequest(BaseModel):
    image_id: str
    points: list[WirePoint]
    backend: str | None = None


class SaveRequest(BaseModel):
    image_id: str
    rle: list[int]


def _decode_upload(data: bytes) -> np.ndarray | None:
    arr = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if arr is None:
        return None
    if arr.ndim == 3:
        if arr.shape[2] == 4:
            arr = cv2.cvtColor(arr, cv2.COLOR_BGRA2BGR)
        arr = cv2.cvtColor(arr, cv2.COLOR_BGR2RGB)
    return arr


def create_app(remote_backend: str | None = None, persist_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="promptseg annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    sessions: dict[str, Session] = {}
    backends = {"baseline": BaselineBackend()}
    if remote_backend:
        backends["remote"] = RemoteBackend(remote_backend)
    persist = Path(persist_dir) if persist_dir else None
    if persist:
        persist.mkdir(parents=True, exist_ok=True)
        for img_file in sorted(persist.glob("*_image.png")):
            image_id = img_file.name[: -len("_image.png")]
            image = cv2.cvtColor(cv2.imread(str(img_file)), cv2.COLOR_BGR2RGB)
            sess = Session(image_id, image)
            label_file = persist / f"{image_id}_labels.png"
            if label_file.exists():
                sess.labels = ingest.load_label_map(label_file)
                sess.next_instance_id = int(sess.labels.max()) + 1
            sessions[image_id] = sess

    def get_session(image_id: str) -> Session:
        sess = sessions.get(image_id)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"unknown image_id {image_id}")
        return sess

    def persist_session(sess: Session):
        if persist is None:
            return
        cv2.imwrite(
            str(persist / f"{sess.image_id}_image.png"),
            cv2.cvtColor(sess.image, cv2.COLOR_RGB2BGR),
        )
        ingest.save_label_map(sess.labels, persist / f"{sess.image_id}_labels.png")

    @app.post("/images")
    async def upload_image(file: UploadFile, request: Request):
        data = await file.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail="upload exceeds 64 MiB limit")
        arr = _decode_upload(data)
        if arr is None:
            raise HTTPException(status_code=415, detail="undecodable image format")
        raw = ingest.RawSample(
            image=arr,
            labels=np.zeros(arr.shape[:2], dtype=np.int32),
            source_id=file.filename or "upload",
        )
        canonical = ingest.resize_canonical(ingest.pad_to_square(raw))
        image_id = uuid.uuid4().hex
        sess = Session(image_id, canonical.image)
        sessions[image_id] = sess
        persist_session(sess)
        h, w = canonical.image.shape[:2]
        return {"image_id": image_id, "width": w, "height": h}

    @app.get("/backends")
    def list_backends():
        return [{"id": name, "kind": b.kind} for name, b in sorted(backends.items())]

    @app.post("/predict")
    def predict(req: PredictRequest):
        sess = get_session(req.image_id)
        h, w = sess.image.shape[:2]
        positives = [(p.x, p.y) for p in req.points if p.label == 1]
        negatives = [(p.x, p.y) for p in req.points if p.label == 0]
        if not positives:
            raise HTTPException(status_code=422, detail="at least one positive point required")
        for x, y in positives + negatives:
            if not (0 <= x < w and 0 <= y < h):
                raise HTTPException(status_code=422, detail=f"point ({x},{y}) out of bounds")
        backend = backends.get(req.backend or "baseline")
        if backend is None:
            raise HTTPException(status_code=422, detail=f"unknown backend {req.backend}")
        prompts = PromptSet(instance_id=0, positives=positives, negatives=negatives)
        try:
            mask = backend(sess.image, prompts)
        except PromptsegError as e:
            raise HTTPException(status_code=502, detail=f"backend failure: {e}")
        return {"width": w, "height": h, "rle": rle_encode(mask)}

    @app.post("/instances")
    def save_instance(req: SaveRequest):
        sess = get_session(req.image_id)
        h, w = sess.image.shape[:2]
        try:
            mask = rle_decode(req.rle, w, h)
        except ProtocolError as e:
            raise HTTPException(status_code=400, detail=str(e))
        with sess.lock:
            instance_id = sess.next_instance_id
            sess.labels[mask] = instance_id
            sess.next_instance_id += 1
            persist_session(sess)
        return {"instance_id": instance_id}

    @app.get("/export/{image_id}")
    def export_labels(image_id: str):
        sess = get_session(image_id)
        with sess.lock:
            ok, buf = cv2.imencode(".png", sess.labels.astype(np.uint16))
        if not ok:
            raise HTTPException(status_code=500, detail="failed to encode label map")
        return Response(content=buf.tobytes(), media_type="image/png")

    return app


def serve(port: int = 8000, remote_backend: str | None = None, persist_dir: str | None = None):
    import uvicorn

    uvicorn.run(create_app(remote_backend, persist_dir), host="0.0.0.0", port=port)
