"""HTTP service backing the disagreement-correction workflow.

Serves a checkpoint directory (agreed.vert + disagreements.tsv +
tagset.tags) over a small JSON API:

    GET  /session     session id, queue size, progress, context window
    GET  /batch?n=N   next N unannotated queue items, in queue order
    POST /annotation  {"position": "s:t", "tag": ..., "annotator": ...}
    GET  /progress    completed/total and words/hour over 10 minutes

Annotations are appended to annotations.jsonl and fsynced before the
request is acknowledged, so a crash or restart never loses an accepted
annotation.  State mutation is serialized through one lock; reads see a
consistent snapshot.  When a UI bundle directory is configured, its
files are served on every other GET path.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .bootstrap import read_disagreements
from .corpus import load_tagset, parse_vertical
from .errors import DataError

RATE_WINDOW_SECONDS = 600.0


class AnnotationStore:
    """Disagreement queue plus write-ahead annotation log."""

    def __init__(self, checkpoint_dir: str, window: int = 5, clock=time.time):
        self.checkpoint_dir = checkpoint_dir
        self.window = window
        self.clock = clock
        self.lock = threading.Lock()

        def read(name, required=True):
            path = os.path.join(checkpoint_dir, name)
            if not os.path.exists(path):
                if required:
                    raise DataError("checkpoint is missing %s" % name)
                return None
            with open(path, encoding="utf-8") as fh:
                return fh.read()

        self.tagset = load_tagset(read("tagset.tags"))
        self.corpus = parse_vertical(read("agreed.vert"), self.tagset)
        self.disagreements = read_disagreements(read("disagreements.tsv"))
        self.queue = ["%d:%d" % (d.sentence_idx, d.token_idx)
                      for d in self.disagreements]
        self.by_position = {
            "%d:%d" % (d.sentence_idx, d.token_idx): d
            for d in self.disagreements
        }
        self.completed = {}
        self.timestamps = []
        self.log_path = os.path.join(checkpoint_dir, "annotations.jsonl")
        for record in self._read_log():
            self.completed[record["position"]] = record
            if "ts" in record:
                self.timestamps.append(record["ts"])
        session_path = os.path.join(checkpoint_dir, "session.json")
        if os.path.exists(session_path):
            with open(session_path, encoding="utf-8") as fh:
                self.session_id = json.load(fh)["session_id"]
        else:
            self.session_id = uuid.uuid4().hex
            with open(session_path, "w", encoding="utf-8") as fh:
                json.dump({"session_id": self.session_id}, fh)
                fh.write("\n")

    def _read_log(self):
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def _context(self, sentence, idx):
        left = []
        for j in range(max(0, idx - self.window), idx):
            tok = sentence[j]
            left.append({"form": tok.form, "tag": tok.gold})
        right = []
        for j in range(idx + 1, min(len(sentence), idx + 1 + self.window)):
            tok = sentence[j]
            right.append({"form": tok.form, "tag": tok.gold})
        return left, right

    def session(self) -> dict:
        with self.lock:
            return {
                "session_id": self.session_id,
                "checkpoint": self.checkpoint_dir,
                "total": len(self.queue),
                "completed": len(self.completed),
                "remaining": len(self.queue) - len(self.completed),
                "window": self.window,
            }

    def batch(self, n: int) -> dict:
        with self.lock:
            items = []
            for position in self.queue:
                if position in self.completed:
                    continue
                if len(items) >= n:
                    break
                d = self.by_position[position]
                sentence = self.corpus.sentences[d.sentence_idx]
                left, right = self._context(sentence, d.token_idx)
                items.append({
                    "position": position,
                    "left_context": left,
                    "form": d.form,
                    "candidates": list(d.candidates),
                    "proposals": list(d.proposals),
                    "right_context": right,
                })
            return {"items": items, "session_id": self.session_id}

    def annotate(self, payload: dict):
        """Returns (http_status, body_dict); persists before acknowledging."""
        if not isinstance(payload, dict):
            return 400, {"error": "body must be a JSON object"}
        position = payload.get("position")
        tag = payload.get("tag")
        if not isinstance(position, str) or not isinstance(tag, str):
            return 400, {"error": "position and tag are required strings"}
        with self.lock:
            d = self.by_position.get(position)
            if d is None:
                return 400, {"error": "unknown position %r" % position}
            if position in self.completed:
                return 409, {"error": "position %s already annotated" % position}
            if tag not in d.candidates:
                return 422, {"error": "tag %r not among candidates %s"
                             % (tag, list(d.candidates))}
            record = {
                "position": position,
                "tag": tag,
                "annotator": payload.get("annotator", ""),
                "ts": self.clock(),
            }
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.completed[position] = record
            self.timestamps.append(record["ts"])
            return 200, {"ok": True, "completed": len(self.completed),
                         "remaining": len(self.queue) - len(self.completed)}

    def progress(self) -> dict:
        with self.lock:
            now = self.clock()
            recent = [t for t in self.timestamps if now - t <= RATE_WINDOW_SECONDS]
            rate = len(recent) * 3600.0 / RATE_WINDOW_SECONDS
            return {
                "completed": len(self.completed),
                "total": len(self.queue),
                "remaining": len(self.queue) - len(self.completed),
                "words_per_hour": rate,
            }


class _Handler(BaseHTTPRequestHandler):
    store: AnnotationStore = None
    ui_dir: str = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status, body, content_type="application/json"):
        data = body if isinstance(body, bytes) else (
            json.dumps(body, sort_keys=True) + "\n").encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _serve_static(self, path):
        if self.ui_dir is None:
            self._send(404, {"error": "not found"})
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.ui_dir, rel))
        if not full.startswith(os.path.realpath(self.ui_dir)) or not os.path.isfile(full):
            self._send(404, {"error": "not found"})
            return
        ctype = "text/html"
        if full.endswith(".js"):
            ctype = "text/javascript"
        elif full.endswith(".css"):
            ctype = "text/css"
        elif full.endswith(".json"):
            ctype = "application/json"
        with open(full, "rb") as fh:
            self._send(200, fh.read(), content_type=ctype)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/session":
            self._send(200, self.store.session())
        elif url.path == "/batch":
            try:
                n = int(parse_qs(url.query).get("n", ["10"])[0])
            except ValueError:
                self._send(400, {"error": "n must be an integer"})
                return
            if n <= 0:
                self._send(400, {"error": "n must be positive"})
                return
            self._send(200, self.store.batch(n))
        elif url.path == "/progress":
            self._send(200, self.store.progress())
        else:
            self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/annotation":
            self._send(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"null")
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "malformed JSON body"})
            return
        status, body = self.store.annotate(payload)
        self._send(status, body)


def make_server(checkpoint_dir: str, host: str = "127.0.0.1", port: int = 0,
                window: int = 5, ui_dir: str = None) -> ThreadingHTTPServer:
    """Build (but do not start) the annotation HTTP server."""
    store = AnnotationStore(checkpoint_dir, window=window)

    class Handler(_Handler):
        pass

    Handler.store = store
    Handler.ui_dir = ui_dir
    return ThreadingHTTPServer((host, port), Handler)


def serve_annotation(checkpoint_dir: str, bind_address: str = "127.0.0.1:8753",
                     window: int = 5, ui_dir: str = None):
    """Run the service until interrupted."""
    host, _, port = bind_address.partition(":")
    server = make_server(checkpoint_dir, host or "127.0.0.1",
                         int(port or "8753"), window, ui_dir)
    print("annotation service on http://%s:%d (checkpoint: %s)"
          % (server.server_address[0], server.server_address[1], checkpoint_dir))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0
