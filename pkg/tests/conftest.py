"""Shared test helpers: fixture paths, gradient checking, a toy knowledge server."""

from __future__ import annotations

import http.server
import json
import threading
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlparse

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def finite_diff_grads(arrays: dict[str, np.ndarray], loss_fn, step: float = 1e-5):
    """Central finite differences of loss_fn w.r.t. every entry of every array.

    Arrays are perturbed in place and restored, so loss_fn must read them live.
    """
    grads = {}
    for name, arr in arrays.items():
        grad = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            hi = loss_fn()
            flat[i] = original - step
            lo = loss_fn()
            flat[i] = original
            gflat[i] = (hi - lo) / (2.0 * step)
        grads[name] = grad
    return grads


def max_relative_error(analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray]) -> float:
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class KnowledgeServer:
    """Minimal HTTP server answering /c/en/<label>?limit=N with ConceptNet-style JSON."""

    def __init__(self, triples_by_head: dict[str, list[dict]]):
        self.triples_by_head = triples_by_head
        self.requests_served = 0
        outer = self

        class Handler(http.server.BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 (http.server API)
                parsed = urlparse(self.path)
                parts = parsed.path.strip("/").split("/")
                if len(parts) != 3 or parts[0] != "c" or parts[1] != "en":
                    self.send_error(404)
                    return
                label = unquote(parts[2])
                limit = int(parse_qs(parsed.query).get("limit", ["20"])[0])
                rows = outer.triples_by_head.get(label, [])[:limit]
                edges = []
                for row in rows:
                    edge = {
                        "start": {"label": row["head"]},
                        "rel": {"label": row["relation"]},
                        "end": {"label": row["tail"]},
                    }
                    if row.get("surface") is not None:
                        edge["surfaceText"] = row["surface"]
                    if row.get("weight") is not None:
                        edge["weight"] = row["weight"]
                    edges.append(edge)
                body = json.dumps({"edges": edges}).encode("utf-8")
                outer.requests_served += 1
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):  # keep pytest output clean
                pass

        self._server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @classmethod
    def from_store_file(cls, path: Path) -> "KnowledgeServer":
        by_head: dict[str, list[dict]] = {}
        for row in json.loads(path.read_text(encoding="utf-8")):
            by_head.setdefault(row["head"].lower(), []).append(row)
        return cls(by_head)

    def start(self) -> str:
        self._thread.start()
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
