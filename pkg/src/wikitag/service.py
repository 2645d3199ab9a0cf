"""Minimal HTTP annotation endpoint over one immutable, shared knowledge base.

``GET /tag?text=...`` annotates a text with the same code path as the
``annotate`` subcommand; tuning parameters default to the server's
configuration and can be overridden per request. ``GET /health`` reports
version and index identity. Requests share nothing mutable: each one builds
its own relatedness memo.
"""
from __future__ import annotations

import json
import logging
import resource
import sys
from dataclasses import replace
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from . import __version__
from .index_io import FORMAT_MAJOR, FORMAT_MINOR
from .kb import KnowledgeBase
from .pipeline import PipelineConfig, annotate_payload
from .pruning import PruneMethod

log = logging.getLogger("wikitag.service")

DEFAULT_MAX_TEXT_CHARS = 100_000


class BadRequest(ValueError):
    def __init__(self, message: str, status: HTTPStatus = HTTPStatus.BAD_REQUEST):
        super().__init__(message)
        self.status = status


def resident_mb() -> float:
    """Peak resident set size of this process in MiB."""
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # Linux reports KiB, macOS bytes
    return rss / (1024 * 1024) if sys.platform == "darwin" else rss / 1024


def _unit(params: dict[str, str], name: str) -> float | None:
    raw = params.get(name)
    if raw is None:
        return None
    try:
        v = float(raw)
    except ValueError:
        raise BadRequest(f"{name} is not a number: {raw!r}") from None
    if not 0.0 <= v <= 1.0:  # also rejects nan
        raise BadRequest(f"{name}={v} is outside [0, 1]")
    return v


def _flag(params: dict[str, str], name: str, default: bool) -> bool:
    raw = params.get(name)
    if raw is None:
        return default
    if raw.lower() in ("1", "true", "yes"):
        return True
    if raw.lower() in ("0", "false", "no"):
        return False
    raise BadRequest(f"{name} must be a boolean, got {raw!r}")


def request_config(base: PipelineConfig, params: dict[str, str]) -> PipelineConfig:
    """Overlay query parameters on the server defaults; raises BadRequest on invalid values."""
    disamb, prune, window = base.disamb, base.prune, base.window_anchors
    eps, tau, rho = _unit(params, "eps"), _unit(params, "tau"), _unit(params, "rho")
    if eps is not None:
        disamb = replace(disamb, epsilon=eps)
    if tau is not None:
        disamb = replace(disamb, tau=tau)
    if "fallback" in params:
        disamb = replace(disamb, single_anchor_fallback=_flag(params, "fallback", False))
    if rho is not None:
        prune = replace(prune, rho_na=rho)
    if "pruner" in params:
        try:
            method = PruneMethod(params["pruner"])
        except ValueError:
            raise BadRequest(f"unknown pruner {params['pruner']!r}") from None
        if method is PruneMethod.LR and prune.lr_model is None:
            raise BadRequest("pruner=lr needs a server started with --lr-model")
        prune = replace(prune, method=method)
    if "window" in params:
        try:
            window = int(params["window"])
        except ValueError:
            raise BadRequest(f"window is not an integer: {params['window']!r}") from None
        if window < 2:
            raise BadRequest("window must be at least 2")
    return replace(base, disamb=disamb, prune=prune, window_anchors=window)


class TagService:
    """Request handling independent of the HTTP transport, so it can be tested directly."""

    def __init__(self, kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(),
                 max_text_chars: int = DEFAULT_MAX_TEXT_CHARS):
        self.kb = kb
        self.cfg = cfg
        self.max_text_chars = max_text_chars

    def health(self) -> dict:
        st = self.kb.stats()
        return {
            "status": "ok",
            "version": __version__,
            "index_format": f"{FORMAT_MAJOR}.{FORMAT_MINOR}",
            "build_id": self.kb.build_id,
            "pages": st.n_pages,
            "anchors": st.n_anchors,
        }

    def tag(self, params: dict[str, str]) -> dict:
        text = params.get("text")
        if text is None:
            raise BadRequest("missing required parameter: text")
        if len(text) > self.max_text_chars:
            raise BadRequest(f"text has {len(text)} characters, limit is {self.max_text_chars}",
                             HTTPStatus.REQUEST_ENTITY_TOO_LARGE)
        cfg = request_config(self.cfg, params)
        include_na = _flag(params, "include_na", True)
        return annotate_payload(text, self.kb, cfg, include_na)

    def handle(self, url: str) -> tuple[int, dict]:
        parts = urlsplit(url)
        try:
            query = parse_qs(parts.query, keep_blank_values=True, strict_parsing=False, errors="strict")
        except UnicodeDecodeError:
            return HTTPStatus.BAD_REQUEST, {"error": "query is not valid UTF-8"}
        params = {k: v[-1] for k, v in query.items()}
        if parts.path == "/health":
            return HTTPStatus.OK, self.health()
        if parts.path == "/tag":
            try:
                return HTTPStatus.OK, self.tag(params)
            except BadRequest as exc:
                return exc.status, {"error": str(exc)}
        return HTTPStatus.NOT_FOUND, {"error": f"no such endpoint: {parts.path}"}


class _Handler(BaseHTTPRequestHandler):
    server: _Server
    protocol_version = "HTTP/1.1"

    def do_GET(self) -> None:  # noqa: N802 (http.server naming)
        try:
            status, body = self.server.service.handle(self.path)
        except Exception:  # keep serving; report as 500
            log.exception("request failed: %s", self.path)
            status, body = HTTPStatus.INTERNAL_SERVER_ERROR, {"error": "internal error"}
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, format: str, *args) -> None:
        log.info("%s " + format, self.address_string(), *args)


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, service: TagService):
        super().__init__(address, _Handler)
        self.service = service


def make_server(kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(), host: str = "127.0.0.1",
                port: int = 0, max_text_chars: int = DEFAULT_MAX_TEXT_CHARS) -> _Server:
    """A bound, not yet running server; port 0 picks a free port (see ``server_address``)."""
    return _Server((host, port), TagService(kb, cfg, max_text_chars))


def check_memory_budget(budget_mb: float | None) -> float:
    used = resident_mb()
    if budget_mb is not None and used > budget_mb:
        raise MemoryError(f"resident memory {used:.1f} MiB exceeds budget {budget_mb:.1f} MiB")
    return used


def serve(kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(), host: str = "127.0.0.1",
          port: int = 8080, max_text_chars: int = DEFAULT_MAX_TEXT_CHARS,
          memory_budget_mb: float | None = None) -> None:
    used = check_memory_budget(memory_budget_mb)
    server = make_server(kb, cfg, host, port, max_text_chars)
    h, p = server.server_address[:2]
    print(f"serving on http://{h}:{p} (rss {used:.1f} MiB, build {kb.build_id or '-'})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
