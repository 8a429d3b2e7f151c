"""Loopback HTTP service answering every registry endpoint from a :class:`MockState`."""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Iterable, Mapping
from urllib.parse import urlsplit

from ..canonical import canonical_bytes
from ..registry import match_url
from .state import DeletionOp, InvalidFixture, MockState, UnknownTarget

__all__ = ["ADMIN_PREFIX", "MockAlexaServer", "serve"]

logger = logging.getLogger(__name__)

ADMIN_PREFIX = "/__mock"
AUDIO_MIME = "audio/mpeg"


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"
    # one buffered write per response; avoids Nagle/delayed-ACK stalls on keep-alive
    wbufsize = -1
    disable_nagle_algorithm = True

    def log_message(self, format: str, *args: Any) -> None:  # noqa: A002
        logger.debug("%s - " + format, self.address_string(), *args)

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def _json(self, status: int, value: Any) -> None:
        self._send(status, canonical_bytes(value), "application/json;charset=UTF-8")

    def _authorized(self) -> bool:
        header = self.headers.get("Authorization", "")
        scheme, _, token = header.partition(" ")
        token = token.strip()
        accepted = self.server.tokens
        if scheme.lower() == "bearer" and token and (accepted is None or token in accepted):
            return True
        self._json(HTTPStatus.UNAUTHORIZED, {"error": "missing, empty or unknown bearer token"})
        return False

    def do_GET(self) -> None:  # noqa: N802
        if not self._authorized():
            return
        state = self.server.state
        path = urlsplit(self.path).path
        if path == ADMIN_PREFIX + "/fixture":
            self._json(200, state.to_fixture())
            return
        if path == ADMIN_PREFIX + "/presence":
            self._json(200, state.presence())
            return
        found = match_url(self.path)
        if found is None:
            self._json(HTTPStatus.NOT_FOUND, {"error": "no such endpoint"})
            return
        descriptor, bindings = found
        status, body = state.render(descriptor.endpoint_id, bindings)
        if isinstance(body, bytes):
            self._send(status, body, AUDIO_MIME)
        else:
            self._json(status, body)

    def do_POST(self) -> None:  # noqa: N802
        # drain the body first so the connection stays usable on any reply
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length > 0 else b""
        if not self._authorized():
            return
        state = self.server.state
        path = urlsplit(self.path).path
        try:
            payload = json.loads(raw or b"{}")
        except ValueError:
            self._json(HTTPStatus.BAD_REQUEST, {"error": "body must be JSON"})
            return
        try:
            if path == ADMIN_PREFIX + "/delete":
                self._json(200, {"affected": state.apply_deletion(DeletionOp.from_dict(payload))})
            elif path == ADMIN_PREFIX + "/interact":
                inter = state.add_interaction(
                    payload["id"],
                    payload["transcript"],
                    at=payload.get("at"),
                    device_serial=payload.get("device_serial"),
                    with_card=payload.get("card", True),
                    with_audio=payload.get("audio", True),
                )
                self._json(200, {"id": inter.interaction_id, "presence": inter.presence})
            else:
                self._json(HTTPStatus.NOT_FOUND, {"error": "no such admin route"})
        except UnknownTarget as exc:
            self._json(HTTPStatus.NOT_FOUND, {"error": f"unknown target {exc}"})
        except (InvalidFixture, KeyError, TypeError, ValueError) as exc:
            self._json(HTTPStatus.BAD_REQUEST, {"error": f"{type(exc).__name__}: {exc}"})


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], state: MockState, tokens: frozenset[str] | None = None) -> None:
        super().__init__(address, _Handler)
        self.state = state
        self.tokens = tokens


class MockAlexaServer:
    """The mock service on a background thread.

    Any nonempty bearer token is accepted unless ``tokens`` names the allowed ones.

    >>> with MockAlexaServer(default_state()) as srv:   # doctest: +SKIP
    ...     httpx.get(srv.url + "/api/bootstrap", headers={"Authorization": "Bearer x"})
    """

    def __init__(self, state: MockState, *, host: str = "127.0.0.1", port: int = 0,
                 tokens: Iterable[str] | None = None) -> None:
        self.state = state
        self._server = _Server((host, port), state, frozenset(tokens) if tokens is not None else None)
        self._thread: threading.Thread | None = None

    @classmethod
    def from_fixture(cls, fixture: Mapping[str, Any], **kw: Any) -> "MockAlexaServer":
        return cls(MockState.from_fixture(fixture), **kw)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host = self._server.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> "MockAlexaServer":
        if self._thread is None:
            self._thread = threading.Thread(target=self._server.serve_forever, args=(0.05,), name="mock-alexa", daemon=True)
            self._thread.start()
        return self

    def stop(self) -> None:
        if self._thread is not None:
            self._server.shutdown()
            self._thread.join()
            self._thread = None
        self._server.server_close()

    def __enter__(self) -> "MockAlexaServer":
        return self.start()

    def __exit__(self, *exc: object) -> None:
        self.stop()


def serve(state: MockState, *, host: str = "127.0.0.1", port: int = 0, tokens: Iterable[str] | None = None,
          on_start: Callable[[str], None] | None = None) -> None:
    """Serve in the calling thread until interrupted; ``on_start`` receives the base URL."""
    server = _Server((host, port), state, frozenset(tokens) if tokens is not None else None)
    if on_start is not None:
        on_start(f"http://{server.server_address[0]}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
