"""HTTP artifact API as a plain ``handle(method, path, body)`` function plus a threaded server.

Endpoints::

    PUT  /models/{name}/states|transitions|rules   .kmf text  -> 201 new revision, 200 unchanged
    GET  /models/{name}                             part revisions
    GET  /models/{name}/states|transitions|rules   stored document text
    POST /models/{name}/pddl                        {"domain_uri", "problem_uri"}
    POST /models/{name}/plan                        plan or failure document ({"bound": n} optional)
    GET  /artifacts/{sha256}                        stored bytes
    POST /runs                                      {"model": name, "bound": n} -> run document
    GET  /runs/{id}                                 run document with event log
    POST /runs/{id}/step                            one execute or replan
    POST /runs/{id}/perturb                         {"add": [...], "delete": [...]}
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .. import runtime
from ..pddl import MappingError, generate
from ..planner import DEFAULT_BOUND, find_plan, plan_to_dict
from ..syntax import ParseError, merge_models, parse_model
from ..terms import Model
from .store import PARTS, Store

LISTEN_ENV = "KMF_LISTEN"
DEFAULT_LISTEN = "127.0.0.1:8080"

_NAME = r"[A-Za-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*"
_ROUTES = [
    ("PUT", re.compile(rf"/models/({_NAME})/(states|transitions|rules)"), "put_part"),
    ("GET", re.compile(rf"/models/({_NAME})/(states|transitions|rules)"), "get_part"),
    ("GET", re.compile(rf"/models/({_NAME})"), "get_model"),
    ("POST", re.compile(rf"/models/({_NAME})/pddl"), "post_pddl"),
    ("POST", re.compile(rf"/models/({_NAME})/plan"), "post_plan"),
    ("GET", re.compile(r"/artifacts/([^/]+)"), "get_artifact"),
    ("POST", re.compile(r"/runs"), "post_run"),
    ("GET", re.compile(r"/runs/([^/]+)"), "get_run"),
    ("POST", re.compile(r"/runs/([^/]+)/step"), "post_step"),
    ("POST", re.compile(r"/runs/([^/]+)/perturb"), "post_perturb"),
]

JSON = "application/json"
TEXT = "text/plain; charset=utf-8"


@dataclass(frozen=True)
class Response:
    status: int
    body: bytes = b""
    content_type: str = JSON

    def json(self):
        return json.loads(self.body)


class ApiError(Exception):
    def __init__(self, status: int, message: str, **extra):
        self.status = status
        self.message = message
        self.extra = extra
        super().__init__(message)


def _json(status: int, doc) -> Response:
    return Response(status, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode(), JSON)


def _body_json(body: bytes) -> dict:
    if not body or not body.strip():
        return {}
    try:
        doc = json.loads(body)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ApiError(422, f"request body is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ApiError(422, "request body must be a JSON object")
    return doc


def _check_part(part: str, m: Model) -> None:
    extra = []
    if part != "states" and (m.states or m.initial or m.goal):
        extra.append("states")
    if part != "transitions" and m.transitions:
        extra.append("transitions")
    if part != "rules" and m.rules is not None:
        extra.append("rules")
    if extra:
        raise ApiError(422, f"a {part} document may not contain {' or '.join(extra)}")


class Service:
    """Request handling over a :class:`Store`; safe to call from many threads."""

    def __init__(self, store: Store | str | os.PathLike):
        self.store = store if isinstance(store, Store) else Store(store)
        self._runs: dict[str, runtime.RunState] = {}
        self._run_locks: dict[str, threading.Lock] = {}
        self._runs_lock = threading.Lock()
        self._next_run = self.store.run_count() + 1

    def handle(self, method: str, path: str, body: bytes = b"") -> Response:
        path = path.split("?", 1)[0].rstrip("/") or "/"
        allowed = []
        for verb, pattern, handler in _ROUTES:
            m = pattern.fullmatch(path)
            if m is None:
                continue
            if verb != method.upper():
                allowed.append(verb)
                continue
            try:
                return getattr(self, handler)(*m.groups(), body=body)
            except ApiError as exc:
                return _json(exc.status, {"error": exc.message, **exc.extra})
        if allowed:
            return _json(405, {"error": f"method {method} not allowed", "allowed": sorted(set(allowed))})
        return _json(404, {"error": f"no such resource {path}"})

    # models --------------------------------------------------------------
    def put_part(self, name: str, part: str, body: bytes) -> Response:
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            raise ApiError(422, "document is not UTF-8 text") from None
        try:
            m = parse_model(text)
        except ParseError as exc:
            raise ApiError(422, exc.message, line=exc.line, column=exc.column) from None
        _check_part(part, m)
        with self.store.model_lock(name):
            digest = self.store.put_artifact(body)
            changed = self.store.set_part(name, part, digest)
        return _json(201 if changed else 200, {"model": name, "part": part, "revision": digest})

    def get_part(self, name: str, part: str, body: bytes) -> Response:
        self._parts(name)
        text = self.store.document(name, part)
        if text is None:
            raise ApiError(404, f"model {name} has no {part} document")
        return Response(200, text.encode(), TEXT)

    def get_model(self, name: str, body: bytes) -> Response:
        return _json(200, {"model": name, "parts": self._parts(name)})

    def _parts(self, name: str) -> dict:
        parts = self.store.model_parts(name)
        if parts is None:
            raise ApiError(404, f"unknown model {name}")
        return parts

    def load_model(self, name: str, need_transitions: bool = False) -> Model:
        parts = self._parts(name)
        if "states" not in parts:
            raise ApiError(409, f"model {name} has no states document")
        if need_transitions and "transitions" not in parts:
            raise ApiError(409, f"model {name} has no transitions document")
        docs = [parse_model(self.store.document(name, p)) for p in PARTS if p in parts]
        try:
            m = merge_models(*docs)
        except ParseError as exc:
            raise ApiError(409, f"model {name} documents do not combine: {exc.message}") from None
        if m.initial is None or m.goal is None:
            raise ApiError(409, f"model {name} declares no {'initial' if m.initial is None else 'goal'} state")
        return m

    def post_pddl(self, name: str, body: bytes) -> Response:
        m = self.load_model(name, need_transitions=True)
        try:
            domain, problem = generate(m, name=name)
        except MappingError as exc:
            raise ApiError(422, str(exc), transition=exc.transition, construct=exc.construct) from None
        for art in (domain, problem):
            self.store.put_artifact(art.data)
        return _json(200, {"domain_uri": domain.uri, "problem_uri": problem.uri})

    def post_plan(self, name: str, body: bytes) -> Response:
        m = self.load_model(name)
        bound = _bound(_body_json(body))
        return _json(200, plan_to_dict(find_plan(m, bound)))

    # artifacts -----------------------------------------------------------
    def get_artifact(self, digest: str, body: bytes) -> Response:
        data = self.store.get_artifact(digest)
        if data is None:
            raise ApiError(404, f"no artifact {digest}")
        return Response(200, data, TEXT)

    # runs ----------------------------------------------------------------
    def post_run(self, body: bytes) -> Response:
        doc = _body_json(body)
        name = doc.get("model")
        if not isinstance(name, str):
            raise ApiError(422, "run request needs a model name")
        m = self.load_model(name)
        bound = _bound(doc)
        with self._runs_lock:
            run_id = f"run-{self._next_run}"
            self._next_run += 1
            self._run_locks[run_id] = threading.Lock()
        with self._run_locks[run_id]:
            run = runtime.start_run(m, run_id, bound)
            self._save(run)
        return _json(201, runtime.run_to_dict(run))

    def _run(self, run_id: str):
        with self._runs_lock:
            lock = self._run_locks.get(run_id)
        if lock is None:
            raise ApiError(404, f"unknown run {run_id}")
        return lock

    def _save(self, run: runtime.RunState) -> None:
        self._runs[run.run_id] = run
        self.store.write_run_log(run.run_id, runtime.event_log_text(run))

    def get_run(self, run_id: str, body: bytes) -> Response:
        with self._run(run_id):
            run = self._runs[run_id]
        return _json(200, {**runtime.run_to_dict(run), "log": list(run.log)})

    def post_step(self, run_id: str, body: bytes) -> Response:
        with self._run(run_id):
            run = self._runs[run_id]
            if run.status not in (runtime.RUNNING, runtime.REPLANNING):
                raise ApiError(409, f"run {run_id} has finished ({run.status})")
            run = runtime.advance(run)
            self._save(run)
        return _json(200, {**runtime.run_to_dict(run), "event": run.log[-1]})

    def post_perturb(self, run_id: str, body: bytes) -> Response:
        doc = _body_json(body)
        add, delete = doc.get("add", []), doc.get("delete", [])
        if not all(isinstance(x, list) and all(isinstance(p, str) for p in x) for x in (add, delete)):
            raise ApiError(422, "add and delete must be lists of predicate strings")
        with self._run(run_id):
            run = self._runs[run_id]
            if run.status != runtime.RUNNING:
                raise ApiError(409, f"run {run_id} is {run.status}, not running")
            try:
                run = runtime.perturb(run, add, delete)
            except ParseError as exc:
                raise ApiError(422, exc.message, line=exc.line, column=exc.column) from None
            except runtime.RunError as exc:
                raise ApiError(422, str(exc)) from None
            self._save(run)
        return _json(200, {**runtime.run_to_dict(run), "event": run.log[-1]})


def _bound(doc: dict) -> int:
    bound = doc.get("bound", DEFAULT_BOUND)
    if not isinstance(bound, int) or isinstance(bound, bool) or bound < 1:
        raise ApiError(422, "bound must be a positive integer")
    return bound


# HTTP ---------------------------------------------------------------------


def _handler_for(service: Service):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _dispatch(self):
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            try:
                resp = service.handle(self.command, self.path, body)
            except Exception as exc:  # keep serving; report as a server fault
                resp = _json(500, {"error": f"internal error: {exc}"})
            self.send_response(resp.status)
            self.send_header("Content-Type", resp.content_type)
            self.send_header("Content-Length", str(len(resp.body)))
            self.end_headers()
            self.wfile.write(resp.body)

        do_GET = do_PUT = do_POST = do_DELETE = _dispatch

        def log_message(self, fmt, *args):
            pass

    return Handler


def parse_listen(text: str | None) -> tuple[str, int]:
    text = text or os.environ.get(LISTEN_ENV) or DEFAULT_LISTEN
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def make_server(service: Service, listen: str | None = None) -> ThreadingHTTPServer:
    return ThreadingHTTPServer(parse_listen(listen), _handler_for(service))


def serve(store_dir, listen: str | None = None) -> None:
    server = make_server(Service(store_dir), listen)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


__all__ = ["LISTEN_ENV", "Response", "Service", "make_server", "parse_listen", "serve"]
