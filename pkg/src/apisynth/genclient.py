"""Batch chat-completion client plus a deterministic stub server for tests.

The wire shape is the de-facto chat-completion POST: body
{model, messages, temperature, top_p, max_tokens}, reply
{choices: [{message: {content}}]}. Any hosted or local backend speaking it
works; the stub speaks it from a fixture script or a deterministic
responder function.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

import requests

from .extractor import syntax_check

API_KEY_ENV = "APISYNTH_API_KEY"

STATUS_OK = "ok"
STATUS_TRANSPORT_ERROR = "transport_error"
STATUS_EMPTY = "empty"


@dataclass
class GenConfig:
    endpoint: str
    model: str
    temperature: float = 0.8
    top_p: float = 1.0
    max_tokens: int = 4096
    parallelism: int = 4
    retries: int = 2
    backoff: tuple[float, ...] = (0.1, 0.5, 1.0)
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass
class GenerationRecord:
    prompt_ref: str
    raw_response: str
    problem: str
    solution_code: str
    status: str


_PROBLEM_RE = re.compile(r"\[problem description\]", re.IGNORECASE)
_SOLUTION_RE = re.compile(r"\[solution\]", re.IGNORECASE)
_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_+-]*)\n(.*?)```", re.DOTALL)


def parse_response(text: str) -> tuple[str, str, str]:
    """Split a raw model reply into (problem, solution, solution_code).

    Section headers match case-insensitively. The code is the first fenced
    block inside the solution, else the whole solution when it parses as
    Python, else empty.
    """
    prob_match = _PROBLEM_RE.search(text)
    sol_match = _SOLUTION_RE.search(text)
    problem = ""
    solution = ""
    if prob_match:
        end = sol_match.start() if sol_match and sol_match.start() > prob_match.end() else len(text)
        problem = text[prob_match.end():end].strip()
    if sol_match:
        solution = text[sol_match.end():].strip()
    code = ""
    if solution:
        fence = _FENCE_RE.search(solution)
        if fence:
            code = fence.group(1).strip()
        elif syntax_check(solution):
            code = solution
    return problem, solution, code


def _post_once(config: GenConfig, system: str, user: str) -> str:
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(API_KEY_ENV, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": config.model,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
        "temperature": config.temperature,
        "top_p": config.top_p,
        "max_tokens": config.max_tokens,
    }
    resp = requests.post(config.endpoint, json=body, headers=headers, timeout=config.timeout)
    resp.raise_for_status()
    payload = resp.json()
    return payload["choices"][0]["message"]["content"]


def _request_with_retries(config: GenConfig, prompt: dict) -> GenerationRecord:
    ref = str(prompt.get("seed", prompt.get("id", "")))
    system = prompt.get("system", "")
    user = prompt.get("user", "")
    attempts = config.retries + 1
    for attempt in range(attempts):
        try:
            content = _post_once(config, system, user)
        except (requests.RequestException, KeyError, IndexError, ValueError, TypeError):
            if attempt + 1 < attempts:
                delay = config.backoff[min(attempt, len(config.backoff) - 1)]
                if delay > 0:
                    time.sleep(delay)
            continue
        if not content:
            return GenerationRecord(ref, "", "", "", STATUS_EMPTY)
        problem, _, code = parse_response(content)
        return GenerationRecord(ref, content, problem, code, STATUS_OK)
    return GenerationRecord(ref, "", "", "", STATUS_TRANSPORT_ERROR)


def generate_batch(prompts: list[dict], config: GenConfig) -> list[GenerationRecord]:
    """One record per prompt, in prompt order; individual failures never
    abort the batch. At most ``parallelism`` requests are in flight."""
    if not prompts:
        return []
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures = [pool.submit(_request_with_retries, config, p) for p in prompts]
        return [f.result() for f in futures]


def records_to_rows(records: list[GenerationRecord]) -> list[dict]:
    return [
        {
            "prompt_ref": r.prompt_ref,
            "raw_response": r.raw_response,
            "problem": r.problem,
            "solution_code": r.solution_code,
            "status": r.status,
        }
        for r in records
    ]


def rows_to_records(rows: list[dict]) -> list[GenerationRecord]:
    return [
        GenerationRecord(
            prompt_ref=row["prompt_ref"],
            raw_response=row["raw_response"],
            problem=row["problem"],
            solution_code=row["solution_code"],
            status=row["status"],
        )
        for row in rows
    ]


# ---------------------------------------------------------------------------
# Stub server
# ---------------------------------------------------------------------------

_API_LINE_RE = re.compile(r"^\s*([A-Za-z_][\w.]*)\(", re.MULTILINE)


def canned_solution_responder(request_body: dict) -> str:
    """Deterministic fixture content: a reply that calls every API named in
    the prompt's inspiration list, so downstream validation has something
    real to check."""
    user = ""
    for message in request_body.get("messages", []):
        if message.get("role") == "user":
            user = message.get("content", "")
    names = []
    in_list = False
    for line in user.split("\n"):
        if line.startswith("API list for inspiration:"):
            in_list = True
            continue
        if in_list:
            match = _API_LINE_RE.match(line)
            if match:
                names.append(match.group(1))
            else:
                break
    calls = "\n".join(f"v{i} = {name}(v{i})" for i, name in enumerate(names))
    setup = "\n".join(f"v{i} = {i}" for i in range(len(names)))
    code = f"{setup}\n{calls}\n" if names else "result = 0\n"
    return (
        "[Problem Description]\n"
        f"Write a routine exercising {len(names)} library interfaces on toy data.\n"
        "[Solution]\n"
        f"```python\n{code}```\n"
    )


class StubServer:
    """Local chat-completion endpoint driven by a fixture script.

    ``script`` entries are consumed one per request, in arrival order:
    {status: int, content: str} wraps content in the chat-completion
    shape; {status, body: str|dict} sends the body verbatim; ``delay``
    sleeps before answering. When the script is exhausted, ``responder``
    (default: canned_solution_responder) answers from the request body.
    Received bodies, response order, and the peak number of concurrent
    requests are recorded for assertions.
    """

    def __init__(
        self,
        script: list[dict] | None = None,
        responder: Callable[[dict], str] | None = None,
        port: int = 0,
    ):
        self.script = list(script or [])
        self.responder = responder or canned_solution_responder
        self.requests: list[dict] = []
        self.max_in_flight = 0
        self._in_flight = 0
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer(("127.0.0.1", port), self._make_handler())
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    # handler needs a reference back to the stub's shared state
    def _make_handler(self) -> type:
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def do_POST(self) -> None:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                try:
                    body = json.loads(raw)
                except json.JSONDecodeError:
                    body = {"_raw": raw.decode("utf-8", "replace")}
                with stub._lock:
                    stub.requests.append(body)
                    stub._in_flight += 1
                    stub.max_in_flight = max(stub.max_in_flight, stub._in_flight)
                    entry = stub.script.pop(0) if stub.script else None
                try:
                    if entry is not None and entry.get("delay"):
                        time.sleep(entry["delay"])
                    if entry is None:
                        status, payload = 200, json.dumps(
                            {"choices": [{"message": {"content": stub.responder(body)}}]}
                        )
                    elif "content" in entry:
                        status = entry.get("status", 200)
                        payload = json.dumps(
                            {"choices": [{"message": {"content": entry["content"]}}]}
                        )
                    else:
                        status = entry.get("status", 200)
                        body_field = entry.get("body", "")
                        payload = (
                            body_field if isinstance(body_field, str) else json.dumps(body_field)
                        )
                    data = payload.encode("utf-8")
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                finally:
                    with stub._lock:
                        stub._in_flight -= 1

        return Handler

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def start(self) -> "StubServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
