"""Chat access: an OpenAI-compatible HTTP client and a seeded simulator.

Both expose ``respond(instance, prompt, seed) -> (text, completion_tokens)``,
which is all the probing loop needs.
"""

from __future__ import annotations

import base64
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import httpx
import numpy as np

from .errors import AuthError, ClientError, MalformedResponse, ProfileMissing, RateLimited, Transport
from .graph import QaInstance, TaskKind
from .protocol import estimate_tokens, format_gold, wrap_answer
from .render import RenderedPrompt, TrfKind

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

log = logging.getLogger(__name__)

API_KEY_ENV = "GRAPHTRF_API_KEY"
RETRY_DELAYS = (1.0, 2.0, 4.0)
DEFAULT_TIMEOUT = 120.0
DEFAULT_SYSTEM = "You are a helpful assistant that answers graph reasoning questions."


@dataclass(frozen=True)
class ChatRequest:
    user_text: str
    model_name: str
    system: str = DEFAULT_SYSTEM
    image: bytes | None = None
    temperature: float = 0.7
    max_tokens: int = 4096

    def __post_init__(self):
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def payload(self) -> dict[str, Any]:
        """JSON body for ``POST <base_url>/chat/completions``."""
        messages: list[dict[str, Any]] = []
        if self.system:
            messages.append({"role": "system", "content": self.system})
        if self.image is None:
            messages.append({"role": "user", "content": self.user_text})
        else:
            url = "data:image/png;base64," + base64.b64encode(self.image).decode("ascii")
            messages.append({
                "role": "user",
                "content": [
                    {"type": "text", "text": self.user_text},
                    {"type": "image_url", "image_url": {"url": url}},
                ],
            })
        return {
            "model": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": messages,
        }


class ChatClient:
    """Synchronous client for an OpenAI-compatible chat completions endpoint.

    Transient failures (transport errors, 429, 5xx) are retried after 1, 2 and
    4 seconds. The client is shareable across threads; at most ``concurrency``
    requests are in flight at once.
    """

    needs_images = True

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        *,
        temperature: float = 0.7,
        max_tokens: int = 4096,
        timeout: float = DEFAULT_TIMEOUT,
        concurrency: int = 8,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        system: str = DEFAULT_SYSTEM,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise AuthError(f"no API key: set {API_KEY_ENV}")
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.system = system
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(concurrency)
        self._http = httpx.Client(
            timeout=httpx.Timeout(timeout),
            transport=transport,
            headers={"Authorization": f"Bearer {self.api_key}"},
        )

    def close(self) -> None:
        self._http.close()

    def chat(self, request: ChatRequest) -> tuple[str, int]:
        url = f"{self.base_url}/chat/completions"
        body = request.payload()
        last_exc: ClientError | None = None
        with self._slots:
            for attempt in range(len(RETRY_DELAYS) + 1):
                if attempt:
                    self._sleep(RETRY_DELAYS[attempt - 1])
                try:
                    resp = self._http.post(url, json=body)
                except httpx.TimeoutException as exc:
                    last_exc = Transport(f"request timed out: {exc}")
                    continue
                except httpx.TransportError as exc:
                    last_exc = Transport(f"transport failure: {exc}")
                    continue
                if resp.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credentials ({resp.status_code})")
                if resp.status_code == 429:
                    last_exc = RateLimited("rate limited after retries")
                    continue
                if resp.status_code >= 500:
                    last_exc = Transport(f"server error {resp.status_code}")
                    continue
                if resp.status_code >= 400:
                    raise ClientError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
                return self._parse(resp)
        assert last_exc is not None
        raise last_exc

    @staticmethod
    def _parse(resp: httpx.Response) -> tuple[str, int]:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected response body: {resp.text[:200]}") from exc
        if not isinstance(text, str):
            raise MalformedResponse("message content is not a string")
        usage = data.get("usage") or {}
        tokens = usage.get("completion_tokens")
        if not isinstance(tokens, int) or tokens < 0:
            tokens = estimate_tokens(text)
        return text, max(1, tokens)

    def respond(self, instance: QaInstance, prompt: RenderedPrompt, seed) -> tuple[str, int]:
        request = ChatRequest(
            user_text=prompt.text,
            model_name=self.model,
            system=self.system,
            image=prompt.image_bytes,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )
        return self.chat(request)


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimCell:
    accuracy_p: float
    token_mean: float
    token_spread: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.accuracy_p <= 1.0):
            raise ValueError(f"accuracy_p {self.accuracy_p} outside [0, 1]")
        if not self.token_mean > 0:
            raise ValueError("token_mean must be positive")
        if self.token_spread < 0:
            raise ValueError("token_spread must be >= 0")


@dataclass
class SimProfile:
    """Per (task, TRF) behaviour of a simulated model.

    Cells missing from ``cells`` fall back to ``default`` when one is set.
    """

    cells: dict[tuple[TaskKind, TrfKind], SimCell] = field(default_factory=dict)
    default: SimCell | None = None
    name: str = "sim"

    def cell(self, task: TaskKind, trf: TrfKind) -> SimCell:
        found = self.cells.get((task, trf), self.default)
        if found is None:
            raise ProfileMissing(f"profile {self.name!r} has no cell for ({task.value}, {trf.value})")
        return found

    def to_toml(self) -> str:
        doc: dict[str, Any] = {"name": self.name}
        if self.default is not None:
            doc["default"] = _cell_dict(self.default)
        cells: dict[str, dict[str, Any]] = {}
        for task in TaskKind:
            for trf in TrfKind:
                if (task, trf) in self.cells:
                    cells.setdefault(task.value, {})[trf.value] = _cell_dict(self.cells[(task, trf)])
        doc["cells"] = cells
        return tomli_w.dumps(doc)

    @classmethod
    def from_toml(cls, text: str) -> "SimProfile":
        doc = tomllib.loads(text)
        default = SimCell(**doc["default"]) if "default" in doc else None
        cells = {}
        for task_name, row in doc.get("cells", {}).items():
            for trf_name, spec in row.items():
                cells[(TaskKind(task_name), TrfKind(trf_name))] = SimCell(**spec)
        return cls(cells=cells, default=default, name=doc.get("name", "sim"))

    @classmethod
    def load(cls, path) -> "SimProfile":
        with open(path, encoding="utf-8") as fh:
            return cls.from_toml(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_toml())


def _cell_dict(cell: SimCell) -> dict[str, float]:
    return {"accuracy_p": cell.accuracy_p, "token_mean": cell.token_mean, "token_spread": cell.token_spread}


def wrong_answer(instance: QaInstance) -> str:
    """A well-formed answer that the validator rejects."""
    task, gold = instance.task, instance.gold
    if task in (TaskKind.CONN, TaskKind.CYC, TaskKind.LP):
        return "No" if gold else "Yes"
    if task in (TaskKind.MF, TaskKind.BGM):
        return str(int(gold) + 1)
    if task is TaskKind.NC:
        count = int(instance.params.get("class_count", int(gold) + 2))
        return f"Class {(int(gold) + 1) % count}"
    # dropping the final node breaks the permutation / endpoint requirement
    truncated = list(gold)[:-1]
    return "->".join(map(str, truncated)) if truncated else "-1"


def sample_tokens(rng: np.random.Generator, mean: float, spread: float) -> int:
    """Rounded normal(mean, spread) truncated below at 1."""
    if spread == 0:
        return max(1, int(round(mean)))
    for _ in range(32):
        x = rng.normal(mean, spread)
        if x >= 1.0:
            return max(1, int(round(x)))
    return 1


def sim_chat(profile: SimProfile, instance: QaInstance, trf: TrfKind, rng: np.random.Generator) -> tuple[str, int]:
    cell = profile.cell(instance.task, trf)
    correct = rng.random() < cell.accuracy_p
    answer = format_gold(instance) if correct else wrong_answer(instance)
    tokens = sample_tokens(rng, cell.token_mean, cell.token_spread)
    return f"The answer is {wrap_answer(answer)}", tokens


class SimClient:
    """Deterministic offline stand-in for a chat model."""

    needs_images = False

    def __init__(self, profile: SimProfile):
        self.profile = profile

    def respond(self, instance: QaInstance, prompt: RenderedPrompt, seed) -> tuple[str, int]:
        return sim_chat(self.profile, instance, prompt.trf, np.random.default_rng(seed))
