"""Single choke-point for language-model calls.

Prompts are rendered from registered templates, outputs are parsed as JSON
and checked against declarative schemas, and failing attempts are retried
with the validation error appended to the prompt. Backends are pluggable;
the deterministic scripted mock is the one tests rely on.
"""

import json
import os
import string
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Protocol, Union

from .errors import BackendUnavailable, ExhaustedRetries

__all__ = [
    "OutputSchema",
    "PromptTemplate",
    "GatewayConfig",
    "GatewayResult",
    "BackendRequest",
    "MockBackend",
    "HttpChatBackend",
    "Gateway",
]

RETRY_SUFFIX = (
    "\n\nYour previous answer failed validation because: {errors}. "
    "Respond again with only valid JSON matching the requested structure."
)


@dataclass(frozen=True)
class OutputSchema:
    """Declarative structural description of an expected model output.

    kind is one of "object", "array", "number", "string". Constraints that do
    not apply to a kind are ignored.
    """

    kind: str
    properties: Mapping[str, "OutputSchema"] = field(default_factory=dict)
    required: tuple[str, ...] = ()
    items: Optional["OutputSchema"] = None
    min_items: Optional[int] = None
    max_items: Optional[int] = None
    distinct_ci: bool = False
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    integer: bool = False
    non_empty: bool = False
    choices: tuple[str, ...] = ()

    def validate(self, value: Any, path: str = "$") -> list[str]:
        """Return a list of violation messages; empty means the value conforms."""
        errs: list[str] = []
        if self.kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return [f"{path}: expected a number, got {type(value).__name__}"]
            if self.integer and float(value) != int(value):
                errs.append(f"{path}: expected an integer")
            if self.minimum is not None and value < self.minimum:
                errs.append(f"{path}: {value} below minimum {self.minimum}")
            if self.maximum is not None and value > self.maximum:
                errs.append(f"{path}: {value} above maximum {self.maximum}")
        elif self.kind == "string":
            if not isinstance(value, str):
                return [f"{path}: expected a string, got {type(value).__name__}"]
            if self.non_empty and not value.strip():
                errs.append(f"{path}: must not be empty")
            if self.choices and value not in self.choices:
                errs.append(f"{path}: {value!r} not one of {list(self.choices)}")
        elif self.kind == "array":
            if not isinstance(value, list):
                return [f"{path}: expected an array, got {type(value).__name__}"]
            if self.min_items is not None and len(value) < self.min_items:
                errs.append(f"{path}: {len(value)} items, need at least {self.min_items}")
            if self.max_items is not None and len(value) > self.max_items:
                errs.append(f"{path}: {len(value)} items, need at most {self.max_items}")
            if self.distinct_ci:
                seen = [str(v).strip().lower() for v in value]
                if len(set(seen)) != len(seen):
                    errs.append(f"{path}: items must be pairwise distinct (case-insensitive)")
            if self.items is not None:
                for i, v in enumerate(value):
                    errs.extend(self.items.validate(v, f"{path}[{i}]"))
        elif self.kind == "object":
            if not isinstance(value, dict):
                return [f"{path}: expected an object, got {type(value).__name__}"]
            for name in self.required:
                if name not in value:
                    errs.append(f"{path}: missing required field {name!r}")
            for name, sub in self.properties.items():
                if name in value:
                    errs.extend(sub.validate(value[name], f"{path}.{name}"))
        else:
            raise ValueError(f"unknown schema kind {self.kind!r}")
        return errs


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt body with named slots and the schema its output must match."""

    template_id: str
    body: str
    schema_id: str

    def __post_init__(self):
        for _, slot, _, _ in string.Formatter().parse(self.body):
            if slot == "":
                raise ValueError(f"template {self.template_id}: positional slots not allowed")

    @property
    def slots(self) -> tuple[str, ...]:
        names = []
        for _, slot, _, _ in string.Formatter().parse(self.body):
            if slot and slot not in names:
                names.append(slot)
        return tuple(names)

    def render(self, bindings: Mapping[str, str]) -> str:
        missing = [s for s in self.slots if s not in bindings]
        if missing:
            raise KeyError(f"unbound slots for {self.template_id}: {missing}")
        return self.body.format(**{k: bindings[k] for k in self.slots})


@dataclass(frozen=True)
class GatewayConfig:
    max_retries: int = 3
    backend_id: str = "mock"
    timeout_s: float = 30.0

    def __post_init__(self):
        if not 0 <= self.max_retries <= 10:
            raise ValueError(f"max_retries {self.max_retries} outside [0, 10]")


@dataclass(frozen=True)
class GatewayResult:
    value: Any
    retries_used: int


@dataclass(frozen=True)
class BackendRequest:
    template_id: str
    prompt: str
    bindings: Mapping[str, str]


class Backend(Protocol):
    def generate(self, request: BackendRequest) -> str: ...


class MockBackend:
    """Deterministic scripted backend.

    The script maps template ids to either:
      * a list of responses, replayed by ordered call index (the last entry
        repeats once the script runs out), or
      * ``{"key_slot": <slot>, "responses": {<value>: response | [responses]}}``
        which replays per binding value, so concurrent callers stay
        deterministic regardless of scheduling.

    Call-index counters are guarded by a lock; concurrent tests must use
    disjoint templates or keyed scripts.
    """

    def __init__(self, script: Mapping[str, Any], latency_s: float = 0.0):
        self._script = dict(script)
        self._latency_s = latency_s
        self._counters: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: Union[str, Path], latency_s: float = 0.0) -> "MockBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), latency_s=latency_s)

    def generate(self, request: BackendRequest) -> str:
        if self._latency_s > 0:
            time.sleep(self._latency_s)
        entry = self._script.get(request.template_id)
        if entry is None:
            raise BackendUnavailable(f"no script for template {request.template_id!r}")
        if isinstance(entry, dict):
            slot = entry["key_slot"]
            key = str(request.bindings.get(slot, ""))
            scripted = entry["responses"].get(key)
            if scripted is None:
                raise BackendUnavailable(
                    f"no scripted response for {request.template_id!r} key {key!r}"
                )
            counter_key = (request.template_id, key)
        else:
            scripted = entry
            counter_key = (request.template_id, "")
        if isinstance(scripted, str):
            return scripted
        if not scripted:
            raise BackendUnavailable(f"empty script for template {request.template_id!r}")
        with self._lock:
            idx = self._counters.get(counter_key, 0)
            self._counters[counter_key] = idx + 1
        return scripted[min(idx, len(scripted) - 1)]


class HttpChatBackend:
    """Optional live adapter speaking an OpenAI-style chat-completion wire format.

    Untested in CI; the API key is read from the named environment variable.
    """

    def __init__(self, base_url: str, model: str, api_key_env: str = "CHROMALAB_API_KEY",
                 timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def generate(self, request: BackendRequest) -> str:
        import httpx

        key = os.environ.get(self.api_key_env)
        if not key:
            raise BackendUnavailable(f"environment variable {self.api_key_env} is not set")
        try:
            resp = httpx.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {key}"},
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": request.prompt}],
                },
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except BackendUnavailable:
            raise
        except Exception as exc:  # transport and protocol failures alike
            raise BackendUnavailable(str(exc)) from exc


def parse_structured(raw: str) -> tuple[Any, Optional[str]]:
    """Parse a model response as JSON, tolerating a markdown code fence."""
    text = raw.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
        if text.rstrip().endswith("```"):
            text = text.rstrip()[:-3]
    try:
        return json.loads(text), None
    except json.JSONDecodeError as exc:
        return None, f"response is not valid JSON ({exc.msg} at position {exc.pos})"


class Gateway:
    """Routes templated prompts to a backend and enforces output schemas.

    Shareable across concurrent callers; each complete() call is independent.
    """

    def __init__(self, backend: Backend, config: GatewayConfig = GatewayConfig()):
        self.backend = backend
        self.config = config
        self._templates: dict[str, PromptTemplate] = {}
        self._schemas: dict[str, OutputSchema] = {}

    def register_schema(self, schema_id: str, schema: OutputSchema) -> None:
        self._schemas[schema_id] = schema

    def register_template(self, template: PromptTemplate) -> None:
        if template.schema_id not in self._schemas:
            raise KeyError(f"schema {template.schema_id!r} is not registered")
        self._templates[template.template_id] = template

    def complete(self, template_id: str, bindings: Mapping[str, str],
                 schema_id: Optional[str] = None) -> GatewayResult:
        """Render, call, validate; retry with the error appended on failure.

        The backend is called exactly retries_used + 1 times, never more than
        max_retries + 1. Raises ExhaustedRetries when every attempt fails
        validation, BackendUnavailable on transport failure.
        """
        template = self._templates[template_id]
        schema = self._schemas[schema_id or template.schema_id]
        base_prompt = template.render(bindings)
        prompt = base_prompt
        last_errors: list[str] = []
        for attempt in range(self.config.max_retries + 1):
            raw = self.backend.generate(BackendRequest(template_id, prompt, bindings))
            value, parse_err = parse_structured(raw)
            errors = [parse_err] if parse_err else schema.validate(value)
            if not errors:
                return GatewayResult(value=value, retries_used=attempt)
            last_errors = errors
            prompt = base_prompt + RETRY_SUFFIX.format(errors="; ".join(errors))
        raise ExhaustedRetries(
            f"{template_id}: all {self.config.max_retries + 1} attempts failed validation; "
            f"last errors: {'; '.join(last_errors)}"
        )
