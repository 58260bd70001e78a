"""
Model backends: live chat-completions over HTTP, transcript replay, and a
scripted stub. All three record every answered call in a Transcript.
"""
import asyncio
import fnmatch
import inspect
import json
import logging
import os
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import aiohttp
from tenacity import AsyncRetrying, RetryError, retry_if_exception_type, stop_after_attempt, wait_exponential

from app.core.errors import (ExtractionError, GatewayError, ReplayMissError, RequestDriftError,
                             ResponseValidationError, SettingsError)
from app.models.gateway import ChatRequest
from .extraction import extract_json
from .messages import wire_body, with_json_reminder
from .transcript import Transcript, request_digest

logger = logging.getLogger(__name__)

RETRY_SUFFIX = "/retry"


class _TransientError(GatewayError):
    """Transport failure or 5xx; retried"""


class ModelBackend(ABC):
    """Shared call bookkeeping; subclasses only produce the response text"""

    mode = "abstract"

    def __init__(self, transcript: Optional[Transcript] = None):
        self.transcript = transcript or Transcript()

    async def complete(self, req: ChatRequest, call_tag: str) -> str:
        self.transcript.reserve(call_tag)
        digest = request_digest(req)
        logger.debug(f"[{self.mode}] {call_tag} digest {digest[:12]}")
        try:
            text = await self._respond(req, call_tag, digest)
        except Exception:
            self.transcript.release(call_tag)
            raise
        self.transcript.fill(call_tag, digest, text)
        return text

    @abstractmethod
    async def _respond(self, req: ChatRequest, call_tag: str, digest: str) -> str:
        """Return the assistant text for a request"""

    async def aclose(self) -> None:
        return None


class LiveBackend(ModelBackend):
    """OpenAI-compatible chat-completions endpoint"""

    mode = "live"

    def __init__(self, base_url: str, api_key: str, timeout_s: float = 120.0, max_retries: int = 3,
                 transcript: Optional[Transcript] = None, backoff_s: float = 1.0):
        super().__init__(transcript)
        self.base_url = base_url.rstrip("/")
        self._api_key = api_key
        self.timeout = aiohttp.ClientTimeout(total=timeout_s)
        self.max_retries = max_retries
        self.backoff_s = backoff_s

    def __repr__(self) -> str:
        return f"LiveBackend(base_url={self.base_url!r})"

    async def _post_once(self, body: Dict[str, Any], call_tag: str) -> str:
        headers = {"Content-Type": "application/json", "Authorization": f"Bearer {self._api_key}"}
        try:
            async with aiohttp.ClientSession(timeout=self.timeout) as session:
                async with session.post(f"{self.base_url}/chat/completions", json=body, headers=headers) as response:
                    if response.status >= 500:
                        raise _TransientError(f"{call_tag}: server error {response.status}", response.status)
                    if response.status >= 400:
                        detail = (await response.text())[:200]
                        raise GatewayError(f"{call_tag}: request rejected with {response.status}: {detail}",
                                           response.status)
                    payload = await response.json(content_type=None)
        except (aiohttp.ClientError, asyncio.TimeoutError) as e:
            raise _TransientError(f"{call_tag}: transport error: {e}") from e

        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise GatewayError(f"{call_tag}: malformed completion payload") from e
        if isinstance(content, list):
            content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
        return content or ""

    async def _respond(self, req: ChatRequest, call_tag: str, digest: str) -> str:
        body = wire_body(req)
        try:
            async for attempt in AsyncRetrying(
                stop=stop_after_attempt(self.max_retries),
                wait=wait_exponential(multiplier=self.backoff_s, max=30),
                retry=retry_if_exception_type(_TransientError),
                reraise=False,
            ):
                with attempt:
                    if attempt.retry_state.attempt_number > 1:
                        logger.warning(f"Retrying {call_tag} (attempt {attempt.retry_state.attempt_number})")
                    return await self._post_once(body, call_tag)
        except RetryError as e:
            last = e.last_attempt.exception()
            raise GatewayError(f"{call_tag}: giving up after {self.max_retries} attempts: {last}",
                               getattr(last, "status_code", None)) from last


class ReplayBackend(ModelBackend):
    """
    Answers from a recorded transcript; never touches the network.

    A record with an empty digest is unpinned: it answers any request under
    its tag. Hand-authored fixtures start out unpinned; the transcript a
    replay writes carries the real digests and replays strictly.
    """

    mode = "replay"

    def __init__(self, recorded: Union[Transcript, str, Path], transcript: Optional[Transcript] = None):
        super().__init__(transcript)
        self.recorded = recorded if isinstance(recorded, Transcript) else Transcript.load(recorded)

    async def _respond(self, req: ChatRequest, call_tag: str, digest: str) -> str:
        record = self.recorded.get(call_tag)
        if record is None:
            raise ReplayMissError(f"no recorded response for call tag '{call_tag}'")
        if not record.digest:
            logger.debug(f"{call_tag}: unpinned record, request not checked")
        elif record.digest != digest:
            raise RequestDriftError(call_tag)
        return record.response


Responder = Callable[[str, ChatRequest], Any]


class ScriptedBackend(ModelBackend):
    """
    Stub backend driven by a script.

    The script maps call tags or glob patterns to a response or a list of
    responses consumed one per matching call (the last one repeats). Values
    that are not strings are sent as their JSON text. A callable script is
    called with (tag, request) and may be async.
    """

    mode = "stub"

    def __init__(self, script: Union[Dict[str, Any], Responder], transcript: Optional[Transcript] = None):
        super().__init__(transcript)
        self.script = script
        self._cursor: Dict[str, int] = {}

    @classmethod
    def from_file(cls, path: Union[str, Path], transcript: Optional[Transcript] = None) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as handle:
            script = json.load(handle)
        if not isinstance(script, dict):
            raise SettingsError(f"stub script {path} must be a JSON object")
        return cls(script, transcript)

    def _lookup(self, call_tag: str) -> Optional[str]:
        if call_tag in self.script:
            return call_tag
        for pattern in self.script:
            if fnmatch.fnmatchcase(call_tag, pattern):
                return pattern
        return None

    async def _respond(self, req: ChatRequest, call_tag: str, digest: str) -> str:
        if callable(self.script):
            result = self.script(call_tag, req)
            if inspect.isawaitable(result):
                result = await result
        else:
            key = self._lookup(call_tag)
            if key is None:
                raise ReplayMissError(f"no scripted response for call tag '{call_tag}'")
            result = self.script[key]
            if isinstance(result, list):
                position = self._cursor.get(key, 0)
                self._cursor[key] = position + 1
                result = result[min(position, len(result) - 1)] if result else ""
        return result if isinstance(result, str) else json.dumps(result)


async def complete(backend: ModelBackend, req: ChatRequest, call_tag: str) -> str:
    """Send one request through a backend and return the assistant text"""
    return await backend.complete(req, call_tag)


async def complete_json(backend: ModelBackend, req: ChatRequest, call_tag: str,
                        validate: Optional[Callable[[Any], Any]] = None) -> Any:
    """
    Complete, extract JSON and validate, re-asking once on failure.

    validate receives the parsed value and returns the accepted result or
    raises ResponseValidationError / ValueError. The retry goes out under
    '<tag>/retry' with a JSON-only reminder and the error text appended.
    """
    attempts: List[ChatRequest] = [req]
    tags = [call_tag, f"{call_tag}{RETRY_SUFFIX}"]
    last_error: Optional[Exception] = None
    for position, tag in enumerate(tags):
        if position:
            note = str(last_error) if isinstance(last_error, (ResponseValidationError, ValueError)) else ""
            attempts.append(with_json_reminder(req, note))
        text = await backend.complete(attempts[-1], tag)
        try:
            value = extract_json(text)
            return validate(value) if validate else value
        except (ExtractionError, ResponseValidationError, ValueError) as e:
            logger.warning(f"{tag}: unusable response ({e})")
            last_error = e
    raise last_error


def create_backend(backend_settings, transcript: Optional[Transcript] = None) -> ModelBackend:
    """Backend for the configured mode; the credential comes from the environment only"""
    mode = backend_settings.mode
    if mode == "replay":
        if not backend_settings.transcript_path:
            raise SettingsError("replay mode needs a transcript path")
        return ReplayBackend(backend_settings.transcript_path, transcript)
    if mode == "stub":
        if not backend_settings.script_path:
            raise SettingsError("stub mode needs a script path")
        return ScriptedBackend.from_file(backend_settings.script_path, transcript)
    if mode == "live":
        api_key = os.environ.get(backend_settings.api_key_env, "")
        if not api_key:
            raise SettingsError(f"live mode needs the {backend_settings.api_key_env} environment variable")
        return LiveBackend(backend_settings.base_url, api_key, backend_settings.timeout_s,
                           backend_settings.max_retries, transcript)
    raise SettingsError(f"unknown backend mode '{mode}'")
