"""Language backends that score prompts.

Two kinds of backend exist:

* **QA backends** answer yes/no prompts. ``affirmative_negative(prompt)``
  returns the probability mass behind affirmative vs. negative answers;
  :func:`qa_logit` thresholds them into the binary logit. The default
  backend is a rule oracle that encodes the hint-convention instructions
  exactly and needs no network.
* **Completion backends** score a continuation string after a prompt via
  ``continuation_logprob``, returning the length-normalized (mean per-token)
  log-likelihood. :func:`completion_logit` passes that through as the logit,
  so likelier continuations score higher.

``CompletionApiBackend`` is an optional thin client for an OpenAI-style
completions endpoint. It is never required: all training and tests run on
the oracle/scripted backends. The API key is read from an environment
variable only when this backend is instantiated.
"""

from __future__ import annotations

import math
import os
import time
from typing import Protocol

from .errors import BackendError, ContractViolation
from .language import (
    OBS_HINT_COLOR,
    OBS_HINT_RANK,
    parse_action_text,
    parse_observation_text,
    split_qa_prompt,
)

AFFIRMATIVE_TOKENS = ("Yes", "yes", " Yes", " yes")
NEGATIVE_TOKENS = ("No", "no", " No", " no")


class QaBackend(Protocol):
    name: str

    def affirmative_negative(self, prompt: str) -> tuple[float, float]: ...


class CompletionBackend(Protocol):
    name: str

    def continuation_logprob(self, prompt: str, continuation: str) -> float: ...


def qa_logit(backend: QaBackend, prompt: str) -> int:
    """Binary logit: 1 iff the backend favors an affirmative answer."""
    p_yes, p_no = backend.affirmative_negative(prompt)
    return 1 if p_yes > p_no else 0


def completion_logit(backend: CompletionBackend, prompt: str, action_text: str) -> float:
    return backend.continuation_logprob(prompt, action_text)


class HintConventionOracle:
    """Rule backend for the Hanabi hint-convention instructions.

    For the color convention the answer is "yes" exactly when (a) the partner
    just hinted a color and the question is about playing one of the touched
    positions, or (b) the partner did anything else and the question is about
    hinting color. The rank convention swaps the two hint types.
    """

    def __init__(self, convention: str):
        if convention not in ("color", "rank"):
            raise ContractViolation(f"convention must be 'color' or 'rank', got {convention!r}")
        self.convention = convention
        self.name = f"oracle_{convention}"

    def affirmative_negative(self, prompt: str) -> tuple[float, float]:
        obs_text, act_text = split_qa_prompt(prompt)
        obs = parse_observation_text(obs_text)
        act = parse_action_text(act_text)
        trigger = OBS_HINT_COLOR if self.convention == "color" else OBS_HINT_RANK
        reply = f"hint_{self.convention}"
        if obs.kind == trigger:
            yes = act.kind == "play" and act.position in obs.positions
        else:
            yes = act.kind == reply
        return (1.0, 0.0) if yes else (0.0, 1.0)


class ScriptedSaySelectBackend:
    """Deterministic stand-in for a completion model on Say-Select prompts.

    Scores the digit matching the partner's announcement as the likeliest
    continuation and every other action (including quitting) uniformly lower.
    """

    def __init__(self, match_prob: float = 0.5, other_prob: float = 0.05):
        if not (0 < other_prob < match_prob <= 1):
            raise ContractViolation("need 0 < other_prob < match_prob <= 1")
        self.match_logprob = math.log(match_prob)
        self.other_logprob = math.log(other_prob)
        self.name = "scripted_say_select"

    def continuation_logprob(self, prompt: str, continuation: str) -> float:
        try:
            said = prompt.rsplit("My partner selected ", 1)[1].split(".", 1)[0]
        except IndexError:
            raise ContractViolation(f"not a Say-Select prompt: {prompt!r}") from None
        return self.match_logprob if continuation.strip() == said else self.other_logprob


class CompletionApiBackend:
    """Thin client for an OpenAI-style /completions endpoint with logprobs.

    Transport failures raise a retryable :class:`BackendError` after
    ``max_retries`` attempts; a prompt is never silently scored 0.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "INSTRUCTRL_API_KEY",
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 2.0,
        min_interval: float = 0.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = os.environ.get(api_key_env, "")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.min_interval = min_interval
        self._last_request = 0.0
        self.name = f"api:{model}"

    def _post(self, payload: dict) -> dict:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            wait = self.min_interval - (time.monotonic() - self._last_request)
            if wait > 0:
                time.sleep(wait)
            try:
                self._last_request = time.monotonic()
                resp = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = BackendError(f"HTTP {resp.status_code}", retryable=True)
                elif resp.status_code != 200:
                    raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}", retryable=False)
                else:
                    return resp.json()
            except requests.RequestException as exc:
                last_error = BackendError(str(exc), retryable=True)
            time.sleep(self.backoff * 2**attempt)
        raise last_error or BackendError("request failed", retryable=True)

    def affirmative_negative(self, prompt: str) -> tuple[float, float]:
        data = self._post(
            {
                "model": self.model,
                "prompt": prompt,
                "max_tokens": 1,
                "temperature": 0.0,
                "logprobs": 20,
            }
        )
        try:
            top = data["choices"][0]["logprobs"]["top_logprobs"][0]
        except (KeyError, IndexError, TypeError):
            raise BackendError("response carried no top_logprobs", retryable=False) from None
        p_yes = sum(math.exp(lp) for tok, lp in top.items() if tok in AFFIRMATIVE_TOKENS)
        p_no = sum(math.exp(lp) for tok, lp in top.items() if tok in NEGATIVE_TOKENS)
        return p_yes, p_no

    def continuation_logprob(self, prompt: str, continuation: str) -> float:
        data = self._post(
            {
                "model": self.model,
                "prompt": prompt + " " + continuation.strip(),
                "max_tokens": 0,
                "echo": True,
                "logprobs": 0,
            }
        )
        try:
            lp = data["choices"][0]["logprobs"]
            offsets = lp["text_offset"]
            logprobs = lp["token_logprobs"]
        except (KeyError, IndexError, TypeError):
            raise BackendError("response carried no echo logprobs", retryable=False) from None
        cut = len(prompt)
        tail = [t for off, t in zip(offsets, logprobs) if off >= cut and t is not None]
        if not tail:
            raise BackendError("continuation tokens missing from echo", retryable=False)
        return sum(tail) / len(tail)


def make_backend(name: str, **kwargs):
    """Backend registry used by run configs: oracle_color, oracle_rank,
    scripted_say_select, or api (which requires base_url and model)."""
    if name == "oracle_color":
        return HintConventionOracle("color")
    if name == "oracle_rank":
        return HintConventionOracle("rank")
    if name == "scripted_say_select":
        return ScriptedSaySelectBackend(**kwargs)
    if name == "api":
        return CompletionApiBackend(**kwargs)
    raise ContractViolation(f"unknown backend {name!r}")
