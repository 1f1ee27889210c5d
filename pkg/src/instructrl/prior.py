"""Prior policies from language: cached logit tables and their softmax.

A :class:`PriorTable` maps every (observation_text, action_text) pair of an
environment to a logit, together with the softmax temperature ``beta``. The
prior distribution over the legal actions of a state is
``softmax(beta * logit)`` restricted to those actions (restriction happens
before normalization). Question-answering backends produce binary logits;
completion backends produce mean-token log-likelihoods.

Tables must be complete over their enumeration domain: a missing entry is a
hard error, never a default.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .backends import completion_logit, qa_logit
from .errors import ContractViolation
from .hanabi import HanabiConfig
from .language import (
    TEMPLATE_QA,
    Instruction,
    build_prompt,
    enumerate_pairs,
    get_instruction,
)
from .rng import STREAM_CORRUPT, make_rng

PRIOR_CACHE_VERSION = 1


@dataclass(frozen=True)
class PriorTable:
    env_id: str
    instruction: Instruction
    backend_name: str
    beta: float
    entries: dict[tuple[str, str], float]
    provenance: str = "oracle"
    noise_ratio: float | None = None
    noise_seed: int | None = None
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.beta < 0:
            raise ContractViolation(f"beta must be non-negative, got {self.beta}")

    def logit(self, observation_text: str, action_text: str) -> float:
        try:
            return self.entries[(observation_text, action_text)]
        except KeyError:
            raise ContractViolation(
                f"prior table has no entry for ({observation_text!r}, {action_text!r})"
            ) from None

    @property
    def is_binary(self) -> bool:
        return all(v in (0.0, 1.0) for v in self.entries.values())

    def observation_texts(self) -> list[str]:
        seen: dict[str, None] = {}
        for obs, _ in self.entries:
            seen.setdefault(obs)
        return list(seen)

    def action_texts(self) -> list[str]:
        seen: dict[str, None] = {}
        for _, act in self.entries:
            seen.setdefault(act)
        return list(seen)


def build_prior_table(
    env_id: str,
    instruction: str | Instruction,
    backend,
    beta: float = 1.0,
    config: HanabiConfig | None = None,
    cache_path: str | None = None,
    flush_every: int = 200,
) -> PriorTable:
    """Score every enumerated (observation, action) pair with the backend.

    With ``cache_path`` the build is resumable: existing entries are reused
    without backend calls and partial progress is persisted every
    ``flush_every`` queries, so an interrupted API build picks up where it
    stopped.
    """
    instruction = get_instruction(instruction)
    pairs = enumerate_pairs(env_id, config) if env_id == "hanabi" else enumerate_pairs(env_id)
    entries: dict[tuple[str, str], float] = {}
    raw: dict = {}
    if cache_path and os.path.exists(cache_path):
        cached = load_prior_cache(cache_path)
        if cached.instruction.text != instruction.text or cached.env_id != env_id:
            raise ContractViolation(f"cache at {cache_path} was built for a different prior")
        entries.update(cached.entries)
        raw.update(cached.raw)

    provenance = "oracle" if backend.name.startswith(("oracle", "scripted")) else "llm_api"
    table = PriorTable(
        env_id=env_id,
        instruction=instruction,
        backend_name=backend.name,
        beta=beta,
        entries=entries,
        provenance=provenance,
        raw=raw,
    )

    pending = 0
    for obs_text, act_text in pairs:
        if (obs_text, act_text) in entries:
            continue
        if instruction.template == TEMPLATE_QA:
            prompt = build_prompt(instruction, obs_text, act_text)
            entries[(obs_text, act_text)] = float(qa_logit(backend, prompt))
        else:
            prompt = build_prompt(instruction, obs_text)
            entries[(obs_text, act_text)] = float(completion_logit(backend, prompt, act_text))
        pending += 1
        if cache_path and pending >= flush_every:
            save_prior_cache(table, cache_path)
            pending = 0

    # canonical order regardless of cache state
    ordered = {pair: entries[pair] for pair in pairs}
    entries.clear()
    entries.update(ordered)
    if cache_path:
        save_prior_cache(table, cache_path)
    return table


def prior_distribution(
    table: PriorTable,
    observation_text: str,
    legal_action_texts,
    beta: float | None = None,
) -> np.ndarray:
    """Softmax of ``beta * logit`` over the given legal actions (sums to 1)."""
    if not legal_action_texts:
        raise ContractViolation("no legal actions to score")
    beta = table.beta if beta is None else beta
    logits = np.array(
        [table.logit(observation_text, act) for act in legal_action_texts], dtype=np.float64
    )
    return softmax(beta * logits)


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores)
    exp = np.exp(shifted)
    return exp / exp.sum()


def corrupt_prior(table: PriorTable, noise_ratio: float, seed: int) -> PriorTable:
    """Flip exactly round(noise_ratio * N) binary logits, chosen uniformly."""
    if not 0.0 <= noise_ratio <= 1.0:
        raise ContractViolation(f"noise_ratio must be in [0, 1], got {noise_ratio}")
    if not table.is_binary:
        raise ContractViolation("only binary-logit tables can be noise-corrupted")
    keys = list(table.entries)
    n_flips = int(math.floor(noise_ratio * len(keys) + 0.5))
    rng = make_rng(seed, STREAM_CORRUPT)
    picked = rng.choice(len(keys), size=n_flips, replace=False) if n_flips else []
    entries = dict(table.entries)
    for i in picked:
        key = keys[int(i)]
        entries[key] = 1.0 - entries[key]
    return PriorTable(
        env_id=table.env_id,
        instruction=table.instruction,
        backend_name=table.backend_name,
        beta=table.beta,
        entries=entries,
        provenance=f"corrupted(x={noise_ratio}, seed={seed})",
        noise_ratio=noise_ratio,
        noise_seed=seed,
    )


def prior_accuracy(table: PriorTable, reference: PriorTable) -> float:
    """Fraction of entries agreeing with the reference table."""
    if set(table.entries) != set(reference.entries):
        raise ContractViolation("tables cover different (observation, action) domains")
    matches = sum(
        1 for key, value in table.entries.items() if value == reference.entries[key]
    )
    return matches / len(table.entries)


# -- cache files --------------------------------------------------------------------------


def save_prior_cache(table: PriorTable, path: str) -> None:
    doc = {
        "version": PRIOR_CACHE_VERSION,
        "env": table.env_id,
        "instruction": {
            "id": table.instruction.id,
            "text": table.instruction.text,
            "template": table.instruction.template,
            "tag": table.instruction.tag,
        },
        "backend": table.backend_name,
        "beta": table.beta,
        "provenance": table.provenance,
        "noise_ratio": table.noise_ratio,
        "noise_seed": table.noise_seed,
        "entries": [
            {"obs": obs, "act": act, "logit": logit}
            | ({"raw": table.raw[(obs, act)]} if (obs, act) in table.raw else {})
            for (obs, act), logit in table.entries.items()
        ],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_prior_cache(path: str) -> PriorTable:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != PRIOR_CACHE_VERSION:
        raise ContractViolation(f"unsupported prior cache version in {path}")
    inst = doc["instruction"]
    entries = {(e["obs"], e["act"]): float(e["logit"]) for e in doc["entries"]}
    raw = {(e["obs"], e["act"]): e["raw"] for e in doc["entries"] if "raw" in e}
    return PriorTable(
        env_id=doc["env"],
        instruction=Instruction(
            id=inst["id"], text=inst["text"], template=inst["template"], tag=inst.get("tag", "")
        ),
        backend_name=doc["backend"],
        beta=float(doc["beta"]),
        entries=entries,
        provenance=doc.get("provenance", "oracle"),
        noise_ratio=doc.get("noise_ratio"),
        noise_seed=doc.get("noise_seed"),
        raw=raw,
    )


class PriorIndex:
    """Fast lookup view of a table for rollout loops.

    Precomputes the logit matrix over (observation_text, action_text) indices
    and caches log prior vectors per (observation, legal-set) pair.
    """

    def __init__(self, table: PriorTable, beta: float | None = None):
        self.table = table
        self.beta = table.beta if beta is None else float(beta)
        self.obs_index = {text: i for i, text in enumerate(table.observation_texts())}
        self.act_index = {text: i for i, text in enumerate(table.action_texts())}
        self.matrix = np.full((len(self.obs_index), len(self.act_index)), np.nan)
        for (obs, act), logit in table.entries.items():
            self.matrix[self.obs_index[obs], self.act_index[act]] = logit
        if np.isnan(self.matrix).any():
            raise ContractViolation("prior table does not cover the full text product")
        self._cache: dict[tuple[int, tuple[int, ...]], tuple[np.ndarray, np.ndarray]] = {}

    def probs_and_logs(self, observation_text: str, legal_action_texts) -> tuple[np.ndarray, np.ndarray]:
        """(probs, log probs) over the legal actions, cached per (obs, legal-set)."""
        oi = self.obs_index[observation_text]
        ais = tuple(self.act_index[a] for a in legal_action_texts)
        key = (oi, ais)
        hit = self._cache.get(key)
        if hit is None:
            probs = softmax(self.beta * self.matrix[oi, list(ais)])
            hit = (probs, np.log(probs))
            self._cache[key] = hit
        return hit

    def log_probs(self, observation_text: str, legal_action_texts) -> np.ndarray:
        return self.probs_and_logs(observation_text, legal_action_texts)[1]
