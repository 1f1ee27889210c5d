"""Checkpoint container: versioned JSON with config echo, parameter blobs,
the prior table (inlined, so a checkpoint is self-contained for serving and
adaptation), and the update counter. Float arrays round-trip bit-exactly
through JSON (shortest-repr encoding).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import EnvConfig, env_config_from_json, env_config_to_json
from .errors import ConfigError
from .hanabi import HanabiConfig
from .language import Instruction
from .nets import Mlp
from .policies import (
    HanabiPpoPolicy,
    HanabiPriorView,
    HanabiValuePolicy,
    SaySelectPriorView,
    SaySelectQPolicy,
)
from .prior import PriorIndex, PriorTable
from .schedules import anneal_lambda

CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    kind: str                       # say_select_tabular | hanabi_value | hanabi_ppo
    env: EnvConfig
    arrays: dict[str, np.ndarray]
    net_sizes: dict[str, list[int]]
    update_count: int
    lam_final: float
    beta: float | None
    prior: PriorTable | None
    train_config: dict
    method_id: str = ""


def _prior_to_json(prior: PriorTable | None):
    if prior is None:
        return None
    return {
        "env": prior.env_id,
        "instruction": {
            "id": prior.instruction.id,
            "text": prior.instruction.text,
            "template": prior.instruction.template,
            "tag": prior.instruction.tag,
        },
        "backend": prior.backend_name,
        "beta": prior.beta,
        "provenance": prior.provenance,
        "entries": [[obs, act, logit] for (obs, act), logit in prior.entries.items()],
    }


def _prior_from_json(data) -> PriorTable | None:
    if data is None:
        return None
    inst = data["instruction"]
    return PriorTable(
        env_id=data["env"],
        instruction=Instruction(id=inst["id"], text=inst["text"],
                                template=inst["template"], tag=inst.get("tag", "")),
        backend_name=data["backend"],
        beta=float(data["beta"]),
        entries={(obs, act): float(logit) for obs, act, logit in data["entries"]},
        provenance=data.get("provenance", "oracle"),
    )


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "kind": ckpt.kind,
        "env": env_config_to_json(ckpt.env),
        "arrays": {k: v.tolist() for k, v in ckpt.arrays.items()},
        "net_sizes": ckpt.net_sizes,
        "update_count": ckpt.update_count,
        "lam_final": ckpt.lam_final,
        "beta": ckpt.beta,
        "prior": _prior_to_json(ckpt.prior),
        "train_config": ckpt.train_config,
        "method_id": ckpt.method_id,
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version in {path}")
    return Checkpoint(
        kind=doc["kind"],
        env=env_config_from_json(doc["env"]),
        arrays={k: np.array(v, dtype=np.float64) for k, v in doc["arrays"].items()},
        net_sizes={k: list(v) for k, v in doc.get("net_sizes", {}).items()},
        update_count=int(doc["update_count"]),
        lam_final=float(doc["lam_final"]),
        beta=doc.get("beta"),
        prior=_prior_from_json(doc.get("prior")),
        train_config=doc.get("train_config", {}),
        method_id=doc.get("method_id", ""),
    )


def checkpoint_from_say_select(result, method_id: str = "") -> Checkpoint:
    cfg = result.config
    return Checkpoint(
        kind="say_select_tabular",
        env=cfg.env,
        arrays={"alice_q": result.alice_q, "bob_q": result.bob_q},
        net_sizes={},
        update_count=cfg.updates,
        lam_final=anneal_lambda(cfg.lam, cfg.updates - 1) if cfg.prior is not None else 0.0,
        beta=cfg.beta,
        prior=cfg.prior,
        train_config=_train_config_echo(cfg),
        method_id=method_id,
    )


def checkpoint_from_hanabi(result, method_id: str = "") -> Checkpoint:
    cfg = result.config
    arrays = {}
    sizes = {}
    if result.value_net is not None:
        arrays["value_net"] = result.value_net.get_vector()
        sizes["value_net"] = result.value_net.sizes
    if result.policy_net is not None:
        arrays["policy_net"] = result.policy_net.get_vector()
        sizes["policy_net"] = result.policy_net.sizes
    return Checkpoint(
        kind="hanabi_value" if result.learner == "value_net" else "hanabi_ppo",
        env=cfg.env,
        arrays=arrays,
        net_sizes=sizes,
        update_count=cfg.updates,
        lam_final=anneal_lambda(cfg.lam, cfg.updates - 1) if cfg.prior is not None else 0.0,
        beta=cfg.beta,
        prior=cfg.prior,
        train_config=_train_config_echo(cfg),
        method_id=method_id,
    )


def _train_config_echo(cfg) -> dict:
    from .core import env_config_to_json

    return {
        "env": env_config_to_json(cfg.env),
        "seed": cfg.seed,
        "learner": cfg.learner,
        "updates": cfg.updates,
        "batch_episodes": cfg.batch_episodes,
        "epsilon": cfg.epsilon,
        "lr": cfg.lr,
        "lam": cfg.lam.to_json(),
        "beta": cfg.beta,
        "hidden": list(cfg.hidden),
        "instruction": cfg.prior.instruction.id if cfg.prior is not None else None,
        "prior_backend": cfg.prior.backend_name if cfg.prior is not None else None,
        "prior_provenance": cfg.prior.provenance if cfg.prior is not None else None,
    }


def _net_from(ckpt: Checkpoint, name: str) -> Mlp:
    net = Mlp(ckpt.net_sizes[name])
    net.set_vector(ckpt.arrays[name])
    return net


def build_policy(ckpt: Checkpoint, lam: float | None = None, role: int | None = None) -> Any:
    """Greedy policy from a checkpoint, with the training-time regularization
    folded in by default (pass ``lam=0.0`` for the pure-Q view)."""
    lam = ckpt.lam_final if lam is None else lam
    if ckpt.kind == "say_select_tabular":
        prior_view = None
        if ckpt.prior is not None:
            prior_view = SaySelectPriorView(PriorIndex(ckpt.prior, beta=ckpt.beta))
        table = ckpt.arrays["bob_q"] if role == 1 else ckpt.arrays["alice_q"]
        use_lam = lam if role == 1 else 0.0
        return SaySelectQPolicy(role or 0, table, lam=use_lam,
                                prior=prior_view if role == 1 else None, epsilon=0.0)
    rules: HanabiConfig = ckpt.env.variant
    prior_view = None
    if ckpt.prior is not None:
        prior_view = HanabiPriorView(PriorIndex(ckpt.prior, beta=ckpt.beta), rules)
    if ckpt.kind == "hanabi_value":
        return HanabiValuePolicy(rules, _net_from(ckpt, "value_net"), lam=lam,
                                 prior=prior_view, epsilon=0.0)
    if ckpt.kind == "hanabi_ppo":
        return HanabiPpoPolicy(rules, _net_from(ckpt, "policy_net"),
                               prior=prior_view, sample=False)
    raise ConfigError(f"unknown checkpoint kind {ckpt.kind!r}")


def say_select_pair(ckpt: Checkpoint, lam: float | None = None):
    """(Alice, Bob) greedy pair from a Say-Select checkpoint."""
    return build_policy(ckpt, lam=lam, role=0), build_policy(ckpt, lam=lam, role=1)
