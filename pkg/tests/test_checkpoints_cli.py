import json
import os

import numpy as np
import pytest

from instructrl.checkpoints import (
    build_policy,
    checkpoint_from_hanabi,
    checkpoint_from_say_select,
    load_checkpoint,
    save_checkpoint,
    say_select_pair,
)
from instructrl.cli import main as cli_main
from instructrl.core import make_env, run_episode
from instructrl.fast_say_select import train_say_select_fast
from instructrl.hanabi import mini_hanabi_config
from instructrl.qlearn import TrainConfig, say_select_train_config, train_hanabi
from instructrl.schedules import constant


@pytest.fixture(scope="module")
def say_ckpt(tmp_path_factory, say_select_table):
    result = train_say_select_fast(
        say_select_train_config(seed=1, prior=say_select_table, lam=0.25, updates=40))
    ckpt = checkpoint_from_say_select(result, "say-test")
    path = str(tmp_path_factory.mktemp("ck") / "say.ckpt.json")
    save_checkpoint(ckpt, path)
    return ckpt, path


@pytest.fixture(scope="module")
def hanabi_ckpt(tmp_path_factory, mini_color_table):
    cfg = TrainConfig(env=mini_hanabi_config(), seed=2, learner="value_net", updates=6,
                      batch_episodes=4, lam=constant(0.25), prior=mini_color_table,
                      hidden=(24,), min_replay=32, grad_steps=2, train_batch=32)
    result = train_hanabi(cfg)
    ckpt = checkpoint_from_hanabi(result, "mini-test")
    path = str(tmp_path_factory.mktemp("ck") / "mini.ckpt.json")
    save_checkpoint(ckpt, path)
    return ckpt, path


def test_checkpoint_bit_exact_roundtrip(hanabi_ckpt):
    ckpt, path = hanabi_ckpt
    loaded = load_checkpoint(path)
    assert np.array_equal(loaded.arrays["value_net"], ckpt.arrays["value_net"])
    assert loaded.env == ckpt.env
    assert loaded.prior.entries == ckpt.prior.entries
    assert loaded.lam_final == ckpt.lam_final
    assert loaded.train_config["instruction"] == "hanabi_color"


def test_policy_from_checkpoint_is_deterministic(hanabi_ckpt):
    ckpt, path = hanabi_ckpt
    env_cfg = ckpt.env
    p1 = build_policy(load_checkpoint(path))
    p2 = build_policy(load_checkpoint(path))
    env = make_env(env_cfg)
    t1 = run_episode(env, (p1, p1), 5)
    t2 = run_episode(env, (p2, p2), 5)
    assert [r.action for r in t1.steps] == [r.action for r in t2.steps]


def test_say_select_pair_from_checkpoint(say_ckpt):
    ckpt, path = say_ckpt
    alice, bob = say_select_pair(load_checkpoint(path))
    env = make_env(ckpt.env)
    trace = run_episode(env, (alice, bob), 3)
    assert len(trace.steps) >= 1


def test_cli_train_eval_analyze_roundtrip(tmp_path, say_select_table):
    run_config = {
        "env": {"env_id": "say_select", "max_steps": 20, "gamma": 0.99},
        "learner": "tabular_q",
        "instruction": "say_select",
        "backend": {"name": "scripted_say_select"},
        "lam": 0.25,
        "updates": 30,
        "seed": 5,
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(run_config))
    out = str(tmp_path / "out")
    assert cli_main(["train", "--config", str(cfg_path), "--out", out,
                     "--method-id", "toy"]) == 0
    ckpt_path = os.path.join(out, "toy.ckpt.json")
    assert os.path.exists(ckpt_path)
    assert os.path.exists(os.path.join(out, "toy_curve.csv"))
    assert os.path.exists(os.path.join(out, "toy_curve.svg"))

    # identical config -> identical checkpoint bytes (single-threaded determinism)
    out2 = str(tmp_path / "out2")
    assert cli_main(["train", "--config", str(cfg_path), "--out", out2,
                     "--method-id", "toy"]) == 0
    assert open(ckpt_path).read() == open(os.path.join(out2, "toy.ckpt.json")).read()

    reports_dir = str(tmp_path / "reports")
    assert cli_main(["eval", "--checkpoint", ckpt_path, "--games", "20",
                     "--seed", "3", "--out", reports_dir]) == 0
    assert os.path.exists(os.path.join(reports_dir, "toy_eval.csv"))

    assert cli_main(["analyze", "--checkpoint", ckpt_path, "--analyses", "grid",
                     "--out", reports_dir]) == 0
    assert os.path.exists(os.path.join(reports_dir, "bob_grid.csv"))
    assert os.path.exists(os.path.join(reports_dir, "bob_grid.txt"))


def test_cli_prior_build_and_audit(tmp_path, capsys):
    cache = str(tmp_path / "prior.json")
    assert cli_main(["prior", "build", "--env", "hanabi", "--instruction", "hanabi_color",
                     "--backend", "oracle_color", "--mini", "--out", cache]) == 0
    assert os.path.exists(cache)
    assert cli_main(["prior", "audit", "--table", cache, "--reference", "oracle_color",
                     "--mini"]) == 0
    out = capsys.readouterr().out
    assert "accuracy vs oracle_color: 1.000000" in out

    # corrupted build audits below 1.0
    noisy = str(tmp_path / "noisy.json")
    assert cli_main(["prior", "build", "--env", "hanabi", "--instruction", "hanabi_color",
                     "--backend", "oracle_color", "--mini", "--noise", "0.1",
                     "--out", noisy]) == 0
    assert cli_main(["prior", "audit", "--table", noisy, "--reference", "oracle_color",
                     "--mini"]) == 0
    out = capsys.readouterr().out
    assert "16 mismatches" in out  # round(0.1 * 156)


def test_cli_eval_hanabi_checkpoint(tmp_path, hanabi_ckpt):
    _, path = hanabi_ckpt
    reports_dir = str(tmp_path / "rep")
    assert cli_main(["eval", "--checkpoint", path, "--games", "10", "--seed", "1",
                     "--out", reports_dir]) == 0
    assert cli_main(["analyze", "--checkpoint", path,
                     "--analyses", "action_matrix,knowledge", "--games", "10",
                     "--out", reports_dir]) == 0
    assert os.path.exists(os.path.join(reports_dir, "action_matrix.csv"))
    assert os.path.exists(os.path.join(reports_dir, "action_matrix.svg"))
    assert os.path.exists(os.path.join(reports_dir, "card_knowledge.csv"))


def test_cli_bad_config_is_diagnosed(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"env": {"env_id": "say_select", "max_steps": 0,
                                            "gamma": 0.99}}))
    assert cli_main(["train", "--config", str(cfg_path)]) == 2


def test_cli_sweep_paths(tmp_path):
    run_config = {
        "env": {"env_id": "hanabi", "max_steps": 120, "gamma": 0.99,
                "variant": {"num_colors": 2, "hand_size": 2}},
        "learner": "value_net", "instruction": "hanabi_color", "backend": "oracle_color",
        "lam": 0.25, "updates": 6, "batch_episodes": 4, "hidden": [24],
        "min_replay": 32, "train_batch": 32, "grad_steps": 2, "seed": 1,
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(run_config))
    agents = str(tmp_path / "agents")
    assert cli_main(["train", "--config", str(cfg_path), "--out", agents,
                     "--method-id", "clean"]) == 0
    ckpt = os.path.join(agents, "clean.ckpt.json")
    prior_cache = str(tmp_path / "prior.json")
    assert cli_main(["prior", "build", "--env", "hanabi", "--instruction", "hanabi_color",
                     "--backend", "oracle_color", "--mini", "--out", prior_cache]) == 0
    out = str(tmp_path / "reports")
    assert cli_main(["sweep", "noise", "--config", str(cfg_path), "--grid", "0.5",
                     "--games", "8", "--clean-checkpoint", ckpt, "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "noise_sweep.csv"))
    assert cli_main(["sweep", "adaptation", "--config", str(cfg_path), "--grid", "0,1",
                     "--games", "8", "--base-checkpoint", ckpt,
                     "--prior-cache", prior_cache, "--partner", ckpt, "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "adaptation_sweep.csv"))
    assert os.path.exists(os.path.join(out, "adaptation_sweep.svg"))
