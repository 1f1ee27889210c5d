"""Command-line entry points: train / eval / analyze / prior / sweep / serve.

Run configurations are JSON documents (see docs/run_config.md). Every
artifact a command writes echoes its configuration for provenance. With
``--threads 1`` (the default) runs are fully deterministic.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import reports
from .backends import make_backend
from .checkpoints import (
    build_policy,
    checkpoint_from_hanabi,
    checkpoint_from_say_select,
    load_checkpoint,
    save_checkpoint,
    say_select_pair,
)
from .core import env_config_from_json
from .errors import ConfigError
from .evaluation import (
    adaptation_sweep,
    bob_policy_grid,
    card_knowledge_report,
    conditional_action_matrix,
    crossplay_eval,
    hint_type_ratio,
    noise_sweep,
    selfplay_eval,
    selfplay_eval_pair,
)
from .fast_say_select import train_say_select_fast
from .hanabi import HanabiConfig
from .policies import HanabiPriorView, adapt_policy
from .prior import (
    PriorIndex,
    build_prior_table,
    corrupt_prior,
    load_prior_cache,
    prior_accuracy,
    save_prior_cache,
)
from .qlearn import TrainConfig, train_hanabi
from .schedules import LambdaSchedule, constant


def load_run_config(path: str) -> TrainConfig:
    with open(path) as fh:
        doc = json.load(fh)
    return run_config_from_json(doc)


def run_config_from_json(doc: dict) -> TrainConfig:
    env = env_config_from_json(doc["env"])
    prior = None
    if doc.get("instruction"):
        backend_spec = doc.get("backend", "oracle_color")
        backend = make_backend(backend_spec) if isinstance(backend_spec, str) \
            else make_backend(**backend_spec)
        variant = env.variant if env.env_id == "hanabi" else None
        prior = build_prior_table(env.env_id, doc["instruction"], backend,
                                  beta=float(doc.get("beta", 1.0)), config=variant,
                                  cache_path=doc.get("prior_cache"))
        noise = doc.get("noise")
        if noise:
            prior = corrupt_prior(prior, float(noise["ratio"]), int(noise.get("seed", 0)))
    lam_doc = doc.get("lam", {"kind": "constant", "initial": 0.0})
    if isinstance(lam_doc, (int, float)):
        lam = constant(float(lam_doc))
    else:
        lam = LambdaSchedule.from_json(lam_doc)
    fields = dict(
        env=env,
        seed=int(doc.get("seed", 0)),
        learner=doc.get("learner", "tabular_q"),
        updates=int(doc.get("updates", 400)),
        lam=lam,
        prior=prior,
    )
    for key in ("batch_episodes", "updates", "min_replay", "train_batch", "grad_steps",
                "target_period", "ppo_epochs", "checkpoint_period"):
        if key in doc:
            fields[key] = int(doc[key])
    for key in ("epsilon", "lr", "beta", "clip_ratio", "value_coef", "grad_clip",
                "table_init_sigma"):
        if key in doc:
            fields[key] = float(doc[key])
    if "hidden" in doc:
        fields["hidden"] = tuple(int(h) for h in doc["hidden"])
    return TrainConfig(**fields)


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or "runs/latest"
    os.makedirs(out, exist_ok=True)
    method_id = args.method_id or f"{cfg.learner}-seed{cfg.seed}"
    if cfg.env.env_id == "say_select":
        result = train_say_select_fast(cfg)
        ckpt = checkpoint_from_say_select(result, method_id)
    else:
        result = train_hanabi(cfg)
        ckpt = checkpoint_from_hanabi(result, method_id)
    ckpt_path = os.path.join(out, f"{method_id}.ckpt.json")
    save_checkpoint(ckpt, ckpt_path)
    reports.write_training_curve(result.curve, os.path.join(out, f"{method_id}_curve.csv"))
    print(f"checkpoint: {ckpt_path}")
    print(f"final: {result.curve[-1]}")
    return 0


def _policy_for(path: str, lam: float | None = None):
    ckpt = load_checkpoint(path)
    if ckpt.kind == "say_select_tabular":
        return ckpt, say_select_pair(ckpt, lam=lam)
    return ckpt, build_policy(ckpt, lam=lam)


def cmd_eval(args) -> int:
    if args.intra_axp:
        return _intra_axp(args)
    if not args.checkpoint:
        raise ConfigError("eval needs --checkpoint (or --intra-axp)")
    ckpt, policy = _policy_for(args.checkpoint, lam=args.lam)
    out = args.out or "reports"
    if ckpt.kind == "say_select_tabular":
        report = selfplay_eval_pair(policy, ckpt.env, args.games, args.seed,
                                    method_id=ckpt.method_id or "say_select")
    elif args.partner:
        _, partner = _policy_for(args.partner)
        report = crossplay_eval(policy, partner, ckpt.env, args.games, args.seed,
                                method_id="crossplay", threads=args.threads)
    else:
        report = selfplay_eval(policy, ckpt.env, args.games, args.seed,
                               method_id=ckpt.method_id or "selfplay", threads=args.threads)
    path = os.path.join(out, f"{report.method_id}_eval.csv")
    reports.write_eval_report(report, path)
    print(f"{report.method_id}: {report.mean_score:.3f} +- {report.stderr:.3f} "
          f"(lost {report.games_lost}/{report.n_games}) -> {path}")
    return 0


def _intra_axp(args) -> int:
    """Pairwise cross-play over same-method seeds plus the aggregate."""
    import itertools
    import math

    paths = args.intra_axp.split(",")
    if len(paths) < 2:
        raise ConfigError("--intra-axp needs at least two checkpoints")
    loaded = [_policy_for(p) for p in paths]
    env = loaded[0][0].env
    out = args.out or "reports"
    pair_reports = []
    for (i, (_, a)), (j, (_, b)) in itertools.combinations(enumerate(loaded), 2):
        rep = crossplay_eval(a, b, env, args.games, args.seed,
                             method_id=f"axp_{i}x{j}", threads=args.threads)
        reports.write_eval_report(rep, os.path.join(out, f"{rep.method_id}_eval.csv"))
        pair_reports.append(rep)
        print(f"{rep.method_id}: {rep.mean_score:.3f} +- {rep.stderr:.3f}")
    mean = sum(r.mean_score for r in pair_reports) / len(pair_reports)
    stderr = math.sqrt(sum(r.stderr**2 for r in pair_reports)) / len(pair_reports)
    reports.write_csv(os.path.join(out, "axp_aggregate.csv"),
                      ["n_pairs", "mean_score", "stderr"],
                      [[len(pair_reports), f"{mean:.6f}", f"{stderr:.6f}"]])
    print(f"intra-AXP aggregate over {len(pair_reports)} pairs: {mean:.3f} +- {stderr:.3f}")
    return 0


def cmd_analyze(args) -> int:
    ckpt, policy = _policy_for(args.checkpoint)
    out = args.out or "reports"
    os.makedirs(out, exist_ok=True)
    for analysis in args.analyses.split(","):
        if analysis == "action_matrix":
            matrix = conditional_action_matrix(policy, ckpt.env, args.games, args.seed)
            reports.write_action_matrix(matrix, os.path.join(out, "action_matrix.csv"),
                                        title=ckpt.method_id)
            reports.write_action_matrix(matrix.reduced(),
                                        os.path.join(out, "action_matrix_reduced.csv"),
                                        title=f"{ckpt.method_id} (hints vs plays)")
            print(f"action_matrix: color-hint share {hint_type_ratio(matrix):.3f}")
        elif analysis == "knowledge":
            fractions = card_knowledge_report(policy, ckpt.env, args.games, args.seed)
            reports.write_knowledge_report(fractions, os.path.join(out, "card_knowledge.csv"))
            print(f"knowledge: {fractions}")
        elif analysis == "grid":
            if ckpt.kind != "say_select_tabular":
                raise ConfigError("grid analysis needs a Say-Select checkpoint")
            prior_index = PriorIndex(ckpt.prior, beta=ckpt.beta) if ckpt.prior else None
            grid = bob_policy_grid(ckpt.arrays["bob_q"], ckpt.lam_final, prior_index)
            reports.write_policy_grid(grid, os.path.join(out, "bob_grid.csv"))
            print("grid written")
        else:
            raise ConfigError(f"unknown analysis {analysis!r}")
    return 0


def cmd_prior_build(args) -> int:
    backend = make_backend(args.backend)
    config = HanabiConfig.mini() if args.mini else HanabiConfig()
    table = build_prior_table(args.env, args.instruction, backend, beta=args.beta,
                              config=config if args.env == "hanabi" else None,
                              cache_path=args.out)
    if args.noise:
        table = corrupt_prior(table, args.noise, args.noise_seed)
        save_prior_cache(table, args.out)
    else:
        save_prior_cache(table, args.out)
    print(f"{len(table.entries)} entries -> {args.out}")
    return 0


def cmd_prior_audit(args) -> int:
    table = load_prior_cache(args.table)
    reference_backend = make_backend(args.reference)
    config = HanabiConfig.mini() if args.mini else HanabiConfig()
    reference = build_prior_table(table.env_id, table.instruction.id, reference_backend,
                                  beta=table.beta,
                                  config=config if table.env_id == "hanabi" else None)
    accuracy = prior_accuracy(table, reference)
    mistakes = round((1 - accuracy) * len(table.entries))
    print(f"accuracy vs {args.reference}: {accuracy:.6f} ({mistakes} mismatches "
          f"out of {len(table.entries)})")
    return 0


def cmd_sweep(args) -> int:
    out = args.out or "reports"
    os.makedirs(out, exist_ok=True)
    base = load_run_config(args.config)
    if args.kind == "noise":
        ratios = [float(x) for x in args.grid.split(",")]
        clean_ckpt, clean_policy = _policy_for(args.clean_checkpoint)

        def train_with_noise(x):
            cfg = load_run_config(args.config)
            if x:
                cfg.prior = corrupt_prior(cfg.prior, x, args.noise_seed)
            result = train_hanabi(cfg)
            return build_policy(checkpoint_from_hanabi(result, f"noise{x}"))

        points = noise_sweep(train_with_noise, clean_policy, ratios, base.env,
                             args.games, args.seed)
        reports.write_sweep(points, os.path.join(out, "noise_sweep.csv"), "noise ratio")
    elif args.kind == "adaptation":
        lam_grid = [float(x) for x in args.grid.split(",")]
        base_ckpt, base_pol = _policy_for(args.base_checkpoint, lam=0.0)
        prior = load_prior_cache(args.prior_cache)
        prior_view = HanabiPriorView(PriorIndex(prior), base_ckpt.env.variant)
        partner = None
        if args.partner:
            _, partner = _policy_for(args.partner)

        def at_lam(lam):
            return adapt_policy(base_pol, prior_view, lam)

        points = adaptation_sweep(at_lam, lam_grid, base_ckpt.env, args.games, args.seed,
                                  partner_policy=partner)
        reports.write_sweep(points, os.path.join(out, "adaptation_sweep.csv"),
                            "regularization weight",
                            extra_series=("cross_mean", "cross_stderr") if partner else ())
    else:
        raise ConfigError(f"unknown sweep kind {args.kind!r}")
    print(f"sweep written to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(agents_dir=args.agents, results_path=args.results)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="instructrl",
                                     description="Instruction-regularized RL workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train from a JSON run config")
    train.add_argument("--config", required=True)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--out", default=None)
    train.add_argument("--method-id", default=None)
    train.add_argument("--threads", type=int, default=1)
    train.set_defaults(fn=cmd_train)

    ev = sub.add_parser("eval", help="self-play or cross-play evaluation")
    ev.add_argument("--checkpoint", required=False, default=None)
    ev.add_argument("--partner", default=None)
    ev.add_argument("--intra-axp", default=None,
                    help="comma-separated same-method checkpoints: pairwise reports + aggregate")
    ev.add_argument("--games", type=int, default=1000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", default=None)
    ev.add_argument("--lam", type=float, default=None,
                    help="override the folded regularization weight (0 = pure-Q acting)")
    ev.add_argument("--threads", type=int, default=1)
    ev.set_defaults(fn=cmd_eval)

    an = sub.add_parser("analyze", help="action matrices, knowledge reports, grids")
    an.add_argument("--checkpoint", required=True)
    an.add_argument("--analyses", default="action_matrix")
    an.add_argument("--games", type=int, default=1000)
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--out", default=None)
    an.add_argument("--threads", type=int, default=1)
    an.set_defaults(fn=cmd_analyze)

    prior = sub.add_parser("prior", help="prior table workflows")
    prior_sub = prior.add_subparsers(dest="prior_command", required=True)
    pb = prior_sub.add_parser("build", help="build and cache a prior table")
    pb.add_argument("--env", choices=["hanabi", "say_select"], default="hanabi")
    pb.add_argument("--instruction", default="hanabi_color")
    pb.add_argument("--backend", default="oracle_color")
    pb.add_argument("--beta", type=float, default=1.0)
    pb.add_argument("--mini", action="store_true")
    pb.add_argument("--noise", type=float, default=0.0)
    pb.add_argument("--noise-seed", type=int, default=0)
    pb.add_argument("--out", required=True)
    pb.set_defaults(fn=cmd_prior_build)
    pa = prior_sub.add_parser("audit", help="compare a cached table to a reference backend")
    pa.add_argument("--table", required=True)
    pa.add_argument("--reference", default="oracle_color")
    pa.add_argument("--mini", action="store_true")
    pa.set_defaults(fn=cmd_prior_audit)

    sw = sub.add_parser("sweep", help="noise or adaptation sweeps")
    sw.add_argument("kind", choices=["noise", "adaptation"])
    sw.add_argument("--config", required=True)
    sw.add_argument("--grid", required=True)
    sw.add_argument("--games", type=int, default=500)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--noise-seed", type=int, default=0)
    sw.add_argument("--clean-checkpoint", default=None)
    sw.add_argument("--base-checkpoint", default=None)
    sw.add_argument("--partner", default=None)
    sw.add_argument("--prior-cache", default=None)
    sw.add_argument("--out", default=None)
    sw.add_argument("--threads", type=int, default=1)
    sw.set_defaults(fn=cmd_sweep)

    serve = sub.add_parser("serve", help="HTTP session service for live play")
    serve.add_argument("--agents", required=True, help="directory of checkpoint files")
    serve.add_argument("--results", default="results.jsonl")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8071)
    serve.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
