"""Quantitative analyses: score reports, cross-play, action matrices,
card-knowledge-at-play, Bob policy grids, and the noise/adaptation sweeps.

All evaluations act greedily (no exploration), derive one sub-seed per game
from the evaluation seed, and are deterministic given that seed. Games can
be spread over worker processes; aggregation keeps the per-game seed order,
so results are identical at any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import EnvConfig, EpisodeTrace, make_env, run_episode
from .errors import ConfigError
from .hanabi import HanabiAction, HanabiConfig, knowledge_class_from_observation
from .prior import PriorIndex
from .rng import STREAM_EVAL, derive_seed, make_rng
from .say_select import BobObservation

KNOWLEDGE_CLASSES = ("only_color", "only_rank", "both", "none")


@dataclass
class EvalReport:
    method_id: str
    env: EnvConfig
    n_games: int
    mean_score: float
    stderr: float
    scores: tuple[float, ...]
    games_lost: int
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .core import env_config_to_json

        return {
            "method_id": self.method_id,
            "env": env_config_to_json(self.env),
            "n_games": self.n_games,
            "mean_score": self.mean_score,
            "stderr": self.stderr,
            "games_lost": self.games_lost,
            "scores": list(self.scores),
            "meta": self.meta,
        }


def _score_of(trace: EpisodeTrace) -> float:
    if "score" in trace.terminal_info:
        return float(trace.terminal_info["score"])
    return float(trace.undiscounted_return)


def _lost(trace: EpisodeTrace) -> bool:
    return bool(trace.terminal_info.get("bombed", False))


def _report(method_id, env_config, scores, losses, meta=None) -> EvalReport:
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    stderr = float(np.std(scores, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return EvalReport(
        method_id=method_id,
        env=env_config,
        n_games=n,
        mean_score=float(scores.mean()),
        stderr=stderr,
        scores=tuple(float(s) for s in scores),
        games_lost=int(sum(losses)),
        meta=meta or {},
    )


def _play_block(args):
    env_config, policies, game_seeds, swap_mask = args
    env = make_env(env_config)
    scores, losses = [], []
    for gs, swap in zip(game_seeds, swap_mask):
        pair = (policies[1], policies[0]) if swap else policies
        trace = run_episode(env, pair, gs, record_prior=False)
        scores.append(_score_of(trace))
        losses.append(_lost(trace))
    return scores, losses


def _run_games(env_config, policies, n_games, seed, swap_seats, threads=1):
    game_seeds = [derive_seed(seed, STREAM_EVAL, i) for i in range(n_games)]
    if swap_seats:
        seat_rng = make_rng(seed, STREAM_EVAL, n_games)
        swap_mask = seat_rng.random(n_games) < 0.5
    else:
        swap_mask = np.zeros(n_games, dtype=bool)
    if threads <= 1:
        return _play_block((env_config, policies, game_seeds, swap_mask))
    chunks = np.array_split(np.arange(n_games), threads)
    jobs = [(env_config, policies, [game_seeds[i] for i in c], swap_mask[c]) for c in chunks if len(c)]
    scores, losses = [], []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for s, l in pool.map(_play_block, jobs):
            scores.extend(s)
            losses.extend(l)
    return scores, losses


def selfplay_eval(policy, env_config: EnvConfig, n_games: int, seed: int,
                  method_id: str = "policy", threads: int = 1) -> EvalReport:
    """Mean score plus standard error over seeded self-play games."""
    scores, losses = _run_games(env_config, (policy, policy), n_games, seed, swap_seats=False,
                                threads=threads)
    return _report(method_id, env_config, scores, losses)


def selfplay_eval_pair(policies, env_config: EnvConfig, n_games: int, seed: int,
                       method_id: str = "pair", threads: int = 1) -> EvalReport:
    """Self-play for role-asymmetric games (Say-Select's Alice/Bob pair)."""
    scores, losses = _run_games(env_config, tuple(policies), n_games, seed, swap_seats=False,
                                threads=threads)
    return _report(method_id, env_config, scores, losses)


def crossplay_eval(policy_a, policy_b, env_config: EnvConfig, n_games: int, seed: int,
                   method_id: str = "crossplay", threads: int = 1) -> EvalReport:
    """Pair two policies; seat order is randomized per game from the seed."""
    scores, losses = _run_games(env_config, (policy_a, policy_b), n_games, seed, swap_seats=True,
                                threads=threads)
    return _report(method_id, env_config, scores, losses)


# -- conditional action matrix ---------------------------------------------------------


@dataclass
class ActionMatrix:
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    matrix: np.ndarray           # normalized so all entries sum to 1
    counts: np.ndarray

    def reduced(self) -> "ActionMatrix":
        """Hint-action rows against play-action columns (the headline view)."""
        rows = [i for i, l in enumerate(self.row_labels) if l.startswith(("C", "R"))]
        cols = [j for j, l in enumerate(self.col_labels) if l.startswith("P")]
        sub = self.counts[np.ix_(rows, cols)]
        total = sub.sum()
        return ActionMatrix(
            tuple(self.row_labels[i] for i in rows),
            tuple(self.col_labels[j] for j in cols),
            sub / total if total else sub.astype(float),
            sub,
        )


def hanabi_action_category(rules: HanabiConfig, action: HanabiAction) -> str:
    from .hanabi import COLOR_NAMES

    if action.kind == "play":
        return f"P{action.value + 1}"
    if action.kind == "discard":
        return f"D{action.value + 1}"
    if action.kind == "hint_color":
        return f"C{COLOR_NAMES[action.value][0]}"
    return f"R{action.value}"


def hanabi_action_categories(rules: HanabiConfig) -> list[str]:
    from .hanabi import COLOR_NAMES

    return (
        [f"C{COLOR_NAMES[c][0]}" for c in range(rules.num_colors)]
        + [f"R{r}" for r in range(1, rules.num_ranks + 1)]
        + [f"P{p + 1}" for p in range(rules.hand_size)]
        + [f"D{p + 1}" for p in range(rules.hand_size)]
    )


def conditional_action_matrix(policy, env_config: EnvConfig, n_games: int = 1000,
                              seed: int = 0, method_id: str = "policy") -> ActionMatrix:
    """Counts of consecutive action pairs (partner's move, actor's reply) over
    self-play games, normalized over the whole matrix."""
    if env_config.env_id != "hanabi":
        raise ConfigError("action matrices are a Hanabi analysis")
    env = make_env(env_config)
    rules = env.rules
    labels = hanabi_action_categories(rules)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)))
    for g in range(n_games):
        trace = run_episode(env, (policy, policy), derive_seed(seed, STREAM_EVAL, g),
                            record_prior=False)
        cats = [hanabi_action_category(rules, rec.action) for rec in trace.steps]
        for a, b in zip(cats, cats[1:]):
            counts[index[a], index[b]] += 1
    total = counts.sum()
    matrix = counts / total if total else counts.astype(float)
    return ActionMatrix(tuple(labels), tuple(labels), matrix, counts)


def hint_type_ratio(matrix: ActionMatrix) -> float:
    """color hints / (color + rank hints), from the row marginals."""
    color = sum(matrix.counts[i].sum() for i, l in enumerate(matrix.row_labels) if l.startswith("C"))
    rank = sum(matrix.counts[i].sum() for i, l in enumerate(matrix.row_labels) if l.startswith("R"))
    if color + rank == 0:
        return float("nan")
    return float(color / (color + rank))


def hint_type_ratio_from_traces(rules: HanabiConfig, traces) -> float:
    """Direct count over traces; skips each trace's final step so the tally
    matches the action matrix's row marginals exactly."""
    color = rank = 0
    for trace in traces:
        for rec in trace.steps[:-1]:
            if rec.action.kind == "hint_color":
                color += 1
            elif rec.action.kind == "hint_rank":
                rank += 1
    if color + rank == 0:
        return float("nan")
    return color / (color + rank)


# -- card knowledge at play --------------------------------------------------------------


def card_knowledge_report(policy, env_config: EnvConfig, n_games: int, seed: int) -> dict[str, float]:
    """How much the actor knew about each card at the moment it was played."""
    if env_config.env_id != "hanabi":
        raise ConfigError("card-knowledge reports are a Hanabi analysis")
    env = make_env(env_config)
    rules = env.rules
    counts = dict.fromkeys(KNOWLEDGE_CLASSES, 0)
    total = 0
    for g in range(n_games):
        trace = run_episode(env, (policy, policy), derive_seed(seed, STREAM_EVAL, g),
                            record_prior=False)
        for rec in trace.steps:
            if rec.action.kind == "play":
                cls = knowledge_class_from_observation(rules, rec.observation, rec.action.value)
                counts[cls] += 1
                total += 1
    if total == 0:
        return dict.fromkeys(KNOWLEDGE_CLASSES, 0.0)
    return {k: v / total for k, v in counts.items()}


# -- Bob policy grid -----------------------------------------------------------------------


def bob_policy_grid(bob_q: np.ndarray, lam: float = 0.0,
                    prior_index: PriorIndex | None = None) -> np.ndarray:
    """6x6 grid of Bob's greedy regularized action over (two announcements ago,
    previous announcement); 0 encodes quit. Rows/columns use 0 for "none"."""
    action_texts = tuple(str(a) for a in range(6))
    grid = np.zeros((6, 6), dtype=int)
    for a2 in range(6):
        for a1 in range(6):
            row = bob_q[BobObservation(a2, a1).key()]
            if lam != 0.0 and prior_index is not None and a1 != 0:
                scores = row + lam * prior_index.log_probs(str(a1), action_texts)
            else:
                scores = row
            grid[a2, a1] = int(np.argmax(scores))
    return grid


def grid_matches_intuitive(grid: np.ndarray) -> bool:
    """Diagonal quits, every other reachable cell picks the latest announcement.

    Reachable cells have a previous announcement (column > 0); the column-0
    cells never occur because Bob only moves after Alice.
    """
    for a2 in range(6):
        for a1 in range(1, 6):
            want = 0 if a2 == a1 else a1
            if grid[a2, a1] != want:
                return False
    return True


def render_grid_text(grid: np.ndarray) -> str:
    labels = ["-", "1", "2", "3", "4", "5"]
    cell = {0: "Q", **{i: str(i) for i in range(1, 6)}}
    lines = ["      " + "  ".join(f"a1={l}" for l in labels)]
    for a2 in range(6):
        lines.append(f"a2={labels[a2]}  " + "    ".join(cell[int(grid[a2, a1])] for a1 in range(6)))
    return "\n".join(lines)


# -- sweeps ---------------------------------------------------------------------------------


@dataclass
class SweepPoint:
    x: float
    mean_score: float
    stderr: float
    extra: dict = field(default_factory=dict)


def noise_sweep(train_fn, clean_policy, noise_ratios, env_config: EnvConfig,
                n_games: int, seed: int) -> list[SweepPoint]:
    """Cross-play of noise-corrupted retrainings against a clean-prior agent.

    ``train_fn(noise_ratio) -> policy`` encapsulates corrupting the prior and
    training; this function owns the evaluation protocol.
    """
    points = []
    for x in noise_ratios:
        policy = train_fn(x)
        report = crossplay_eval(policy, clean_policy, env_config, n_games, seed,
                                method_id=f"noise={x}")
        points.append(SweepPoint(float(x), report.mean_score, report.stderr))
    return points


def adaptation_sweep(base_policy_fn, lam_grid, env_config: EnvConfig, n_games: int,
                     seed: int, partner_policy=None) -> list[SweepPoint]:
    """Self-play (and optional cross-play with a fixed partner) of a frozen Q
    policy re-read through argmax(Q + lam*log prior) at each grid point."""
    points = []
    for lam in lam_grid:
        policy = base_policy_fn(lam)
        report = selfplay_eval(policy, env_config, n_games, seed, method_id=f"lam={lam}")
        extra = {}
        if partner_policy is not None:
            cross = crossplay_eval(policy, partner_policy, env_config, n_games, seed,
                                   method_id=f"lam={lam}-cross")
            extra = {"cross_mean": cross.mean_score, "cross_stderr": cross.stderr}
        points.append(SweepPoint(float(lam), report.mean_score, report.stderr, extra))
    return points
