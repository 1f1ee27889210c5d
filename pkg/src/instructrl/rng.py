"""Seeded random-number streams.

All randomness in the package flows through Philox, a counter-based
generator with a platform-independent bit stream, keyed through numpy's
``SeedSequence``. A stream is identified by ``(seed, *stream)`` so that
independent consumers (environment deals, per-player policies, evaluation
games, training loops) never share draws. Stream ids are listed below and
are part of the reproducibility contract: replaying with the same seed and
stream ids reproduces every draw bit-exactly.

Documented draw orders (consumed from the named stream, in order):

* Say-Select reset: 1) number of +1 balls, 2) one permutation of the five
  ball slots (the first k slots receive +1).
* Hanabi reset: one permutation of the canonically ordered deck, dealt
  alternately starting with player 0.
* epsilon-greedy acting: 1) the explore/exploit uniform draw, 2) if
  exploring, one integer draw over the legal actions.
"""

from __future__ import annotations

import numpy as np

# Stream ids (second element of the spawn key).
STREAM_ENV = 0        # environment reset draws
STREAM_POLICY = 1     # per-player policy draws; spawn key adds the player id
STREAM_EVAL = 2       # per-game evaluation seeds
STREAM_TRAIN = 3      # training-loop draws (episode scheduling etc.)
STREAM_INIT = 4       # network parameter initialization
STREAM_CORRUPT = 5    # prior-table noise injection


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox generator for the given seed and stream key."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, *stream: int) -> int:
    """Derive a stable 63-bit sub-seed (e.g. one seed per evaluation game)."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
