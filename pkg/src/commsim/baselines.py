"""Null-model generators.

Degree-preserving rewiring destroys temporal and higher-order structure of
an observed window while keeping, exactly, every node's in- and out-degree
(edge multiset double swaps) and the multiset of timestamps (random
permutation among edges). The result is the reference floor a simulator has
to beat.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Event, EventLog, ORGANIC, window as log_window
from .rng import substream

DEFAULT_SWAPS_PER_EDGE = 10


@dataclass(frozen=True)
class RewireConfig:
    n_swaps: int | None = None  # default 10x edge count
    seed: int = 0

    def __post_init__(self):
        if self.n_swaps is not None and self.n_swaps < 0:
            raise ValueError("n_swaps must be >= 0")


def rewire_degree_preserving(log: EventLog, window: tuple[int, int],
                             cfg: RewireConfig) -> EventLog:
    """Rewire the window's directed edge multiset by repeated double swaps
    ((a->b), (c->d)) -> ((a->d), (c->b)), rejecting swaps that would create a
    self-loop, then randomly permute the original timestamps among the edges.

    Multi-recipient events are expanded to single-recipient edges first;
    multi-edges are allowed in the result. Deterministic per seed.
    """
    t0, t1 = window
    win = log_window(log, t0, t1)
    edge_list = win.edges()
    if len(edge_list) < 2:
        if len(edge_list) == 1:
            u, v, t = edge_list[0]
            return EventLog(log.agents, (Event(0, u, (v,), t, ORGANIC),))
        raise ValueError(f"window has {len(edge_list)} edges; need at least 2")

    rng = substream(cfg.seed, "rewire")
    heads = [v for _, v, _ in edge_list]
    tails = [u for u, _, _ in edge_list]
    times = [t for _, _, t in edge_list]
    m = len(edge_list)
    n_swaps = cfg.n_swaps if cfg.n_swaps is not None else DEFAULT_SWAPS_PER_EDGE * m
    for _ in range(n_swaps):
        i = int(rng.integers(m))
        j = int(rng.integers(m))
        if i == j:
            continue
        if tails[i] == heads[j] or tails[j] == heads[i]:
            continue  # would create a self-loop
        heads[i], heads[j] = heads[j], heads[i]

    perm = rng.permutation(m)
    events = [Event(k, tails[k], (heads[k],), times[perm[k]], ORGANIC)
              for k in range(m)]
    return EventLog(log.agents, tuple(sorted(events, key=lambda e: (e.ts, e.event_id))))
