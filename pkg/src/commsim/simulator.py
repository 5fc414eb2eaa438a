"""Chronological event-queue simulation of agent mailbox activity.

A priority queue interleaves ground-truth trigger injections with agent
wakes. On wake an agent receives its context (pre-simulation history,
simulated traffic, unread mail), returns reply/initiate actions plus a next
check time, and its organic events are appended at the wake timestamp.
Trigger agents never wake; their ground-truth events are injected verbatim.

Queue ties at equal timestamps resolve deterministically: trigger
injections first (by event id), then wakes by agent index. The loop is
single-threaded; all randomness flows from named sub-streams of the run
seed, so a (seed, inputs) pair reproduces byte-identical output.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import hawkes, timeutil
from .corpus import Event, EventLog, ORGANIC, TRIGGER, window as log_window, simple_digraph_edges
from .rng import substream

MIN_CLAMP_SECONDS = 60


class SimulationError(ValueError):
    pass


class SimulationAborted(RuntimeError):
    """Agent policy failed after retries; carries the partial log."""

    def __init__(self, message: str, partial_log: EventLog):
        super().__init__(message)
        self.partial_log = partial_log


# ---------------------------------------------------------------------------
# activation policies


@dataclass(frozen=True)
class PeriodicSchedule:
    """Wake every fixed interval."""
    interval_hours: float = 3.0

    def __post_init__(self):
        if self.interval_hours <= 0:
            raise SimulationError("interval must be positive")


@dataclass(frozen=True)
class LLMPredicted:
    """The agent's own next_check decides the next wake."""


@dataclass(frozen=True)
class EmpiricalHoD:
    """Sample the wake hour from each agent's historical hour-of-day
    histogram, uniform offset within the hour."""
    histograms: np.ndarray  # (D, 24), rows normalized (all-zero rows allowed)

    def __post_init__(self):
        h = self.histograms
        if h.ndim != 2 or h.shape[1] != 24 or np.any(h < 0):
            raise SimulationError("histograms must be a nonnegative (D, 24) array")
        sums = h.sum(axis=1)
        if np.any((np.abs(sums - 1.0) > 1e-9) & (sums != 0)):
            raise SimulationError("histogram rows must be normalized (or all-zero)")


@dataclass(frozen=True)
class HawkesGuided:
    model: hawkes.HawkesModel


ActivationPolicy = PeriodicSchedule | LLMPredicted | EmpiricalHoD | HawkesGuided


def hod_histograms(log: EventLog) -> np.ndarray:
    """Per-agent hour-of-day send histograms, row-normalized."""
    h = np.zeros((log.n_agents, 24))
    for e in log.events:
        h[e.sender, timeutil.hour_of_day(e.ts)] += 1
    sums = h.sum(axis=1, keepdims=True)
    np.divide(h, sums, out=h, where=sums > 0)
    return h


def next_activation(policy: ActivationPolicy, agent: int, history: EventLog,
                    t_now: int, horizon: int,
                    rng: np.random.Generator) -> int | None:
    """Next wake strictly after t_now under the policy, or None if it falls
    past the horizon. LLMPredicted returns None here: the agent's own
    decision supplies the time."""
    if t_now >= horizon:
        raise SimulationError("t_now must be before horizon")
    if isinstance(policy, PeriodicSchedule):
        t = t_now + int(round(policy.interval_hours * 3600))
        return t if t < horizon else None
    if isinstance(policy, LLMPredicted):
        return None
    if isinstance(policy, EmpiricalHoD):
        probs = policy.histograms[agent]
        if probs.sum() == 0:
            probs = np.full(24, 1.0 / 24)
        hour = int(rng.choice(24, p=probs / probs.sum()))
        offset = int(rng.integers(3600))
        day = timeutil.day_index(t_now)
        t = day * 86400 + hour * 3600 + offset
        while t <= t_now:
            day += 1
            t = day * 86400 + hour * 3600 + offset
        return t if t < horizon else None
    if isinstance(policy, HawkesGuided):
        return hawkes.sample_next_activation(policy.model, agent, history,
                                             t_now, horizon, rng)
    raise SimulationError(f"unknown policy {policy!r}")


# ---------------------------------------------------------------------------
# triggers and context


@dataclass(frozen=True)
class TriggerPlan:
    trigger_agents: frozenset[int]
    scheduled_events: EventLog

    def __post_init__(self):
        for e in self.scheduled_events.events:
            if e.sender not in self.trigger_agents:
                raise SimulationError(
                    f"scheduled event {e.event_id} sent by non-trigger agent {e.sender}")


def select_triggers(log: EventLog, history_window: tuple[int, int], ratio: float,
                    sim_window: tuple[int, int]) -> TriggerPlan:
    """Designate the ceil(ratio * D) agents with highest degree centrality in
    the aggregated history-window graph as triggers (ties by ascending agent
    index); their ground-truth events inside the simulation window become the
    injection schedule."""
    if not 0 <= ratio <= 1:
        raise SimulationError(f"ratio {ratio} outside [0, 1]")
    h0, h1 = history_window
    hist = log_window(log, h0, h1)
    if not hist.events:
        raise SimulationError("empty history window")
    degree = np.zeros(log.n_agents, dtype=np.int64)
    for u, v in simple_digraph_edges(hist):
        degree[u] += 1
        degree[v] += 1
    k = math.ceil(ratio * log.n_agents)
    ranked = sorted(range(log.n_agents), key=lambda i: (-degree[i], i))
    chosen = frozenset(ranked[:k])
    s0, s1 = sim_window
    scheduled = [e for e in log.events
                 if s0 <= e.ts < s1 and e.sender in chosen]
    marked = tuple(Event(e.event_id, e.sender, e.recipients, e.ts, TRIGGER,
                         e.thread_id, e.body) for e in scheduled)
    return TriggerPlan(chosen, EventLog(log.agents, marked))


@dataclass(frozen=True)
class CadenceSummary:
    """Historical sending cadence: per-day send counts over the history
    window (active days only) and the window-wide daily mean."""
    days: tuple[tuple[int, int], ...]  # (UTC day index, count)
    mean_per_day: float


def cadence_summary(log: EventLog, agent: int, window: tuple[int, int]) -> CadenceSummary:
    t0, t1 = window
    counts: dict[int, int] = {}
    for e in log.events:
        if e.sender == agent and t0 <= e.ts < t1:
            d = timeutil.day_index(e.ts)
            counts[d] = counts.get(d, 0) + 1
    n_days = max(1, timeutil.day_index(t1 - 1) - timeutil.day_index(t0) + 1)
    return CadenceSummary(tuple(sorted(counts.items())),
                          sum(counts.values()) / n_days)


@dataclass(frozen=True)
class AgentContext:
    agent: int
    label: str
    persona: str | None
    sent_history: EventLog
    received_history: EventLog
    unread: tuple[Event, ...]
    now: int
    takeover: int            # simulation window start
    last_check: int | None
    suggested_next_check: int | None
    cadence: CadenceSummary

    def __post_init__(self):
        if any(e.ts > self.now for e in self.unread):
            raise SimulationError("unread event after now")


@dataclass(frozen=True)
class Action:
    kind: str  # "reply" | "initiate"
    recipients: tuple[int, ...]
    thread_id: int | None = None
    body: str | None = None

    def __post_init__(self):
        if self.kind not in ("reply", "initiate"):
            raise SimulationError(f"bad action kind {self.kind!r}")
        if not self.recipients:
            raise SimulationError("action with no recipients")


@dataclass(frozen=True)
class ActionDecision:
    actions: tuple[Action, ...]
    next_check: int
    next_check_clamped: bool = False
    reasoning: str | None = None

    @property
    def idle(self) -> bool:
        return not self.actions


class AgentPolicy(Protocol):
    def decide(self, ctx: AgentContext) -> ActionDecision: ...


@dataclass(frozen=True)
class SimConfig:
    window: tuple[int, int]
    history_days: int = 32
    trigger_ratio: float = 0.10
    seed: int = 42
    max_actions_per_wake: int = 5
    policy: ActivationPolicy = field(default_factory=PeriodicSchedule)
    llm_adjusts_next_check: bool = False  # let decisions override HawkesGuided wakes

    def __post_init__(self):
        t0, t1 = self.window
        if t1 <= t0:
            raise SimulationError("empty simulation window")
        if self.history_days <= 0:
            raise SimulationError("history_days must be positive")
        if not 0 <= self.trigger_ratio <= 1:
            raise SimulationError("trigger_ratio outside [0, 1]")
        if self.max_actions_per_wake <= 0:
            raise SimulationError("max_actions_per_wake must be positive")


def build_context(agent: int, history: EventLog, sim_events: list[Event],
                  config: SimConfig, t_now: int, last_check: int | None,
                  suggested_next: int | None,
                  persona: str | None = None) -> AgentContext:
    """Assemble the agent's view: ground truth from the configured history
    span before the window plus everything simulated so far; unread =
    messages addressed to the agent since its last wake."""
    t0, _ = config.window
    h0 = t0 - config.history_days * 86400
    pre = [e for e in history.events if h0 <= e.ts < t0]
    visible = pre + [e for e in sim_events if e.ts <= t_now]
    sent = [e for e in visible if e.sender == agent]
    received = [e for e in visible if agent in e.recipients and e.sender != agent]
    since = last_check if last_check is not None else t0 - 1
    unread = tuple(e for e in sim_events
                   if since < e.ts <= t_now and agent in e.recipients and e.sender != agent)
    return AgentContext(
        agent=agent,
        label=history.agents[agent],
        persona=persona,
        sent_history=history.with_events(sent),
        received_history=history.with_events(received),
        unread=unread,
        now=t_now,
        takeover=t0,
        last_check=last_check,
        suggested_next_check=suggested_next,
        cadence=cadence_summary(history, agent, (h0, t0)),
    )


# ---------------------------------------------------------------------------
# orchestration

_QK_TRIGGER = 0
_QK_WAKE = 1


def run(config: SimConfig, history: EventLog, policy_impl: AgentPolicy,
        triggers: TriggerPlan, personas: dict[int, str] | None = None,
        counters: dict | None = None) -> EventLog:
    """Execute the simulation over config.window and return the sorted log of
    injected trigger events plus generated organic events."""
    if counters is None:
        counters = {}
    counters.setdefault("wakes", 0)
    counters.setdefault("organic_events", 0)
    counters.setdefault("trigger_events", 0)
    counters.setdefault("next_check_clamps", 0)
    counters.setdefault("actions_truncated", 0)
    personas = personas or {}
    t0, t1 = config.window
    scheduled = [e for e in triggers.scheduled_events.events if t0 <= e.ts < t1]
    if any(e.sender not in triggers.trigger_agents for e in scheduled):
        raise SimulationError("trigger plan inconsistent with trigger agents")

    pre_window = [e for e in history.events if e.ts < t0]
    sim_events: list[Event] = []
    next_id = 1 + max(
        max((e.event_id for e in history.events), default=-1),
        max((e.event_id for e in scheduled), default=-1),
    )
    queue: list[tuple[int, int, int]] = []  # (ts, kind, tiebreak)

    for k, e in enumerate(scheduled):
        heapq.heappush(queue, (e.ts, _QK_TRIGGER, k))

    def excitation_log() -> EventLog:
        # pre-window ground truth plus everything simulated so far; the
        # simulation replaces in-window ground truth for non-trigger agents
        return history.with_events(pre_window + sim_events)

    wake_rng: dict[int, np.random.Generator] = {}
    last_check: dict[int, int | None] = {}
    organic_agents = [i for i in range(history.n_agents)
                      if i not in triggers.trigger_agents]
    pre_log = history.with_events(pre_window)
    for agent in organic_agents:
        wake_rng[agent] = substream(config.seed, "wake", agent)
        last_check[agent] = None
        if isinstance(config.policy, LLMPredicted):
            first = t0
        else:
            first = next_activation(config.policy, agent, pre_log, t0, t1,
                                    wake_rng[agent])
        if first is not None and first < t1:
            heapq.heappush(queue, (first, _QK_WAKE, agent))

    while queue:
        ts, kind, key = heapq.heappop(queue)
        if ts >= t1:
            break
        if kind == _QK_TRIGGER:
            sim_events.append(scheduled[key])
            counters["trigger_events"] += 1
            continue

        agent = key
        counters["wakes"] += 1
        # the model's suggestion shown to the agent; for the hour-of-day
        # policy this draw also becomes the actual next wake
        if isinstance(config.policy, LLMPredicted):
            suggested = None
        elif isinstance(config.policy, PeriodicSchedule):
            suggested = ts + int(round(config.policy.interval_hours * 3600))
        else:
            suggested = next_activation(config.policy, agent, excitation_log(),
                                        ts, t1, wake_rng[agent])

        ctx = build_context(agent, history, sim_events, config, ts,
                            last_check[agent], suggested, personas.get(agent))
        try:
            decision = policy_impl.decide(ctx)
        except Exception as exc:
            raise SimulationAborted(f"agent {agent} policy failed at {ts}: {exc}",
                                    history.with_events(sim_events)) from exc

        actions = decision.actions[:config.max_actions_per_wake]
        if len(decision.actions) > config.max_actions_per_wake:
            counters["actions_truncated"] += 1
        for action in actions:
            recipients = tuple(r for r in action.recipients if r != agent)
            if not recipients:
                continue
            sim_events.append(Event(next_id, agent, recipients, ts, ORGANIC,
                                    action.thread_id, action.body))
            next_id += 1
            counters["organic_events"] += 1
        last_check[agent] = ts

        if decision.next_check_clamped:
            counters["next_check_clamps"] += 1
        if isinstance(config.policy, LLMPredicted) or (
                config.llm_adjusts_next_check and isinstance(config.policy, HawkesGuided)):
            nxt = decision.next_check
            if nxt <= ts:
                nxt = ts + MIN_CLAMP_SECONDS
                counters["next_check_clamps"] += 1
        elif isinstance(config.policy, HawkesGuided):
            # resample after applying this wake's events so self-excitation
            # from them is felt immediately
            nxt = next_activation(config.policy, agent, excitation_log(),
                                  ts, t1, wake_rng[agent])
        else:
            nxt = suggested
        if nxt is not None and ts < nxt < t1:
            heapq.heappush(queue, (nxt, _QK_WAKE, agent))

    return history.with_events(sim_events)
