#!/usr/bin/env python3
"""Regenerate the bundled mini-corpus fixture.

The corpus is a hand-designed 50-event, 8-agent, 12-day email log
(2001-03-05 Monday .. 2001-03-16 Friday, UTC): a 4-day history segment
followed by an 8-day simulation segment. Agent `alice` is the hub (strictly
highest history degree). The companion manifest records hand-counted facts
used as test oracles; regenerate only if you also re-verify those counts.
"""

import json
from pathlib import Path

BASE = 983750400  # 2001-03-05 00:00:00 UTC, a Monday


def ts(day, hour, minute=0):
    return BASE + day * 86400 + hour * 3600 + minute * 60


# (id, sender, recipients, day, hour, minute, thread)
ROWS = [
    # history: days 0-3 (Mon-Thu)
    (1, "alice", ["bob"], 0, 9, 0, 1),
    (2, "bob", ["alice"], 0, 9, 30, 1),
    (3, "alice", ["carol"], 0, 10, 0, 3),
    (4, "carol", ["alice"], 0, 11, 0, 3),
    (5, "alice", ["dave", "erin"], 0, 14, 0, 5),
    (6, "dave", ["alice"], 1, 9, 15, 5),
    (7, "erin", ["alice"], 1, 10, 0, 5),
    (8, "bob", ["carol"], 1, 11, 30, 8),
    (9, "carol", ["bob"], 1, 13, 0, 8),
    (10, "alice", ["frank"], 1, 15, 0, 10),
    (11, "frank", ["alice"], 2, 9, 0, 10),
    (12, "grace", ["heidi"], 2, 10, 30, 12),
    (13, "heidi", ["grace"], 2, 11, 0, 12),
    (14, "alice", ["bob"], 2, 14, 0, 14),
    (15, "bob", ["alice"], 2, 16, 0, 14),
    (16, "alice", ["grace"], 3, 9, 45, 16),
    (17, "grace", ["alice"], 3, 10, 15, 16),
    (18, "dave", ["erin"], 3, 11, 0, 18),
    (19, "erin", ["dave"], 3, 13, 30, 18),
    (20, "alice", ["heidi"], 3, 15, 0, 20),
    # simulation segment: days 4-11 (Fri .. next Fri)
    (21, "alice", ["bob"], 4, 9, 0, 21),
    (22, "bob", ["alice"], 4, 10, 30, 21),
    (23, "carol", ["dave"], 4, 11, 0, 23),
    (24, "dave", ["carol"], 4, 13, 0, 23),
    (25, "alice", ["erin"], 4, 15, 0, 25),
    (26, "erin", ["alice"], 5, 10, 0, 25),
    (27, "grace", ["bob"], 5, 14, 0, 27),
    (28, "alice", ["carol"], 6, 11, 0, 28),
    (29, "carol", ["alice"], 6, 12, 30, 28),
    (30, "alice", ["dave"], 7, 9, 0, 30),
    (31, "dave", ["alice"], 7, 9, 45, 30),
    (32, "bob", ["carol"], 7, 10, 15, 32),
    (33, "frank", ["alice"], 7, 11, 0, 33),
    (34, "alice", ["frank"], 7, 14, 0, 33),
    (35, "alice", ["grace"], 8, 9, 30, 35),
    (36, "grace", ["alice"], 8, 10, 0, 35),
    (37, "heidi", ["grace"], 8, 11, 30, 37),
    (38, "erin", ["dave"], 8, 15, 0, 38),
    (39, "bob", ["alice"], 9, 9, 15, 39),
    (40, "carol", ["bob"], 9, 10, 45, 40),
    (41, "dave", ["erin"], 9, 13, 0, 41),
    (42, "alice", ["heidi"], 10, 9, 0, 42),
    (43, "heidi", ["alice"], 10, 10, 0, 42),
    (44, "alice", ["bob", "carol"], 10, 14, 0, 44),
    (45, "frank", ["grace"], 10, 16, 0, 45),
    (46, "alice", ["bob"], 11, 9, 30, 46),
    (47, "bob", ["alice"], 11, 10, 0, 46),
    (48, "grace", ["heidi"], 11, 11, 0, 48),
    (49, "erin", ["alice"], 11, 13, 0, 49),
    (50, "alice", ["erin"], 11, 16, 0, 50),
]

# Hand-counted oracle facts about the rows above.
MANIFEST = {
    "base_ts": BASE,
    "n_agents": 8,
    "agents": ["alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"],
    "total_events": 50,
    "total_edges": 52,  # two events have two recipients
    "history_window": [BASE, BASE + 4 * 86400],
    "sim_window": [BASE + 4 * 86400, BASE + 12 * 86400],
    "history_events": 20,
    "sim_events": 30,
    "events_per_day": [5, 5, 5, 5, 5, 2, 2, 5, 4, 3, 4, 5],
    "history_degree": {  # simple digraph in+out degree over days 0-3
        "alice": 13, "bob": 4, "carol": 4, "dave": 4,
        "erin": 4, "frank": 2, "grace": 4, "heidi": 3,
    },
    "triggers_ratio_0.125": ["alice"],
    "triggers_ratio_0.25": ["alice", "bob"],
    "alice_sim_send_days": [4, 6, 7, 8, 10, 11],
    "weekend_events": 4,  # days 5 and 6
}


def main():
    data_dir = Path(__file__).resolve().parent.parent / "tests" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for event_id, sender, recipients, day, hour, minute, thread in ROWS:
        rec = {"id": event_id, "sender": sender, "recipients": recipients,
               "ts": ts(day, hour, minute), "thread": thread, "body": None}
        lines.append(json.dumps(rec, separators=(",", ":")))
    (data_dir / "mini_corpus.jsonl").write_text("\n".join(lines) + "\n")
    (data_dir / "mini_corpus_manifest.json").write_text(
        json.dumps(MANIFEST, indent=2) + "\n")
    print(f"wrote {len(ROWS)} events to {data_dir}")


if __name__ == "__main__":
    main()
