"""Record a session, replay it, get the same story.

Drives a full virtual session (dwell, transform, dwell, transform, silence,
regeneration journey) while recording the JSONL log, then replays the log
and verifies the commit-hash sequences agree byte for byte.
Output: demos/out/session.jsonl and a transcript on stdout.
"""

from pathlib import Path

from gazeforge import EngineConfig, MockBackend, SessionLog, SessionRuntime, VirtualSession, replay
from gazeforge.config import config_from_dict

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

config = config_from_dict({"render_width": 256, "render_height": 256, "seed": 2023})

# a scripted viewer: two dwells, then they walk away
events = []
for start, x, y in ((0, 0.3, 0.35), (3600, 0.72, 0.6)):
    t = start
    while t <= start + 3000:
        events.append((t, x, y, True))
        t += 33
events.append((25000, 0.0, 0.0, False))  # silence long enough for the full journey

log_path = OUT / "session.jsonl"
runtime = SessionRuntime(config, MockBackend(), log=SessionLog(str(log_path)))
VirtualSession(runtime).run(events, 25000)
runtime.close()

print(f"live session:  {len(runtime.commit_hashes)} commits, "
      f"{len(runtime.regen_hashes)} regeneration steps, final mode {runtime.state.mode}")
for i, h in enumerate(runtime.commit_hashes):
    print(f"  commit {i}: {h[:16]}")

result = replay(str(log_path), config)
print(f"replayed log:  {len(result.commit_hashes)} commits, final mode {result.final_mode}")
assert result.commit_hashes == runtime.commit_hashes, "replay diverged!"
assert result.pristine_hash == runtime.pristine_hash
print("record -> replay closure holds: identical commit hashes")

n = len(result.commit_hashes)
if result.regen_hashes[n - 1] == result.pristine_hash:
    print("regeneration journey rewound all the way to the session-start pristine image")
