"""
Unit tests for scripts/create_leaderboard_logs.py

Behaviors tested:
  - Every manifest entry gets a log the leaderboard can rank
  - Simulated logs are byte-identical across runs
  - Entries with no simulator preset fail the run without stopping the others
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "scripts"))

from create_leaderboard_logs import create_leaderboard_logs

from costnav.analysis import leaderboard, load_leaderboard_manifest
from costnav.fixtures import load_economics, load_paper_baseline
from costnav.log_model import read_log

# ─────────────────────────────────────────────────────────────────
# Helpers
# ─────────────────────────────────────────────────────────────────


def _manifest(tmp_path: Path, *policy_ids: str) -> Path:
    lines = ["policies:"]
    for policy_id in policy_ids:
        lines += [f"- policy_id: {policy_id}", f"  log: logs/{policy_id}.log"]
    path = tmp_path / "leaderboard.yml"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ─────────────────────────────────────────────────────────────────
# create_leaderboard_logs
# ─────────────────────────────────────────────────────────────────


class TestCreateLeaderboardLogs:

    def test_writes_every_manifest_log(self, tmp_path):
        """Baseline fixture plus one simulated log; the leaderboard then ranks both."""
        manifest = _manifest(tmp_path, "lb-local", "potential-field")
        assert create_leaderboard_logs(manifest, root=tmp_path, episodes=3) == 0

        assert len(read_log(tmp_path / "logs" / "lb-local.log")) == 100
        assert len(read_log(tmp_path / "logs" / "potential-field.log")) == 3

        entries = load_leaderboard_manifest(manifest, root=tmp_path)
        rows = leaderboard(entries, load_economics(), load_paper_baseline().training)
        assert {row.policy_id for row in rows} == {"lb-local", "potential-field"}

    def test_simulated_logs_are_reproducible(self, tmp_path):
        """Same seed twice → byte-identical log."""
        manifest = _manifest(tmp_path, "noisy-heading")
        log = tmp_path / "logs" / "noisy-heading.log"

        assert create_leaderboard_logs(manifest, root=tmp_path, episodes=2, seed=5) == 0
        first = log.read_bytes()
        assert create_leaderboard_logs(manifest, root=tmp_path, episodes=2, seed=5) == 0
        assert log.read_bytes() == first

    def test_unknown_policy_fails_but_writes_the_rest(self, tmp_path):
        """No preset named after the policy → exit code 1, other logs still written."""
        manifest = _manifest(tmp_path, "lb-local", "hand-tuned")
        assert create_leaderboard_logs(manifest, root=tmp_path, episodes=2) == 1
        assert (tmp_path / "logs" / "lb-local.log").exists()
        assert not (tmp_path / "logs" / "hand-tuned.log").exists()

    def test_missing_manifest(self, tmp_path):
        """Unreadable manifest → exit code 1."""
        assert create_leaderboard_logs(tmp_path / "nope.yml", root=tmp_path) == 1
