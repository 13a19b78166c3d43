"""
create_leaderboard_logs.py: write every log the leaderboard manifest points at.

The baseline entry (lb-local) gets the bundled fixture log; every other
entry whose policy_id names a simulator preset in config/scenarios.yml
is simulated on the L2 level with a fixed seed, so the output is
byte-identical from one run to the next. Afterwards
`costnav leaderboard` runs against the default manifest as is.

Run locally: python scripts/create_leaderboard_logs.py [--manifest PATH] [--episodes N] [--seed S]
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from costnav.analysis import load_leaderboard_manifest
from costnav.config import LEADERBOARD_MANIFEST_FILE
from costnav.errors import CostNavError
from costnav.fixtures import paper_evaluation_log
from costnav.log_model import write_log
from costnav.microsim import load_presets, run_batch, termination_counts

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)

BASELINE_POLICY_ID = "lb-local"
DEFAULT_LEVEL = "l2"
DEFAULT_SEED = 0
DEFAULT_EPISODES = 100


def create_leaderboard_logs(
    manifest: Path = LEADERBOARD_MANIFEST_FILE,
    root: Path | None = None,
    level: str = DEFAULT_LEVEL,
    seed: int = DEFAULT_SEED,
    episodes: int = DEFAULT_EPISODES,
    workers: int = 1,
) -> int:
    """Write one log per manifest entry; returns exit code 1 if any entry failed, 0 otherwise."""
    try:
        entries = load_leaderboard_manifest(manifest, root=root)
        presets = load_presets()
        scenario = presets.scenario(level, master_seed=seed, n_episodes=episodes)
    except (CostNavError, OSError) as e:
        logger.error(f"❌ Could not read manifest or presets: {e}")
        return 1

    failed = 0
    for entry in entries:
        if entry.policy_id != BASELINE_POLICY_ID and entry.policy_id not in presets.policies:
            logger.error(f"❌ {entry.policy_id}: no simulator preset of that name, write {entry.log} by hand")
            failed += 1
            continue

        try:
            if entry.policy_id == BASELINE_POLICY_ID:
                records = paper_evaluation_log()
            else:
                records = run_batch(scenario, presets.policy(entry.policy_id), workers, presets.robot, presets.power)
            write_log(records, entry.log)
        except (CostNavError, OSError) as e:
            logger.error(f"❌ {entry.policy_id}: {e}")
            failed += 1
            continue

        counts = termination_counts(records)
        logger.info(
            f"✅ {entry.policy_id}: {len(records)} episodes → {entry.log} "
            f"(Arrive={counts['Arrive']} Collision={counts['Collision']} Timeout={counts['Timeout']})"
        )

    if failed:
        logger.error(f"❌ {failed} of {len(entries)} leaderboard logs missing")
        return 1
    logger.info(f"✅ All {len(entries)} leaderboard logs written")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Write the logs listed in a leaderboard manifest.")
    parser.add_argument("--manifest", type=Path, default=LEADERBOARD_MANIFEST_FILE)
    parser.add_argument("--level", default=DEFAULT_LEVEL)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--episodes", type=int, default=DEFAULT_EPISODES)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    sys.exit(create_leaderboard_logs(args.manifest, None, args.level, args.seed, args.episodes, args.workers))
