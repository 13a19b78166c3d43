"""
create_baseline_log.py: write the bundled baseline as an episode log.

Creates data/logs/lb_local_baseline.log: 100 JSON-lines episodes whose
aggregate reproduces config/paper_baseline.yml (54 collisions, 43
arrivals, 3 timeouts). Used to exercise `costnav evaluate --log` and
`costnav validate` locally without running the simulator.

Run locally: python scripts/create_baseline_log.py [output_path]
"""

import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from costnav.config import DEFAULT_OUTPUT_DIR
from costnav.errors import CostNavError
from costnav.fixtures import paper_evaluation_log
from costnav.log_model import aggregate, write_log

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)

DEFAULT_LOG_PATH = DEFAULT_OUTPUT_DIR / "logs" / "lb_local_baseline.log"


def create_baseline_log(path: Path = DEFAULT_LOG_PATH) -> int:
    """Write the log; returns exit code 1 on failure, 0 otherwise."""
    try:
        records = paper_evaluation_log()
        write_log(records, path)
    except (CostNavError, OSError) as e:
        logger.error(f"❌ Could not write baseline log: {e}")
        return 1

    summary = aggregate(records)
    logger.info(f"✅ {summary.n_episodes} episodes written to {path}")
    logger.info(
        f"   collision {summary.collision_rate:.2f} | SLA {summary.sla_compliance:.2f} | "
        f"power {summary.power_mean:.1f} W"
    )
    return 0


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_LOG_PATH
    sys.exit(create_baseline_log(target))
