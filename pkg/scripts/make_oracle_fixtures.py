"""Regenerate tests/fixtures/oracle_small.csv: exact optima of small seeded instances."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from conftest import tiny_instance  # noqa: E402
from edgecast.oracle import enumerate_optimal, write_fixtures  # noqa: E402
from edgecast.sampling import draw_samples  # noqa: E402

SEEDS = range(8)


def main() -> None:
    rows = []
    for seed in SEEDS:
        inst = tiny_instance(seed)
        rows.append((inst, "exact", enumerate_optimal(inst)))
        rows.append((inst, "saa16", enumerate_optimal(inst, draw_samples(inst, 16, seed))))
    out = ROOT / "tests" / "fixtures" / "oracle_small.csv"
    out.parent.mkdir(exist_ok=True)
    write_fixtures(out, rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
