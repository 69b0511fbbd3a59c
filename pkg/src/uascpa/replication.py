"""Height-filter check against a full FAA Digital Obstacle File download.

    python -m uascpa.replication /path/to/DOF.DAT [--min-height-ft 50]

Prints the number of parsed and retained obstacles and their ratio, next to
the reference counts 483,279 parsed and 321,699 at least 50 ft tall.  The
national file is revised every 56 days, so a current download will not hit
those counts exactly; only the retained fraction is expected to be close.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .ingest import DofLayout, filter_obstacles, parse_dof

REFERENCE_PARSED = 483_279
REFERENCE_KEPT = 321_699
REFERENCE_RATIO = REFERENCE_KEPT / REFERENCE_PARSED
RATIO_TOLERANCE = 0.05


@dataclass(frozen=True)
class HeightFilterSummary:
    parsed: int
    rejected: int
    kept: int

    @property
    def ratio(self) -> float:
        return self.kept / self.parsed if self.parsed else float("nan")

    @property
    def within_tolerance(self) -> bool:
        return abs(self.ratio - REFERENCE_RATIO) <= RATIO_TOLERANCE


def summarize(path: str | Path, min_height_ft: float = 50.0,
              layout: DofLayout | None = None) -> HeightFilterSummary:
    res = parse_dof(Path(path).read_bytes(), layout)
    kept = filter_obstacles(res.obstacles, min_height_ft)
    return HeightFilterSummary(len(res.obstacles), len(res.rejects), len(kept))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="python -m uascpa.replication", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("dof_path")
    p.add_argument("--min-height-ft", type=float, default=50.0)
    p.add_argument("--layout", help="JSON column layout overriding the shipped one")
    args = p.parse_args(argv)
    layout = DofLayout.load(args.layout) if args.layout else None
    s = summarize(args.dof_path, args.min_height_ft, layout)
    print(f"parsed    {s.parsed:>9,d}   (reference {REFERENCE_PARSED:,d})")
    print(f"rejected  {s.rejected:>9,d}")
    print(f"kept      {s.kept:>9,d}   (reference {REFERENCE_KEPT:,d})")
    print(f"ratio     {s.ratio:9.4f}   (reference {REFERENCE_RATIO:.4f}, tolerance "
          f"+/-{RATIO_TOLERANCE:.2f})")
    return 0 if s.within_tolerance else 1


if __name__ == "__main__":
    sys.exit(main())
