"""Regenerate the bundled synthetic benchmark and its oracle transcripts."""

import argparse
from pathlib import Path

from premiseguard.synthetic import write_bundle

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "premiseguard" / "data" / "synthetic"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    write_bundle(args.out, args.seed)
    print(f"wrote {args.out}")
