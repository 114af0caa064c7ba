"""Regenerate the bundled single-question case-study fixture."""

import argparse

from premiseguard.casestudy import write_fixture
from premiseguard.synthetic import bundled_path


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(bundled_path("case_study")), help="output directory")
    args = ap.parse_args()
    write_fixture(args.out)
    print(f"wrote fixture to {args.out}")


if __name__ == "__main__":
    main()
