"""make-figures: batch-render figures from a directory of solver CSVs."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from .convergence import plot_convergence, read_error_table
from .slices import plot_slice_overlay, read_slice


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="make-figures")
    parser.add_argument("--in", dest="indir", required=True, help="directory of solver CSV outputs")
    parser.add_argument("--refs", help="directory of reference slice CSVs")
    parser.add_argument("--out", required=True, help="output directory for images")
    args = parser.parse_args(argv)

    indir = Path(args.indir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    refs = Path(args.refs) if args.refs else None
    made = 0

    for path in sorted(indir.glob("errors_*.csv")):
        table = read_error_table(path)
        img = out / f"conv_{path.stem}.png"
        slopes = plot_convergence([table], img)
        print(f"{img.name}: slopes {json.dumps(slopes[table.name])}")
        made += 1

    for path in sorted(indir.glob("slice_*.csv")):
        if path.stem.endswith("_discrepancy"):
            continue
        ref_path = None
        if refs is not None:
            cand = refs / path.name
            if cand.exists():
                ref_path = cand
            else:
                matches = sorted(refs.glob(f"*{path.stem.removeprefix('slice_')}*.csv"))
                if len(matches) == 1:
                    ref_path = matches[0]
                elif len(matches) > 1:
                    names = ", ".join(m.name for m in matches)
                    print(f"{path.name}: ambiguous references ({names}); skipped")
        if ref_path is None:
            continue
        curve = read_slice(path)
        reference = read_slice(ref_path)
        img = out / f"overlay_{path.stem}.png"
        rep = plot_slice_overlay(curve, reference, img)
        (out / f"overlay_{path.stem}.json").write_text(json.dumps(rep, indent=2) + "\n")
        print(f"{img.name}: max {rep['max_abs']:.3e} mean {rep['mean_abs']:.3e}")
        made += 1

    if made == 0:
        print("no inputs matched; nothing to do")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
