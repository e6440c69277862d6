#!/usr/bin/env python3
"""Full synthetic benchmark: corpus -> SVM/MLP/LSTM -> per-SNR report,
then the CWAD stage (harvest, augment, fine-tune, caution check).

Example:
    python scripts/run_wad_benchmark.py --out runs/bench --scale full
"""

import argparse
import json
from pathlib import Path

from whispermine.benchmark import run_cwad_benchmark, run_wad_benchmark
from whispermine.eval import format_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--scale", choices=("smoke", "full"), default="full")
    parser.add_argument("--skip-cwad", action="store_true")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_wad_benchmark(out, scale=args.scale)

    summary = {"meta": results["_meta"], "wad": {}}
    for kind in ("svm", "mlp", "lstm"):
        if kind not in results:
            continue
        r = results[kind]
        print(f"\n=== {kind} (trained in {r['train_seconds']:.1f}s) ===")
        print(format_report(r["report"]))
        summary["wad"][kind] = {"accuracy": {str(k): v for k, v in r["accuracy"].items()},
                                "train_seconds": r["train_seconds"]}

    if not args.skip_cwad and "lstm" in results:
        cwad = run_cwad_benchmark(out, results["lstm"]["model"], scale=args.scale)
        print("\n=== cwad (fine-tuned lstm) ===")
        print(format_report(cwad["report"]))
        fr = cwad["fractions"]
        print(f"caution check: fp {fr['fp']:.4f} <= fn {fr['fn']:.4f}: "
              f"{fr['fp'] <= fr['fn']}")
        summary["cwad"] = {"fractions": fr, "harvested": len(cwad["harvested"])}

    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"\nsummary -> {out / 'summary.json'}")


if __name__ == "__main__":
    main()
