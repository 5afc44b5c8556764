"""Run the experiment configs in scripts/configs and print a one-line summary per run.

    python3 scripts/run_sweeps.py                 # every config
    python3 scripts/run_sweeps.py synthetic_gd    # selected configs
"""
import argparse
import json
from pathlib import Path

from advlin.harness import ExperimentConfig, run_experiment

HERE = Path(__file__).resolve().parent
ROOT = HERE.parent


def main():
    p = argparse.ArgumentParser()
    p.add_argument("names", nargs="*", help="config names without .json (default: all)")
    p.add_argument("--out", default=str(ROOT / "results"))
    args = p.parse_args()
    names = args.names or sorted(f.stem for f in (HERE / "configs").glob("*.json"))
    for name in names:
        raw = json.loads((HERE / "configs" / f"{name}.json").read_text())
        if raw.get("dataset", {}).get("kind") == "iris":
            raw["dataset"]["path"] = str(ROOT / raw["dataset"]["path"])
        raw["output_dir"] = str(Path(args.out) / name)
        s = run_experiment(ExperimentConfig.from_dict(raw))
        line = {k: s[k] for k in ("gamma", "step_sizes", "margin_attained_at") if s.get(k)}
        if "game" in s:
            line["game"] = s["game"]
        print(f"{name}: {json.dumps(line, sort_keys=True)}")


if __name__ == "__main__":
    main()
