import argparse
from pathlib import Path

from posbf.harness import ExperimentConfig, run

ROOT = Path(__file__).resolve().parent.parent


def run_from_args(default_config: str, description: str):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--config", default=str(ROOT / "configs" / default_config))
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", default=str(ROOT / "results"))
    args = parser.parse_args()

    cfg = ExperimentConfig.load(args.config)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    table = run(cfg, workers=args.workers)
    out = Path(args.out_dir) / f"{cfg.experiment}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(table.to_csv(), encoding="utf-8")
    print(f"wrote {len(table.rows)} rows to {out}")
    return table
