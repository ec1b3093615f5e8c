"""Detection rate and localization of the scan test against the size of a mean shift."""
import argparse
from pathlib import Path

from mmdexp.simulation import ChangepointConfig, run_changepoint_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shifts", default="0,1,2,3,4,5,6")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--bandwidth", default="median")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", default="results/changepoint.csv")
    args = ap.parse_args()

    bw = args.bandwidth if args.bandwidth == "median" else float(args.bandwidth)
    cfg = ChangepointConfig(shifts=tuple(float(s) for s in args.shifts.split(",")), n=args.n,
                            trials=args.trials, bandwidth=bw)
    table = run_changepoint_experiment(cfg, args.seed, args.threads)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(table.to_csv())
    print(table.to_csv())


if __name__ == "__main__":
    main()
