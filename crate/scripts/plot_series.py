"""Plot the decay series of a run directory.

Each csv/<check>.csv with columns t, raw_norm, normalized, predicted_exponent
becomes <out>/<check>.png: the raw series on log-log axes with a reference line
of the predicted slope, and the normalized series underneath.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_series(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows or "predicted_exponent" not in rows[0]:
        return None
    keep = [r for r in rows if float(r["raw_norm"]) > 0 and float(r["t"]) > 0]
    t = [float(r["t"]) for r in keep]
    raw = [float(r["raw_norm"]) for r in keep]
    norm = [float(r["normalized"]) for r in keep]
    return t, raw, norm, float(rows[0]["predicted_exponent"])


def plot(path, out, window):
    series = read_series(path)
    if series is None:
        return False
    t, raw, norm, predicted = series
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    top.loglog(t, raw, lw=1.2, label="measured")
    inside = [i for i, x in enumerate(t) if window[0] <= x <= window[1]]
    if inside:
        i0 = inside[len(inside) // 2]
        ref = [raw[i0] * (x / t[i0]) ** predicted for x in t]
        top.loglog(t, ref, "--", lw=1, label=f"slope {predicted:g}")
    top.legend()
    top.set_ylabel("norm")
    top.set_title(path.stem)
    bottom.loglog(t, norm, lw=1.2)
    bottom.set_ylabel(f"norm / t^{predicted:g}")
    bottom.set_xlabel("t")
    for ax in (top, bottom):
        ax.axvspan(*window, color="0.9", zorder=0)
    fig.tight_layout()
    fig.savefig(out / f"{path.stem}.png", dpi=120)
    plt.close(fig)
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--out", type=Path, help="output directory (default <run_dir>/plots)")
    ap.add_argument("--window", type=float, nargs=2, default=(1e-3, 1e-1), metavar=("LO", "HI"))
    args = ap.parse_args()
    out = args.out or args.run_dir / "plots"
    out.mkdir(parents=True, exist_ok=True)
    done = [p.stem for p in sorted((args.run_dir / "csv").glob("*.csv")) if plot(p, out, args.window)]
    print(f"wrote {len(done)} plots to {out}")
    return 0 if done else 1


if __name__ == "__main__":
    raise SystemExit(main())
