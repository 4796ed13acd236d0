"""Print the window-length reconstruction curve of a CSV series (or a demo sinusoid) and its elbow."""

import argparse

import numpy as np

from metamorph.series import load_series
from metamorph.spectral import timestep_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", nargs="?")
    ap.add_argument("--column", default="value")
    ap.add_argument("--max-step", type=int)
    args = ap.parse_args()
    if args.csv:
        values = load_series(args.csv, value_column=args.column).values
    else:
        values = np.sin(2 * np.pi * np.arange(200) / 20)
    curve = timestep_curve(values, max_step=args.max_step)
    top = float(curve.losses.max()) or 1.0
    for step, loss in curve.points:
        bar = "#" * int(round(40 * loss / top))
        mark = " <- elbow" if step == curve.elbow else ""
        print(f"{step:5d} {loss:12.6g} {bar}{mark}")


if __name__ == "__main__":
    main()
