"""Write the CSV and model fixtures used by the CLI examples into a directory (default: fixtures/)."""

import argparse
import csv
import pathlib

import numpy as np

from metamorph.adversarial import fragile_fixture
from metamorph.baseline import REFERENCE_FORECASTS, REFERENCE_LOSSES
from metamorph.forecaster import save_model
from metamorph.series import (TimeSeries, default_split, series_to_table, synth_series, synth_table,
                              write_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default="fixtures")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = pathlib.Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)

    train, val = default_split(args.seed)
    write_csv(out / "train.csv", series_to_table(train))
    write_csv(out / "val.csv", series_to_table(val))
    write_csv(out / "features.csv", synth_table(750, args.seed))
    t = np.arange(200)
    write_csv(out / "sinusoid.csv", series_to_table(TimeSeries(t, np.sin(2 * np.pi * t / 20))))
    write_csv(out / "constant.csv", series_to_table(synth_series("constant", 200)))
    write_csv(out / "short.csv", series_to_table(synth_series("linear", 5)))

    with open(out / "reference_samples.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["forecast", "loss"])
        w.writerows(zip(REFERENCE_FORECASTS, REFERENCE_LOSSES))

    fx = fragile_fixture(train, args.seed)
    save_model(fx.model, out / "fragile_model.npz")
    write_csv(out / "fragile_val.csv", series_to_table(fx.series))
    print(f"wrote fixtures to {out}/ (fragile-model gain {fx.gain:.2f})")


if __name__ == "__main__":
    main()
