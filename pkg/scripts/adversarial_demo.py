"""Compare adversarial success on a normally trained model and on the deliberately fragile fixture."""

import argparse

import numpy as np

from metamorph.adversarial import fragile_fixture, validation_windows
from metamorph.forecaster import TrainConfig, train
from metamorph.forecaster_mrs import fmr9_adversarial
from metamorph.series import default_split


def report(name, results, verdict):
    frac = np.mean([r.success for r in results])
    print(f"{name}: success {frac:.0%} over {len(results)} windows, verdict {verdict.status}")
    for r in results[:3]:
        print(f"   y_s {r.y_s:.4f} -> y_p {r.y_p:.4f} (ratio {r.ratio:.2f}), relative distance {r.relative_distance:.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=10)
    args = ap.parse_args()
    train_s, val_s = default_split(args.seed)
    model = train(train_s, TrainConfig(epochs=args.epochs, hidden_size=16, seed=args.seed))
    report("trained", *fmr9_adversarial(model, validation_windows(model, val_s), args.steps))
    fx = fragile_fixture(train_s, seed=args.seed)
    print(f"fragile fixture input gain {fx.gain:.2f}")
    report("fragile", *fmr9_adversarial(fx.model, fx.windows, args.steps))


if __name__ == "__main__":
    main()
