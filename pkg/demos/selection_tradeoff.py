"""Communication-learning tradeoff of device selection.

Sweeps how many of 20 devices participate each round. Few devices keep
the aggregation clean (the power-limited inversion only has to cover
strong channels) but discard training data; many devices use all data but
let the weakest channel dominate the aggregation error. The script prints
both columns so the tension is visible in one table.

Run:  python3 demos/selection_tradeoff.py
"""

import numpy as np

from risfeel.config import load_scenario, set_key
from risfeel.simulate import run_seed


def main():
    cfg = load_scenario("A")
    seeds = cfg.seeds[:3]
    print(f"devices={cfg.devices}  noise_std={cfg.noise_std}  "
          f"rounds={cfg.rounds}  seeds={list(seeds)}")
    print(f"{'n_selected':>10} {'agg. MSE':>12} {'final acc':>10}")
    for n in cfg.sweep_values:
        sub = set_key(cfg, "n_selected", n)
        finals = [run_seed(sub, s)[-1] for s in seeds]
        mse = np.mean([r.mse_empirical for r in finals])
        acc = np.mean([r.test_acc for r in finals])
        print(f"{n:>10} {mse:>12.3e} {acc:>10.3f}")


if __name__ == "__main__":
    main()
