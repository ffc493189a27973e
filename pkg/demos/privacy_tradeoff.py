"""Learning-privacy tradeoff under artificial device noise.

Each device clips its model update and adds Gaussian noise before
transmitting. The over-the-air sum hides individual updates behind both
the receiver noise and everyone else's artificial noise, so the leakage
proxy falls as the noise grows -- at the cost of test accuracy.

Run:  python3 demos/privacy_tradeoff.py
"""

import numpy as np

from risfeel.config import load_scenario, set_key
from risfeel.simulate import run_seed


def main():
    cfg = load_scenario("D")
    seeds = cfg.seeds[:5]
    print(f"{'artificial noise':>16} {'epsilon proxy':>14} {'final acc':>10}")
    for value in cfg.sweep_values:
        sub = set_key(cfg, "artificial_noise_std", value)
        finals = [run_seed(sub, s)[-1] for s in seeds]
        eps = np.mean([r.epsilon_proxy for r in finals])
        acc = np.mean([r.test_acc for r in finals])
        print(f"{value:>16} {eps:>14.2f} {acc:>10.3f}")


if __name__ == "__main__":
    main()
