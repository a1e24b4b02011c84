"""Large-deviation lower-bound ratios over n (fixed sums) and lambda t (Poisson sums)."""

import argparse
from dataclasses import dataclass, field
from typing import List

from rarekit.large_deviations import LdpScenario, dependence_condition_scan, ldp_ratio_fixed_n, ldp_ratio_random_sum
from rarekit.rare_sets import RareSet
from rarekit.vectors import MrvRay


@dataclass
class LdpScanConfig:
    alpha: float = 2.0
    gamma: float = 1.0
    counts: List[int] = field(default_factory=lambda: [5, 10, 20, 50])
    multiples: List[float] = field(default_factory=lambda: [1.0, 2.0, 4.0])
    n_samples: int = 10**6
    seed: int = 11


def main(cfg: LdpScanConfig):
    A = RareSet([[1, 1]])
    s = LdpScenario([MrvRay(cfg.alpha, [1.0], [[0.5, 0.5]])], A, cfg.gamma, lam=1.0)
    dep = dependence_condition_scan(s, [2, 4, 8, 16, 32, 64])
    print(f"# dependence condition: x P[X in xA] at x = gamma n -> flagged={dep.flagged}")
    print("mode,n_or_t,x,ratio,se,bonferroni_ok")
    for n in cfg.counts:
        xs = [m * cfg.gamma * n for m in cfg.multiples]
        for mode, fn in (("fixed_n", ldp_ratio_fixed_n), ("random_sum", ldp_ratio_random_sum)):
            res = fn(s, n, xs, cfg.seed, cfg.n_samples)
            for r in res.rows:
                print(f"{mode},{n},{r.x:g},{r.ratio.value:.4f},{r.ratio.std_error:.4f},{r.bonferroni_ok}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=LdpScanConfig.alpha)
    ap.add_argument("--n-samples", type=int, default=LdpScanConfig.n_samples)
    a = ap.parse_args()
    main(LdpScanConfig(alpha=a.alpha, n_samples=a.n_samples))
