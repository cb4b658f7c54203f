"""Power of the KS test against clustering, as the exponent alpha varies.

The scaled contrast carries a factor |W|^(1/2 - alpha).  At the
boundary alpha = 1/2 that factor is 1, so against a fixed Thomas
alternative the statistic stays bounded and the rejection rate hovers
near the significance level no matter how large the window grows.  Any
alpha < 1/2 restores the amplification and power climbs with |W|.

Runs three small power studies (same seeds, same alternative) and
prints the measured rejection rates side by side.
"""

import time

from kscope.mcharness import run_study

BODY = {"shape": "l2", "dim": 2, "radius_scale": 1.0}
WINDOWS = [
    {"shape": "box", "bounds": [[0.0, 0.0], [20.0, 20.0]]},
    {"shape": "box", "bounds": [[0.0, 0.0], [30.0, 30.0]]},
]


def power_at(alpha, replicates=150):
    report = run_study({
        "study": "power",
        "model": {"variant": "thomas", "kappa": 0.25, "mu": 4.0,
                  "sigma_c": 0.5},
        "null_model": {"variant": "poisson", "lambda": 1.0},
        "windows": WINDOWS,
        "body": BODY,
        "replicates": replicates,
        "master_seed": 99,
        "statistics": ["ks"],
        "R": 1.0,
        "alpha": alpha,
        "gamma": 0.05,
    })
    return [w["metrics"]["ks.rejection_rate"] for w in report.windows]


def main():
    print("KS rejection rate vs Thomas(0.25, 4, 0.5), gamma = 0.05, "
          "150 replicates per cell\n")
    print(f"  {'alpha':>6}  {'[0,20]^2':>9}  {'[0,30]^2':>9}")
    started = time.perf_counter()
    for alpha in (0.5, 0.25, 0.1):
        r20, r30 = power_at(alpha)
        note = "  <- no power at the boundary exponent" if alpha == 0.5 else ""
        print(f"  {alpha:6.2f}  {r20:9.3f}  {r30:9.3f}{note}")
    print(f"\n(total {time.perf_counter() - started:.1f}s)")
    print("alpha = 1/2 keeps the null level even under clustering; "
          "shrinking alpha trades test resolution for power")


if __name__ == "__main__":
    main()
