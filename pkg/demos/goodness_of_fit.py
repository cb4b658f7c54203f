"""One- and two-sample goodness-of-fit tests on simulated patterns.

Runs the KS, Cramer-von Mises, and chi-square statistics against a
known Poisson null, then shows the two-sample comparison, including a
clustered alternative that the tests catch at a small scaling exponent.
"""

from kscope.geometry import BodyShape, Box, StructuringBody
from kscope.gof import TestKind, one_sample_reports, two_sample_cvm, two_sample_ks
from kscope.simulate import PoissonModel, SeedSpec, ThomasModel, k_function, simulate

L2 = StructuringBody(2, BodyShape.L2_BALL)
WINDOW = Box([0.0, 0.0], [30.0, 30.0])


def show(label, report):
    print(f"  {label:28s} stat = {report.statistic:8.3f}  "
          f"threshold = {report.threshold:7.3f}  "
          f"p = {report.p_value:.4f}  -> {report.decision}")


def main():
    null = PoissonModel(1.0)
    null_k = k_function(null, L2)

    pattern = simulate(null, WINDOW, SeedSpec(26))
    print(f"Poisson(1) pattern on [0,30]^2 ({len(pattern)} points), "
          "tested against its own null:")
    reports = one_sample_reports(
        pattern, L2, 1.0, null_k, alpha=0.5, R=1.0,
        tests=(TestKind.KS, TestKind.CVM, TestKind.CHI2), clamp=True,
    )
    for name, rep in reports.items():
        show(name, rep)

    thomas = ThomasModel(kappa=0.25, mu=4.0, sigma_c=0.5)
    clustered = simulate(thomas, WINDOW, SeedSpec(22))
    print(f"\nThomas pattern with the same intensity ({len(clustered)} "
          "points), tested against the Poisson null at alpha = 0.1:")
    reports = one_sample_reports(
        clustered, L2, 1.0, null_k, alpha=0.1, R=1.0,
        tests=(TestKind.KS, TestKind.CVM), clamp=True,
    )
    for name, rep in reports.items():
        show(name, rep)
    print("  clustering inflates K; the amplified contrast rejects")

    print("\nTwo-sample tests (equal window volumes required):")
    pa = simulate(null, WINDOW, SeedSpec(23))
    pb = simulate(null, WINDOW, SeedSpec(24))
    show("poisson vs poisson (ks)", two_sample_ks(pa, pb, L2, 0.5, 1.0))
    show("poisson vs poisson (cvm)", two_sample_cvm(pa, pb, L2, 0.5, 1.0))
    show("poisson vs thomas (ks)",
         two_sample_ks(pa, clustered, L2, 0.1, 1.0, clamp=True))
    show("identical pattern twice",
         two_sample_ks(pa, pa, L2, 0.5, 1.0))


if __name__ == "__main__":
    main()
