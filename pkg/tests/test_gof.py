"""Test-statistic oracles, limit constants, decisions and degenerate paths."""

import json
import math

import numpy as np
import pytest
from scipy import integrate

from kscope.estimate import lambda2_hat, lambda_hat, scaled_delta, sigma2_hat
from kscope.geometry import BodyShape, Box, StructuringBody
from kscope.gof import (
    CHI2_1,
    HALF_NORMAL,
    DegeneratePatternError,
    IntegralWeight,
    NonpositiveVarianceError,
    SupWeight,
    TestKind as Kind,
    TestReport as Report,
    chi2_statistic,
    cvm_statistic,
    ks_statistic,
    limit_constant,
    normal_cdf,
    normal_quantile,
    one_sample_reports,
    p_value,
    two_sample_cvm,
    two_sample_ks,
    two_sample_reports,
)
from kscope.pattern import PointPattern
from kscope.simulate import (
    PoissonModel,
    SeedSpec,
    k_function,
    k_function_from_table,
    simulate,
)

L2 = StructuringBody(2, BodyShape.L2_BALL)
BOX10 = Box([0.0, 0.0], [10.0, 10.0])
POISSON_K = k_function(PoissonModel(1.0), L2)

Z975 = 1.959963984540054


def grid_pattern(spacing=1.0, jitter=0.0, rng=None):
    """10 x 10 unit-grid pattern on BOX10; lambda_hat is exactly 1."""
    xs = np.arange(0.5, 10.0, spacing)
    pts = np.array([(x, y) for x in xs for y in xs])
    if jitter and rng is not None:
        pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    return PointPattern(pts, BOX10)


# ---------------------------------------------------------------------------
# normal distribution helpers


def test_normal_cdf_center():
    assert normal_cdf(0.0) == 0.5


def test_normal_quantile_reference_value():
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)


def test_normal_roundtrip_grid():
    ps = np.linspace(0.001, 0.999, 999)
    back = normal_cdf(normal_quantile(ps))
    assert np.max(np.abs(back - ps)) <= 1e-8


def test_normal_quantile_domain():
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            normal_quantile(bad)


def test_normal_cdf_symmetry():
    xs = np.array([-3.0, -1.0, -0.25, 0.25, 1.0, 3.0])
    assert np.allclose(normal_cdf(xs) + normal_cdf(-xs), 1.0, atol=1e-15)


# ---------------------------------------------------------------------------
# weight specifications


def test_integral_weight_validation():
    IntegralWeight()
    IntegralWeight("exp_density", b=2.0)
    with pytest.raises(ValueError):
        IntegralWeight("exp_density")
    with pytest.raises(ValueError):
        IntegralWeight("exp_density", b=-1.0)
    with pytest.raises(ValueError):
        IntegralWeight("lebesgue", b=1.0)
    with pytest.raises(ValueError):
        IntegralWeight("uniform")


def test_sup_weight_validation():
    SupWeight()
    SupWeight("exp_decay", a=2.0)
    with pytest.raises(ValueError):
        SupWeight("exp_decay")
    with pytest.raises(ValueError):
        SupWeight("const_one", a=1.0)
    with pytest.raises(ValueError):
        SupWeight("cauchy")
    # rate must satisfy a >= d / R over the requested range
    with pytest.raises(ValueError, match="a >= d/R"):
        SupWeight("exp_decay", a=1.5).validate_domain(R=1.0, d=2)
    SupWeight("exp_decay", a=2.0).validate_domain(R=1.0, d=2)


def test_weight_config_roundtrips():
    for w in (IntegralWeight(), IntegralWeight("exp_density", b=0.7)):
        assert IntegralWeight.from_config(w.to_config()) == w
    for v in (SupWeight(), SupWeight("exp_decay", a=3.0)):
        assert SupWeight.from_config(v.to_config()) == v


def test_exp_density_integral_against_simpson():
    w = IntegralWeight("exp_density", b=1.3)
    R, d = 1.4, 2
    rs = np.linspace(0.0, R, 100_001)
    oracle = integrate.simpson(rs ** (2 * d) * np.exp(-1.3 * rs ** (2 * d + 1)), x=rs)
    assert w.integral_r2d(R, d) == pytest.approx(oracle, rel=1e-8)


def test_exp_decay_sup_against_dense_grid():
    v = SupWeight("exp_decay", a=2.5)
    for R, d in ((1.0, 2), (3.0, 2), (0.5, 1)):
        rs = np.linspace(0.0, R, 200_001)
        oracle = float(np.max(rs**d * np.exp(-2.5 * rs)))
        assert v.sup_rd(R, d) == pytest.approx(oracle, rel=1e-9)


# ---------------------------------------------------------------------------
# limit constants


def test_limit_constant_ks_disk():
    assert limit_constant(Kind.KS, L2, R=1.0) == pytest.approx(
        1.0 + 2.0 * math.pi, rel=1e-14
    )


def test_limit_constant_cvm_disk():
    assert limit_constant(Kind.CVM, L2, R=1.0) == pytest.approx(
        1.0 + 4.0 * math.pi**2 / 5.0, rel=1e-14
    )


def test_limit_constant_chi2_unit_interval_body():
    # one test radius, |B| = 1: the interval [-1/2, 1/2]
    body = StructuringBody(1, BodyShape.L2_BALL, 0.5)
    assert limit_constant(Kind.CHI2, body, n_radii=1) == pytest.approx(5.0)


def test_limit_constant_two_sample_matches_one_sample():
    assert limit_constant(Kind.TWO_KS, L2, R=1.0) == limit_constant(
        Kind.KS, L2, R=1.0
    )
    assert limit_constant(Kind.TWO_CVM, L2, R=1.0) == limit_constant(
        Kind.CVM, L2, R=1.0
    )


def test_limit_constant_argument_guards():
    with pytest.raises(ValueError):
        limit_constant(Kind.CHI2, L2)
    with pytest.raises(ValueError):
        limit_constant(Kind.KS, L2)
    with pytest.raises(ValueError):
        limit_constant(Kind.CVM, L2, R=-1.0)
    with pytest.raises(TypeError):
        limit_constant(Kind.CVM, L2, R=1.0, weight=SupWeight())
    with pytest.raises(TypeError):
        limit_constant(Kind.KS, L2, R=1.0, weight=IntegralWeight())


# ---------------------------------------------------------------------------
# p-values


def test_p_value_at_threshold_chi2():
    c = 4.0 * math.pi**2 + 1.0
    assert p_value(c * Z975**2, c, CHI2_1) == pytest.approx(0.05, abs=1e-9)


def test_p_value_at_threshold_half_normal():
    c = 1.0 + 2.0 * math.pi
    assert p_value(c * 1.959964, c, HALF_NORMAL) == pytest.approx(0.05, abs=1e-6)


def test_p_value_zero_statistic():
    assert p_value(0.0, 3.0, CHI2_1) == 1.0
    assert p_value(0.0, 3.0, HALF_NORMAL) == 1.0


def test_p_value_guards():
    with pytest.raises(ValueError):
        p_value(-1.0, 1.0, CHI2_1)
    with pytest.raises(ValueError):
        p_value(1.0, 0.0, CHI2_1)
    with pytest.raises(ValueError):
        p_value(1.0, 1.0, "weibull")


# ---------------------------------------------------------------------------
# zero cases and thresholds


ZERO_K = k_function_from_table([10.0], [0.0])


def test_one_sample_zero_case():
    """No pairs in range, flat null curve, matching intensity: statistic 0."""
    p = grid_pattern()
    for fn in (
        lambda: ks_statistic(p, L2, 1.0, ZERO_K, 0.5, 0.05, bandwidth=0.05),
        lambda: cvm_statistic(p, L2, 1.0, ZERO_K, 0.5, 0.05, bandwidth=0.05),
        lambda: chi2_statistic(
            p, L2, 1.0, ZERO_K, 0.5, radii=[0.025, 0.05], bandwidth=0.05
        ),
    ):
        rep = fn()
        assert rep.statistic == 0.0
        assert rep.decision == "ACCEPT"
        assert rep.p_value == 1.0


def test_ks_threshold_value():
    p = grid_pattern()
    rep = ks_statistic(
        p, L2, 1.0, POISSON_K, 0.5, 0.05, gamma=0.05, bandwidth=0.05
    )
    assert rep.threshold == pytest.approx((1.0 + 2.0 * math.pi * 0.05**2) * Z975)
    assert rep.limit_family == "SCALED_HALF_NORMAL"


def test_ks_threshold_reference_shape():
    # R = 1 gives the textbook constant (1 + 2 pi) z_0.975
    c = limit_constant(Kind.KS, L2, R=1.0)
    z = normal_quantile(0.975)
    assert c * z == pytest.approx((1.0 + 2.0 * math.pi) * 1.959964, rel=1e-6)


def test_chi2_threshold_value():
    p = grid_pattern()
    rep = chi2_statistic(
        p, L2, 1.0, POISSON_K, 0.5, radii=[0.05], gamma=0.05, bandwidth=0.05
    )
    assert rep.limit_family == "SCALED_CHI2_1"
    assert rep.threshold == pytest.approx((4.0 * math.pi**2 + 1.0) * Z975**2, rel=1e-9)


def test_chi2_default_radii():
    p = grid_pattern()
    rep = chi2_statistic(p, L2, 1.0, POISSON_K, 0.5, R=0.05, bandwidth=0.05)
    assert rep.config["radii"] == pytest.approx(
        [0.01, 0.02, 0.03, 0.04, 0.05]
    )
    assert rep.limit_constant == pytest.approx(4.0 * 5.0 * math.pi**2 + 1.0)


def test_chi2_radii_validation():
    p = grid_pattern()
    with pytest.raises(ValueError):
        chi2_statistic(p, L2, 1.0, POISSON_K, 0.5, radii=[0.05, 0.02])
    with pytest.raises(ValueError):
        chi2_statistic(p, L2, 1.0, POISSON_K, 0.5, radii=[0.0, 0.02])
    with pytest.raises(ValueError):
        chi2_statistic(p, L2, 1.0, POISSON_K, 0.5, R=0.05, radii=[0.02, 0.06])


def test_gamma_validation():
    p = grid_pattern()
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05, gamma=bad)


def test_shared_reports_match_wrappers():
    rng = np.random.default_rng(71)
    p = grid_pattern(jitter=0.3, rng=rng)
    shared = one_sample_reports(
        p, L2, 1.0, POISSON_K, 0.5, 0.2,
        tests=(Kind.KS, Kind.CVM, Kind.CHI2), clamp=True,
    )
    assert shared[Kind.KS.value].statistic == ks_statistic(
        p, L2, 1.0, POISSON_K, 0.5, 0.2, clamp=True
    ).statistic
    assert shared[Kind.CVM.value].statistic == cvm_statistic(
        p, L2, 1.0, POISSON_K, 0.5, 0.2, clamp=True
    ).statistic
    assert shared[Kind.CHI2.value].statistic == chi2_statistic(
        p, L2, 1.0, POISSON_K, 0.5, R=0.2, clamp=True
    ).statistic


def test_one_sample_rejects_two_sample_kinds():
    p = grid_pattern()
    with pytest.raises(ValueError):
        one_sample_reports(p, L2, 1.0, POISSON_K, 0.5, 0.05, tests=("two_ks",))


# ---------------------------------------------------------------------------
# sup and integral oracles


def _clamped_denominators(p):
    lam = lambda_hat(p)
    lam2 = lambda2_hat(p)
    s2 = sigma2_hat(p)
    if s2 <= 0:
        s2 = max(s2, lam)
    return lam, lam2, s2


def test_ks_sup_matches_dense_grid():
    """Candidate-set sup equals a corner-enriched 1e5 grid evaluation."""
    rng = np.random.default_rng(72)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(8, 60))
        pts = rng.uniform(0.0, 10.0, size=(n, 2))
        p = PointPattern(pts, BOX10)
        lam0 = float(rng.uniform(0.5, 2.0))
        R = float(rng.uniform(0.1, 0.4))
        if trial % 2:
            weight = SupWeight("exp_decay", a=float(rng.uniform(2.0 / R, 4.0 / R)))
        else:
            weight = SupWeight()
        rep = ks_statistic(p, L2, lam0, POISSON_K, 0.5, R, weight=weight, clamp=True)

        delta = scaled_delta(p, L2, lam0, POISSON_K, 0.5, R)
        grid = np.linspace(0.0, R, 100_001)
        grid = np.unique(
            np.concatenate(
                [grid, delta.jump_rs, np.nextafter(delta.jump_rs, 0.0), [R]]
            )
        )
        grid = grid[(grid >= 0.0) & (grid <= R)]
        sup = float(np.max(np.abs(delta.eval(grid)) * weight.eval(grid)))
        lam, _, s2 = _clamped_denominators(p)
        oracle = sup / (lam * math.sqrt(s2)) + math.sqrt(
            p.window.volume()
        ) * abs(lam - lam0) / math.sqrt(s2)
        assert rep.statistic == pytest.approx(oracle, rel=1e-9)
        checked += 1
    assert checked == 100


def test_cvm_integral_matches_quadrature():
    """Piecewise-exact integration equals per-piece adaptive quadrature."""
    rng = np.random.default_rng(73)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(4, 13))
        pts = rng.uniform(0.0, 10.0, size=(n, 2))
        p = PointPattern(pts, BOX10)
        lam0 = float(rng.uniform(0.5, 2.0))
        R = float(rng.uniform(0.15, 0.5))
        if trial % 3 == 0:
            weight = IntegralWeight("exp_density", b=float(rng.uniform(0.2, 3.0)))
        else:
            weight = IntegralWeight()
        rep = cvm_statistic(p, L2, lam0, POISSON_K, 0.5, R, weight=weight, clamp=True)

        delta = scaled_delta(p, L2, lam0, POISSON_K, 0.5, R)
        cuts = np.unique(np.concatenate(([0.0], delta.jump_rs, [R])))
        cuts = cuts[(cuts >= 0.0) & (cuts <= R)]
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            val, _ = integrate.quad(
                lambda r: delta.eval(r) ** 2 * float(weight.density(r, 2)),
                lo,
                hi,
                epsabs=1e-14,
                epsrel=1e-12,
            )
            total += val
        lam, lam2, s2 = _clamped_denominators(p)
        oracle = total / (lam2 * s2) + p.window.volume() * (lam - lam0) ** 2 / s2
        assert rep.statistic == pytest.approx(oracle, rel=1e-8)
        checked += 1
    assert checked == 100


# ---------------------------------------------------------------------------
# decision coherence battery


def test_decision_p_value_coherence():
    """REJECT iff statistic > threshold iff p_value < gamma, 1000 reports."""
    rng = np.random.default_rng(74)
    reports = []
    for trial in range(250):
        n = int(rng.integers(0, 45))
        pts = rng.uniform(0.0, 8.0, size=(n, 2))
        w = Box([0.0, 0.0], [8.0, 8.0])
        p = PointPattern(pts, w)
        lam0 = float(rng.uniform(0.3, 1.5))
        gamma = float(rng.uniform(0.01, 0.3))
        R = float(rng.uniform(0.1, 0.35))
        shared = one_sample_reports(
            p, L2, lam0, POISSON_K, 0.5, R,
            tests=(Kind.KS, Kind.CVM, Kind.CHI2),
            gamma=gamma, clamp=True,
        )
        reports.extend(shared.values())
        pb = PointPattern(rng.uniform(0.0, 8.0, size=(int(rng.integers(2, 45)), 2)), w)
        if n >= 2:
            two = two_sample_reports(
                p, pb, L2, 0.5, R,
                tests=(Kind.TWO_KS, Kind.TWO_CVM),
                gamma=gamma, clamp=True,
            )
            reports.extend(two.values())
    assert len(reports) >= 1000
    for rep in reports:
        assert rep.statistic >= 0.0
        assert 0.0 <= rep.p_value <= 1.0
        assert (rep.decision == "REJECT") == (rep.statistic > rep.threshold)
        # ties resolve toward ACCEPT on both scales
        if rep.p_value < rep.gamma:
            assert rep.decision == "REJECT"
        if rep.p_value > rep.gamma:
            assert rep.decision == "ACCEPT"


# ---------------------------------------------------------------------------
# degenerate paths


def test_degenerate_pattern_raises_without_clamp():
    p = PointPattern([[5.0, 5.0]], BOX10)
    with pytest.raises(DegeneratePatternError):
        ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05)
    with pytest.raises(DegeneratePatternError):
        cvm_statistic(PointPattern([], BOX10), L2, 1.0, POISSON_K, 0.5, 0.05)


def test_degenerate_pattern_clamped_rejects():
    """An empty pattern against a positive null yields a huge statistic."""
    p = PointPattern([], BOX10)
    for fn in (ks_statistic, cvm_statistic):
        rep = fn(p, L2, 1.0, POISSON_K, 0.5, 0.05, clamp=True)
        assert math.isfinite(rep.statistic)
        assert rep.decision == "REJECT"
        assert any("DEGENERATE_PATTERN" in w for w in rep.warnings)


def sparse_far_pattern():
    # 3 x 3 grid, spacing 5: no pairs within the kernel support below
    xs = [0.0, 5.0, 10.0]
    return PointPattern([(x, y) for x in xs for y in xs], BOX10)


def test_nonpositive_variance_paths():
    p = sparse_far_pattern()
    assert sigma2_hat(p, bandwidth=0.45) < 0.0
    with pytest.raises(NonpositiveVarianceError):
        ks_statistic(p, L2, 0.09, POISSON_K, 0.5, 0.05, bandwidth=0.45)
    rep = ks_statistic(
        p, L2, 0.09, POISSON_K, 0.5, 0.05, bandwidth=0.45, clamp=True
    )
    assert math.isfinite(rep.statistic)
    assert any("NONPOSITIVE_VARIANCE" in w for w in rep.warnings)


def test_small_alpha_warning():
    p = grid_pattern()
    rep = ks_statistic(
        p, L2, 1.0, POISSON_K, 0.25, 0.05, bandwidth=0.05, clamp=True
    )
    assert any("SMALL_ALPHA" in w for w in rep.warnings)
    rep2 = ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05, bandwidth=0.05)
    assert not any("SMALL_ALPHA" in w for w in rep2.warnings)


# ---------------------------------------------------------------------------
# two-sample tests


def poisson_pair(seed_a=101, seed_b=202, lam=1.0, side=20.0):
    w = Box([0.0, 0.0], [side, side])
    m = PoissonModel(lam)
    return simulate(m, w, SeedSpec(seed_a)), simulate(m, w, SeedSpec(seed_b))


def test_two_sample_identical_patterns_zero():
    pa, _ = poisson_pair()
    for fn in (two_sample_ks, two_sample_cvm):
        rep = fn(pa, pa, L2, 0.5, 0.3)
        assert rep.statistic == 0.0
        assert rep.decision == "ACCEPT"
        assert rep.p_value == 1.0


def test_two_sample_symmetry_exact():
    pa, pb = poisson_pair()
    for fn in (two_sample_ks, two_sample_cvm):
        assert fn(pa, pb, L2, 0.5, 0.3).statistic == fn(pb, pa, L2, 0.5, 0.3).statistic


def test_two_sample_window_volume_mismatch():
    pa, _ = poisson_pair()
    pb = simulate(PoissonModel(1.0), Box([0.0, 0.0], [20.0, 20.01]), SeedSpec(5))
    with pytest.raises(ValueError, match="volume"):
        two_sample_ks(pa, pb, L2, 0.5, 0.3)


def test_two_sample_translated_windows_allowed():
    # equal volumes suffice; absolute placement must not matter
    pa, _ = poisson_pair()
    w2 = Box([100.0, -50.0], [120.0, -30.0])
    pb = simulate(PoissonModel(1.0), w2, SeedSpec(6))
    rep = two_sample_ks(pa, pb, L2, 0.5, 0.3)
    assert math.isfinite(rep.statistic)


def test_two_sample_rejects_naive_estimator():
    pa, pb = poisson_pair()
    with pytest.raises(ValueError):
        two_sample_ks(pa, pb, L2, 0.5, 0.3, estimator="naive")


def test_two_sample_degenerate_sides():
    pa, _ = poisson_pair()
    pb = PointPattern([], pa.window)
    # one informative side suffices: the comparison completes and rejects
    rep = two_sample_ks(pa, pb, L2, 0.5, 0.3)
    assert math.isfinite(rep.statistic)
    assert rep.decision == "REJECT"
    # but two empty sides leave no denominator at all
    with pytest.raises(DegeneratePatternError):
        two_sample_ks(pb, pb, L2, 0.5, 0.3)
    single = PointPattern([[1.0, 1.0]], pa.window)
    with pytest.raises(DegeneratePatternError):
        two_sample_cvm(single, pb, L2, 0.5, 0.3, clamp=True)


def test_two_sample_report_schema():
    pa, pb = poisson_pair()
    rep = two_sample_cvm(pa, pb, L2, 0.5, 0.3)
    data = json.loads(rep.to_json())
    for key in (
        "schema_version", "test", "statistic", "limit_constant", "limit_family",
        "p_value", "gamma", "threshold", "decision", "config", "warnings",
    ):
        assert key in data
    assert data["test"] == "two_cvm"
    assert data["limit_family"] == "SCALED_CHI2_1"
    assert data["config"]["window_b"]["shape"] == "box"


def test_two_sample_cvm_matches_manual_integration():
    """Step-difference integral recomputed from the two raw estimates."""
    pa, pb = poisson_pair(side=15.0)
    R = 0.3
    rep = two_sample_cvm(pa, pb, L2, 0.5, R)
    da = scaled_delta(pa, L2, 1.0, POISSON_K, 0.5, R)
    db = scaled_delta(pb, L2, 1.0, POISSON_K, 0.5, R)
    cuts = np.unique(np.concatenate(([0.0], da.jump_rs, db.jump_rs, [R])))
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        diff = da.empirical(lo) - db.empirical(lo)
        total += diff**2 * (hi - lo)
    lam_a, lam2_a, s2_a = _clamped_denominators(pa)
    lam_b, lam2_b, s2_b = _clamped_denominators(pb)
    vol = pa.window.volume()
    oracle = total / (lam2_a * s2_a + lam2_b * s2_b) + vol * (
        lam_a - lam_b
    ) ** 2 / (s2_a + s2_b)
    assert rep.statistic == pytest.approx(oracle, rel=1e-10)


# ---------------------------------------------------------------------------
# report serialization


def test_report_json_roundtrip():
    p = grid_pattern()
    rep = ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05, bandwidth=0.05)
    back = Report.from_json(rep.to_json())
    assert back == rep


def test_report_json_is_sorted_and_stable():
    p = grid_pattern()
    rep = ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05, bandwidth=0.05)
    a = rep.to_json()
    b = ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05, bandwidth=0.05).to_json()
    assert a == b
    keys = list(json.loads(a).keys())
    assert keys == sorted(keys)


def test_report_config_echo_completeness():
    p = simulate(PoissonModel(1.0), BOX10, SeedSpec(303))
    rep = ks_statistic(p, L2, 1.0, POISSON_K, 0.5, 0.05)
    cfg = rep.config
    for key in (
        "alpha", "R", "gamma", "body", "estimator", "kernel", "bandwidth",
        "clamp", "window", "n_points", "null", "weight_v",
    ):
        assert key in cfg, key
    assert cfg["alpha"] == 0.5
    assert cfg["n_points"] == len(p)
    assert cfg["null"]["lambda0"] == 1.0
    # default bandwidth c^(-3/4) with c = 10
    assert cfg["bandwidth"] == pytest.approx(10.0**-0.75)
