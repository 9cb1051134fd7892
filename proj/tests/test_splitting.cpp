#include "singhyp/splitting.hpp"

#include <doctest.h>

using namespace singhyp;

namespace {

VectorFieldSpec saddle211() {
    Mat A = Mat::Zero(3, 3);
    A.diagonal() << -2, -1, 1;
    return builtin_linear(A, 50.0);
}

SplitAnchorInput axis_anchor(const VectorFieldSpec& spec, const Vec& dir) {
    return {ProjectivePoint::make(Vec::Zero(spec.dim), dir), nullptr, 0};
}

} // namespace

TEST_CASE("classification: Lorenz origin") {
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    SingularityClass c = classify_singularity(spec, 0);
    CHECK(c.index == 2);
    CHECK(c.hyperbolic);
    REQUIRE(c.saddle_value_defined);
    // sv = -8/3 + (-11+sqrt(1201))/2
    double expected_sv = -8.0 / 3.0 + 0.5 * (-11.0 + std::sqrt(1201.0));
    CHECK(c.saddle_value == doctest::Approx(expected_sv).epsilon(1e-9));
    CHECK(c.saddle_value == doctest::Approx(9.161).epsilon(1e-3));
    CHECK(c.lorenz_like);
    CHECK(c.strong_dim == 1);       // G^ss
    CHECK(c.center_block_dim == 2); // G^cu
}

TEST_CASE("classification: diagonal examples") {
    Mat A = Mat::Zero(3, 3);
    A.diagonal() << -2, -1, 1.5;
    auto s1 = builtin_linear(A);
    SingularityClass c1 = classify_singularity(s1, 0);
    CHECK(c1.index == 2);
    CHECK(c1.saddle_value == doctest::Approx(0.5));
    CHECK(c1.lorenz_like);

    Mat B = Mat::Zero(3, 3);
    B.diagonal() << -1, -1, 3;
    auto s2 = builtin_linear(B);
    SingularityClass c2 = classify_singularity(s2, 0);
    CHECK(c2.saddle_value == doctest::Approx(2.0));
    CHECK(!c2.lorenz_like); // equal stable pair forces sv < 0

    Mat C = Mat::Zero(3, 3);
    C.diagonal() << -1, 0, 1;
    auto s3 = builtin_linear(C);
    SingularityClass c3 = classify_singularity(s3, 0);
    CHECK(!c3.hyperbolic);
    CHECK(!c3.lorenz_like);
}

TEST_CASE("classification: cycle model spectra") {
    auto spec = builtin_cycle_model();
    SingularityClass c0 = classify_singularity(spec, 0);
    SingularityClass c1 = classify_singularity(spec, 1);
    CHECK(c0.saddle_value == doctest::Approx(1.0));
    CHECK(c1.saddle_value == doctest::Approx(-1.0));
    CHECK(c0.lorenz_like);
    CHECK(c1.lorenz_like);
    CHECK(c0.strong_dim == 1); // G^ss of sigma0
    CHECK(c1.strong_dim == 1); // G^uu of sigma1
}

TEST_CASE("invariant subspaces: diagonal and complex-pair blocks") {
    auto spec = saddle211();
    Mat sub = invariant_subspace(spec, 0, 0, 0);
    REQUIRE(sub.cols() == 1);
    CHECK(std::abs(sub.col(0)[0]) == doctest::Approx(1.0));

    auto lc = builtin_limit_cycle(); // origin has a complex pair 1 +- i
    Mat full = invariant_subspace(lc, 0, 0, 1);
    CHECK(full.cols() == 2);
    CHECK_THROWS(invariant_subspace(lc, 0, 0, 0)); // splitting the pair
}

TEST_CASE("escaping-manifold test on the cycle model") {
    auto spec = builtin_cycle_model();
    Box region = spec.domain;
    // sigma0 strong stable axis (lambda_ss = -3): orbits leave backward
    Mat ss = invariant_subspace(spec, 0, 0, 0);
    CHECK(escaping_manifold_test(spec, 0, ss, true, region) == TriState::yes);
    // sigma1 strong unstable axis escapes forward
    Mat uu = invariant_subspace(spec, 1, 2, 2);
    CHECK(escaping_manifold_test(spec, 1, uu, false, region) == TriState::yes);
    // sigma1 stable axis: one branch is the heteroclinic a, so it stays
    Mat s1 = invariant_subspace(spec, 1, 0, 0);
    CHECK(escaping_manifold_test(spec, 1, s1, true, region) == TriState::no);
    // note: the full stable plane of sigma0 is formally not escaping (it
    // carries the returning connections), but the staying directions occupy
    // an exponentially thin angular sliver that direction sampling cannot
    // see; the verdict pipeline therefore only ever tests the candidates
    // allowed by the classification (subspaces of G^ss here).
}

TEST_CASE("escaping-manifold test: recurrence and timeout semantics") {
    auto lc = builtin_limit_cycle();
    Box region = make_box({-2, -2}, {2, 2});
    // origin's unstable manifold is everything; forward orbits land on the
    // cycle and stay: recurrence negates escape
    Mat full = invariant_subspace(lc, 0, 0, 1);
    CHECK(escaping_manifold_test(lc, 0, full, false, region) == TriState::no);
    // a tiny horizon can certify nothing
    EscapeOptions tiny;
    tiny.T_esc = 0.01;
    CHECK(escaping_manifold_test(lc, 0, full, false, region, tiny) == TriState::unknown);
}

TEST_CASE("center spaces via resolve_center") {
    auto spec = builtin_cycle_model();
    Box region = spec.domain;

    SingularityClass c0 = classify_singularity(spec, 0);
    resolve_center(spec, c0, region);
    CHECK(c0.escaping_stable_dim == 1);
    CHECK(c0.escaping_unstable_dim == 0);
    CHECK(c0.center_dim == 2); // weak stable + unstable
    // center contains e2 and e3, not e1
    Vec e1 = vec3(1, 0, 0);
    CHECK((c0.center_frame.transpose() * e1).norm() < 1e-9);

    SingularityClass c1 = classify_singularity(spec, 1);
    resolve_center(spec, c1, region);
    CHECK(c1.escaping_unstable_dim == 1);
    CHECK(c1.escaping_stable_dim == 0);
    CHECK(c1.center_dim == 2); // stable + weak unstable
    Vec e3 = vec3(0, 0, 1);
    CHECK((c1.center_frame.transpose() * e3).norm() < 1e-9);

    // no escaping manifolds: the center is the whole tangent space
    auto lc = builtin_limit_cycle();
    SingularityClass cl = classify_singularity(lc, 0);
    resolve_center(lc, cl, make_box({-2, -2}, {2, 2}));
    CHECK(cl.center_dim == 2);
}

TEST_CASE("Lorenz origin: escaping strong-stable axis and 2-d center") {
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    Box region(vec3(-25, -30, 0), vec3(25, 30, 55));
    SingularityClass c = classify_singularity(spec, 0);
    resolve_center(spec, c, region);
    CHECK(c.expected_strong_escaping == TriState::yes); // the lambda ~ -22.83 axis
    CHECK(c.escaping_stable_dim == 1);
    CHECK(c.escaping_unstable_dim == 0); // the unstable manifold feeds the attractor
    CHECK(c.center_dim == 2);            // weak stable + unstable
}

TEST_CASE("splitting estimate on a closed-form saddle") {
    auto spec = saddle211();
    SplittingOptions opts;
    opts.horizon = 20.0;
    std::vector<SplitAnchorInput> anchors{axis_anchor(spec, vec3(0, 0, 1))};
    SplittingEstimate est = estimate_splitting(spec, anchors, opts);
    CHECK(est.dimE == 1);
    CHECK(est.dimF == 1);
    REQUIRE(est.anchors.size() == 1);
    const auto& a = est.anchors[0];
    // E = e1, F = e2 in the normal fiber of span(e3)
    CHECK(std::abs(a.E.col(0)[0]) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(a.F.col(0)[1]) == doctest::Approx(1.0).epsilon(1e-6));
    // rates -2 and -1: margin 1
    CHECK(a.margin == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(est.domination_margin == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(a.exponents[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(a.exponents[1] == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("no dominated splitting when rates coincide") {
    Mat A = Mat::Zero(3, 3);
    A.diagonal() << -1, -1, 1;
    auto spec = builtin_linear(A, 50.0);
    SplittingOptions opts;
    opts.horizon = 10.0;
    std::vector<SplitAnchorInput> anchors{axis_anchor(spec, vec3(0, 0, 1))};
    CHECK_THROWS_AS(estimate_splitting(spec, anchors, opts), std::runtime_error);
}

TEST_CASE("closed-form domination slack at t = ln 2") {
    auto spec = saddle211();
    SplittingOptions opts;
    opts.horizon = 20.0;
    std::vector<SplitAnchorInput> anchors{axis_anchor(spec, vec3(0, 0, 1))};
    SplittingEstimate est = estimate_splitting(spec, anchors, opts);

    double slack1 = check_domination(spec, est, std::log(2.0));
    CHECK(std::abs(slack1) < 1e-9); // ratio exactly 1/2
    double slack2 = check_domination(spec, est, 2.0 * std::log(2.0));
    CHECK(slack2 == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("cone invariance around F holds; around E fails") {
    auto spec = saddle211();
    SplittingOptions opts;
    opts.horizon = 20.0;
    std::vector<SplitAnchorInput> anchors{axis_anchor(spec, vec3(0, 0, 1))};
    SplittingEstimate est = estimate_splitting(spec, anchors, opts);

    ConeCheck ok = check_cone_invariance(spec, est, {1.0, false}, 1.0);
    CHECK(ok.invariant);
    CHECK(ok.margin == doctest::Approx(1.0).epsilon(1e-6));

    ConeCheck huge = check_cone_invariance(spec, est, {1000.0, false}, 1.0);
    CHECK(huge.invariant); // domination absorbs any aperture

    ConeCheck rev = check_cone_invariance(spec, est, {1.0, true}, 1.0);
    CHECK(!rev.invariant);
}

TEST_CASE("reparametrized rates on the cycle model's center anchors") {
    auto spec = builtin_cycle_model();
    // anchors spanning the projective center circle at sigma0
    std::vector<SplitAnchorInput> anchors;
    for (int k = 0; k < 8; ++k) {
        double th = M_PI * k / 8.0;
        Vec dir = std::cos(th) * vec3(0, 1, 0) + std::sin(th) * vec3(0, 0, 1);
        anchors.push_back({ProjectivePoint::make(vec3(0, 0, 0), dir), nullptr, 0});
    }
    SplittingOptions opts;
    opts.horizon = 12.0;
    SplittingEstimate est = estimate_splitting(spec, anchors, opts);
    CHECK(est.dimE == 1);
    CHECK(est.dimF == 1);

    CocycleSpec cE = make_cocycle(spec, {1}); // sv(sigma1) < 0
    CocycleSpec cF = make_cocycle(spec, {0}); // sv(sigma0) > 0
    ReparamRates rates = check_reparam_rates(spec, est, cE, cF);
    // area expansion in the center plane: lambda_s + lambda_u = 1
    CHECK(rates.rate_F == doctest::Approx(1.0).epsilon(0.05));
    // E at sigma0 is the strong stable axis, and h_E = h_{sigma1} = 1 there
    CHECK(rates.rate_E == doctest::Approx(-3.0).epsilon(0.05));
}

TEST_CASE("limit cycle: classical LPF hyperbolicity with empty cocycles") {
    auto spec = builtin_limit_cycle();
    // anchors on the cycle with settle histories
    std::vector<SplitAnchorInput> anchors;
    for (double th = 0.0; th < 6.2; th += 1.3) {
        Vec x0 = vec2(1.3 * std::cos(th), 1.3 * std::sin(th));
        OrbitRecord settle = record_orbit(spec, x0, 20.0);
        REQUIRE(settle.status == FlowStatus::ok);
        auto hist = std::make_shared<OrbitRecord>(settle);
        anchors.push_back({section_of_field(spec, settle.end()), hist, -1});
    }
    SplittingOptions opts;
    opts.horizon = 2.0 * M_PI;
    SplittingEstimate est = estimate_splitting(spec, anchors, opts);
    CHECK(est.dimE == 1);
    CHECK(est.dimF == 0);

    CocycleSpec empty;
    ReparamRates rates = check_reparam_rates(spec, est, empty, empty);
    CHECK(rates.F_vacuous);
    CHECK(rates.rate_E == doctest::Approx(-2.0).epsilon(0.05));
}

TEST_CASE("domination is invariant under reparametrization") {
    // reparametrizing both bundles by one positive cocycle shifts both
    // restricted growths by the same log h, so the domination ratio cancels it
    // exactly; verify the cancellation per anchor
    auto spec = builtin_cycle_model();
    std::vector<SplitAnchorInput> anchors;
    for (int k = 0; k < 6; ++k) {
        double th = M_PI * k / 6.0;
        Vec dir = std::cos(th) * vec3(0, 1, 0) + std::sin(th) * vec3(0, 0, 1);
        anchors.push_back({ProjectivePoint::make(vec3(0, 0, 0), dir), nullptr, 0});
    }
    SplittingOptions opts;
    opts.horizon = 10.0;
    SplittingEstimate est = estimate_splitting(spec, anchors, opts);
    double slack_plain = check_domination(spec, est, 1.0);
    CHECK(slack_plain > 0);

    CocycleSpec both = make_cocycle(spec, {0, 1});
    for (const auto& a : est.anchors) {
        REQUIRE(a.status == FlowStatus::ok);
        double log_h = 0;
        for (const auto& term : both.terms)
            log_h += log_h_sigma_endpoints(spec, term.adapter, a.L.x, a.x_end,
                                           a.based_at_sigma, a.log_dir_growth);
        double plain = a.logF_min - a.logE_max;
        double reparam = (log_h + a.logF_min) - (log_h + a.logE_max);
        CHECK(std::abs(plain - reparam) < 1e-12);
    }
}
