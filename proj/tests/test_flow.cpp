#include "singhyp/flow.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <random>

using namespace singhyp;

TEST_CASE("scalar exponential decay") {
    Mat A = Mat::Zero(1, 1);
    A(0, 0) = -1.0;
    auto spec = builtin_linear(A);
    Vec x(1);
    x << 1.0;
    FlowResult r = advance(spec, x, std::log(2.0));
    CHECK(r.status == FlowStatus::ok);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-12));

    FlowResult r0 = advance(spec, x, 0.0);
    CHECK(r0.x[0] == 1.0);
}

TEST_CASE("Lorenz advance against a tightened-tolerance reference") {
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    Vec x = vec3(1, 1, 1);
    FlowResult ref = advance(spec, x, 1.0, 1e-12);
    FlowResult got = advance(spec, x, 1.0, kDefaultTol);
    REQUIRE(ref.status == FlowStatus::ok);
    REQUIRE(got.status == FlowStatus::ok);
    CHECK((ref.x - got.x).norm() < 1e-6);
}

TEST_CASE("flow property phi^{s+t} = phi^t of phi^s") {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> up(-5.0, 5.0);
    // forward times only: backward Lorenz error amplification (~e^{14.6 |t|})
    // makes pointwise comparison meaningless in double precision
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    int checked = 0;
    std::vector<double> residuals;
    for (int trial = 0; trial < 100; ++trial) {
        Vec x = vec3(up(rng), up(rng), up(rng) + 20.0);
        double s = ut(rng), t = ut(rng);
        FlowResult ab = advance(spec, x, s);
        if (ab.status != FlowStatus::ok) continue;
        FlowResult abc = advance(spec, ab.x, t);
        FlowResult direct = advance(spec, x, s + t);
        if (abc.status != FlowStatus::ok || direct.status != FlowStatus::ok) continue;
        // local errors of order tol are amplified by at most e^{lambda_max T}
        // along the orbit (lambda_max ~ 0.906 at these parameters)
        double scale = 1.0 + direct.x.norm();
        double r = (abc.x - direct.x).norm() / scale;
        double bound = 3e-6 * std::exp(1.05 * (s + t));
        CHECK(r < bound);
        residuals.push_back(r);
        ++checked;
    }
    CHECK(checked > 50);
    std::sort(residuals.begin(), residuals.end());
    CHECK(residuals[residuals.size() / 2] < 1e-4); // systematic breakage guard

    // the same property is exact on linear fields
    Mat A(2, 2);
    A << -1, 2, 0, 0.5;
    auto lin = builtin_linear(A, 1e6);
    Vec y = vec2(0.3, -0.2);
    FlowResult p1 = advance(lin, y, 1.3);
    FlowResult p2 = advance(lin, p1.x, 2.1);
    FlowResult pd = advance(lin, y, 3.4);
    CHECK((p2.x - pd.x).norm() < 1e-9 * (1.0 + pd.x.norm()));
}

TEST_CASE("tangent transport matches the matrix exponential on linear fields") {
    Mat A(3, 3);
    A << -2, 1, 0,
          0, -1, 0.5,
          0, 0, 1;
    auto spec = builtin_linear(A);
    Vec x = vec3(0.1, -0.2, 0.05);
    Mat V = Mat::Identity(3, 3);
    FlowResult r = tangent_transport(spec, x, V, 1.7);
    Mat expected = (A * 1.7).exp();
    CHECK((r.V - expected).norm() < 1e-8);
    CHECK((r.x - expected * x).norm() < 1e-8);

    FlowResult r0 = tangent_transport(spec, x, V, 0.0);
    CHECK((r0.V - V).norm() == 0.0);
}

TEST_CASE("tangent transport matches the exponential on a smooth-path field too") {
    // integrate the Lorenz variational equations at the origin, where the flow
    // is exactly linear: Dphi^t = e^{Jt}
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    Vec x = Vec::Zero(3);
    Mat V = Mat::Identity(3, 3);
    FlowResult r = tangent_transport(spec, x, V, 0.5);
    Mat J = spec.jacobian(x);
    CHECK((r.V - (J * 0.5).exp()).norm() < 1e-6);
}

TEST_CASE("tangent cocycle property on Lorenz") {
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> up(-3.0, 3.0);
    std::uniform_real_distribution<double> ut(0.2, 2.5);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = vec3(up(rng), up(rng), up(rng) + 20.0);
        double s = ut(rng), t = ut(rng);
        Mat V = Mat::Identity(3, 3);
        FlowResult first = tangent_transport(spec, x, V, s);
        if (first.status != FlowStatus::ok) continue;
        FlowResult second = tangent_transport(spec, first.x, first.V, t);
        FlowResult direct = tangent_transport(spec, x, V, s + t);
        if (second.status != FlowStatus::ok || direct.status != FlowStatus::ok) continue;
        double scale = 1.0 + direct.V.norm();
        CHECK((second.V - direct.V).norm() / scale < 1e-6);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("domain escape reports the exit time") {
    Mat A = Mat::Zero(1, 1);
    A(0, 0) = 1.0; // xdot = x
    auto spec = builtin_linear(A, 10.0);
    Vec x(1);
    x << 1.0;
    // reaches the boundary 10 at t = ln 10
    FlowResult r = advance(spec, x, 5.0);
    CHECK(r.status == FlowStatus::escaped);
    CHECK(r.t_reached == doctest::Approx(std::log(10.0)).epsilon(1e-6));
    CHECK(std::abs(r.x[0]) == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("chart flow: exact inside charts, transitions crossed, escape off-facet") {
    auto spec = builtin_cycle_model();
    const auto& g = *spec.charts;
    // inside chart 0 the flow is exactly e^{At}
    Vec x = vec3(0.2, 0.3, 0.01);
    FlowResult r = advance(spec, x, 0.7);
    Vec expected = (g.charts[0].A * 0.7).exp() * x;
    REQUIRE(r.status == FlowStatus::ok);
    CHECK((r.x - expected).norm() < 1e-10);

    // the strong stable axis of chart 0 escapes backward through x1-facets
    FlowResult esc = advance(spec, vec3(0.5, 0, 0), -5.0);
    CHECK(esc.status == FlowStatus::escaped);

    // the unstable axis of chart 0 crosses into chart 1 and converges to sigma1
    FlowResult cross = advance(spec, vec3(0, 0, 0.05), 6.0);
    REQUIRE(cross.status == FlowStatus::ok);
    CHECK(g.locate(cross.x) == 1);
    CHECK((cross.x - vec3(4, 0, 0)).norm() < 0.5);
}

TEST_CASE("chart flow: forward-backward through a junction is the identity") {
    auto spec = builtin_cycle_model();
    Vec x = vec3(0.03, -0.04, 0.4); // will exit via the z=+1 facet
    double T = 1.2;                 // enough to cross into chart 1
    FlowResult fwd = tangent_transport(spec, x, Mat::Identity(3, 3), T);
    REQUIRE(fwd.status == FlowStatus::ok);
    REQUIRE(spec.charts->locate(fwd.x) == 1);
    FlowResult back = tangent_transport(spec, fwd.x, Mat::Identity(3, 3), -T);
    REQUIRE(back.status == FlowStatus::ok);
    CHECK((back.x - x).norm() < 1e-8);
    CHECK((fwd.V * back.V - Mat::Identity(3, 3)).norm() < 1e-7);
}

TEST_CASE("trajectory samples respect the integrator tolerance") {
    auto spec = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    const double tol = 1e-7;
    TrajectorySample tr = sample_trajectory(spec, vec3(1, 1, 1), 3.0, 0.25, tol);
    REQUIRE(tr.status == FlowStatus::ok);
    for (size_t i = 0; i + 1 < tr.points.size(); ++i) {
        double dt = tr.times[i + 1] - tr.times[i];
        FlowResult tight = advance(spec, tr.points[i], dt, tol / 10.0);
        double scale = 1.0 + tight.x.norm();
        CHECK((tight.x - tr.points[i + 1]).norm() < 10.0 * tol * scale);
    }
}

TEST_CASE("trajectory sampling is monotone in time") {
    auto spec = builtin_limit_cycle();
    TrajectorySample tr = sample_trajectory(spec, vec2(0.2, 0.0), 10.0, 0.1);
    REQUIRE(tr.points.size() == tr.times.size());
    for (size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
    // ends near the unit circle
    CHECK(tr.points.back().norm() == doctest::Approx(1.0).epsilon(1e-3));
}
