#include "singhyp/charts.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace singhyp {

namespace {

// Corners and center of a facet, for image checks.
std::vector<Vec> facet_probe_points(const Chart& c, const Facet& f) {
    const Box& b = c.box;
    const int d = b.dim();
    std::vector<Vec> pts;
    const double fc = f.side > 0 ? b.hi[f.axis] : b.lo[f.axis];
    std::vector<int> free_axes;
    for (int i = 0; i < d; ++i)
        if (i != f.axis) free_axes.push_back(i);
    const int m = static_cast<int>(free_axes.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
        Vec p = b.center();
        p[f.axis] = fc;
        for (int j = 0; j < m; ++j)
            p[free_axes[j]] = (mask & (1 << j)) ? b.hi[free_axes[j]] : b.lo[free_axes[j]];
        pts.push_back(p);
    }
    Vec p = b.center();
    p[f.axis] = fc;
    pts.push_back(p);
    return pts;
}

} // namespace

void GluedChartFlow::validate() const {
    for (const auto& c : charts) {
        if (!c.box.contains(c.origin))
            throw std::invalid_argument("chart origin outside its box");
        if (c.A.rows() != c.box.dim() || c.A.cols() != c.box.dim())
            throw std::invalid_argument("chart matrix dimension mismatch");
    }
    for (const auto& t : transitions) {
        const Chart& src = charts.at(t.src.chart);
        const Chart& dst = charts.at(t.dst.chart);
        const double dst_plane = facet_coordinate(t.dst);
        for (const Vec& p : facet_probe_points(src, t.src)) {
            Vec q = t.apply(p);
            if (std::abs(q[t.dst.axis] - dst_plane) > 1e-12)
                throw std::invalid_argument("transition image leaves the target facet plane");
            for (int i = 0; i < dst.box.dim(); ++i) {
                if (i == t.dst.axis) continue;
                if (q[i] <= dst.box.lo[i] + 1e-9 || q[i] >= dst.box.hi[i] - 1e-9)
                    throw std::invalid_argument(
                        "transition image not in the interior of the target facet");
            }
        }
    }
    for (const auto& conn : connections) {
        for (size_t k = 0; k + 1 < conn.legs.size(); ++k) {
            const ConnectionLeg& cur = conn.legs[k];
            const ConnectionLeg& nxt = conn.legs[k + 1];
            const Chart& c = charts.at(cur.chart);
            // locate the exit facet of the current leg end
            const Transition* tr = nullptr;
            for (int ax = 0; ax < c.box.dim() && !tr; ++ax) {
                if (std::abs(cur.end[ax] - c.box.hi[ax]) < 1e-12)
                    tr = transition_from(cur.chart, ax, +1);
                else if (std::abs(cur.end[ax] - c.box.lo[ax]) < 1e-12)
                    tr = transition_from(cur.chart, ax, -1);
            }
            if (!tr)
                throw std::invalid_argument("connection leg ends off any transition facet: " +
                                            conn.name);
            if ((tr->apply(cur.end) - nxt.start).norm() > 1e-12)
                throw std::invalid_argument("connection junction mismatch: " + conn.name);
        }
        for (const auto& leg : conn.legs) {
            const Chart& c = charts.at(leg.chart);
            if (leg.starts_at_equilibrium) {
                if ((leg.start - c.origin).norm() > 1e-12)
                    throw std::invalid_argument("leg flagged at equilibrium but start differs");
                // end must lie in the unstable subspace: backward flow sends it to the origin
                Mat back = (-25.0 * c.A).exp();
                if ((back * (leg.end - c.origin)).norm() > 1e-9)
                    throw std::invalid_argument("leg end not on an unstable direction: " +
                                                conn.name);
            }
            if (leg.ends_at_equilibrium) {
                if ((leg.end - c.origin).norm() > 1e-12)
                    throw std::invalid_argument("leg flagged at equilibrium but end differs");
                Mat fwd = (25.0 * c.A).exp();
                if ((fwd * (leg.start - c.origin)).norm() > 1e-9)
                    throw std::invalid_argument("leg start not on a stable direction: " +
                                                conn.name);
            }
        }
    }
}

GluedChartFlow builtin_cycle_charts() {
    GluedChartFlow g;

    Chart c0;
    c0.origin = vec3(0, 0, 0);
    c0.box = make_box({-1, -1, -1}, {1, 1, 1});
    c0.A = Mat::Zero(3, 3);
    c0.A.diagonal() << -3.0, -1.0, 2.0; // lambda_ss < lambda_s < 0 < lambda_u, sv = +1

    Chart c1;
    c1.origin = vec3(4, 0, 0);
    c1.box = make_box({3, -1, -1}, {5, 1, 1});
    c1.A = Mat::Zero(3, 3);
    c1.A.diagonal() << -2.0, 1.0, 3.0; // time-reversed shape, sv = -1

    g.charts = {c0, c1};

    // a: unstable axis of sigma0 (z = +1 exit) onto the stable axis of sigma1
    // (enters at x = 3).  The off-diagonal mixing makes the transported
    // stable/unstable flags along the cycle intersect transversally.
    Transition ta;
    ta.src = {0, 2, +1};
    ta.dst = {1, 0, -1};
    ta.M = Mat::Zero(3, 3);
    ta.M << 0.0, 0.0, 0.0,
            0.25, 0.1, 0.0,
            0.1, 0.25, 0.0;
    ta.b = vec3(3, 0, 0);

    // b: weak unstable axis of sigma1 (y = +1 exit) into the stable plane of
    // sigma0 through its y = +1 facet.
    Transition tb;
    tb.src = {1, 1, +1};
    tb.dst = {0, 1, +1};
    tb.M = Mat::Zero(3, 3);
    tb.M << 0.15, 0.0, 0.05,
            0.0, 0.0, 0.0,
            0.05, 0.0, 0.15;
    tb.b = vec3(0.2 - 0.6, 1.0, -0.2);

    // c: the opposite branch (y = -1) returning through y = -1 of chart 0.
    Transition tc;
    tc.src = {1, 1, -1};
    tc.dst = {0, 1, -1};
    tc.M = Mat::Zero(3, 3);
    tc.M << 0.15, 0.0, -0.05,
            0.0, 0.0, 0.0,
            -0.05, 0.0, 0.15;
    tc.b = vec3(-0.2 - 0.6, -1.0, 0.2);

    g.transitions = {ta, tb, tc};

    Connection a;
    a.name = "a";
    a.legs.push_back({0, c0.origin, vec3(0, 0, 1), true, false});
    a.legs.push_back({1, vec3(3, 0, 0), c1.origin, false, true});

    Connection b;
    b.name = "b";
    b.legs.push_back({1, c1.origin, vec3(4, 1, 0), true, false});
    b.legs.push_back({0, vec3(0.2, 1, 0), c0.origin, false, true});

    Connection c;
    c.name = "c";
    c.legs.push_back({1, c1.origin, vec3(4, -1, 0), true, false});
    c.legs.push_back({0, vec3(-0.2, -1, 0), c0.origin, false, true});

    g.connections = {a, b, c};
    return g;
}

} // namespace singhyp
