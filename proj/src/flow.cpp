#include "singhyp/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace singhyp {

namespace {

constexpr int kMaxSteps = 20'000'000;

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) embedded pair on a generic state vector.
// ---------------------------------------------------------------------------

struct StepperState {
    Vec y;
    double t = 0;
};

template <typename Rhs>
bool dopri_step(const Rhs& rhs, const Vec& y0, double h, Vec& y5, double& err, double tol) {
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Vec k1 = rhs(y0);
    Vec k2 = rhs(y0 + h * (a21 * k1));
    Vec k3 = rhs(y0 + h * (a31 * k1 + a32 * k2));
    Vec k4 = rhs(y0 + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Vec k5 = rhs(y0 + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Vec k6 = rhs(y0 + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y5 = y0 + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    Vec k7 = rhs(y5);
    Vec ediff = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    if (!y5.allFinite()) return false;
    double acc = 0;
    for (int i = 0; i < y0.size(); ++i) {
        double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(y5[i]));
        double q = ediff[i] / sc;
        acc += q * q;
    }
    err = std::sqrt(acc / static_cast<double>(y0.size()));
    return true;
}

// Integrate dy = f(y) from t=0 to t=T (signed). `inside` checks the base-point
// part; on exit the step is bisected to land on the boundary.
template <typename Rhs, typename Inside, typename Observe>
FlowStatus integrate_adaptive(const Rhs& rhs, Vec& y, double T, double tol,
                              const Inside& inside, const Observe& observe, double& t_reached) {
    t_reached = 0;
    if (T == 0) return FlowStatus::ok;
    const double sgn = T > 0 ? 1.0 : -1.0;
    double t = 0;
    double h = sgn * std::min(1e-3, std::abs(T));
    int steps = 0;
    observe(y);
    while (sgn * (T - t) > 0) {
        if (++steps > kMaxSteps) return FlowStatus::failed;
        if (sgn * (t + h) > sgn * T) h = T - t;
        Vec y5;
        double err;
        if (!dopri_step(rhs, y, h, y5, err, tol)) {
            h *= 0.5;
            if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) return FlowStatus::failed;
            continue;
        }
        if (err <= 1.0) {
            if (!inside(y5)) {
                // bisect the step size to land on the domain boundary
                double lo = 0, hi_l = h;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi_l);
                    Vec ym;
                    double e2;
                    dopri_step(rhs, y, mid, ym, e2, tol);
                    if (inside(ym)) lo = mid;
                    else hi_l = mid;
                }
                Vec yb;
                double e2;
                dopri_step(rhs, y, lo, yb, e2, tol);
                y = yb;
                t += lo;
                t_reached = t;
                observe(y);
                return FlowStatus::escaped;
            }
            y = y5;
            t += h;
            observe(y);
        }
        double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) return FlowStatus::failed;
    }
    t_reached = T;
    return FlowStatus::ok;
}

// ---------------------------------------------------------------------------
// Exact propagation on a single linear field with domain-exit detection.
// ---------------------------------------------------------------------------

// First exit time of origin + e^{A tau} w from `box` for tau in (0, T] (signed),
// probing at resolution dt then bisecting. Returns false if the orbit stays in.
bool linear_exit_time(const Mat& A, const Vec& origin, const Box& box, const Vec& w0, double T,
                      double& tau_exit) {
    const double sgn = T > 0 ? 1.0 : -1.0;
    const double aT = std::abs(T);
    // probe step limited by the fastest rate so a whole box crossing
    // cannot be skipped
    double rate = A.cwiseAbs().rowwise().sum().maxCoeff();
    double dt = std::min(aT, 0.05 / std::max(rate, 1e-6));
    dt = std::max(dt, aT * 1e-7);
    Mat E = (A * (sgn * dt)).exp();
    Vec w = w0;
    double s = 0;
    bool exited = false;
    double lo = 0, hi = 0;
    while (s < aT) {
        double step = std::min(dt, aT - s);
        Vec wn = (step == dt) ? Vec(E * w) : Vec((A * (sgn * step)).exp() * w);
        if (!box.contains(origin + wn)) {
            lo = s;
            hi = s + step;
            exited = true;
            break;
        }
        w = wn;
        s += step;
    }
    if (!exited) return false;
    Vec wlo = w;
    for (int it = 0; it < 80 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        Vec wm = (A * (sgn * (mid - lo))).exp() * wlo;
        if (box.contains(origin + wm)) {
            wlo = wm;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tau_exit = sgn * hi; // first parameter just outside (or on) the boundary
    return true;
}

FlowResult advance_linear(const VectorFieldSpec& spec, const Vec& x, const Mat* V, double t) {
    const Mat& A = *spec.linear_A;
    FlowResult r;
    r.min_field_norm = spec.evaluate(x).norm();
    double tau;
    double t_eff = t;
    if (linear_exit_time(A, Vec::Zero(spec.dim), spec.domain, x, t, tau)) {
        r.status = FlowStatus::escaped;
        t_eff = tau;
    }
    Mat E = (A * t_eff).exp();
    r.x = E * x;
    if (V) r.V = E * (*V);
    r.t_reached = t_eff;
    r.min_field_norm = std::min(r.min_field_norm, spec.evaluate(r.x).norm());
    return r;
}

// ---------------------------------------------------------------------------
// Chart-glued propagation: exact exponentials inside charts, affine jumps with
// saltation corrections at declared facet identifications.
// ---------------------------------------------------------------------------

// d(transition) acting on tangent vectors at a forward crossing p -> q:
// facet-tangent vectors map by M, the flow direction maps to the flow
// direction.
Mat saltation_matrix(const GluedChartFlow& g, const Transition& tr, const Vec& p, const Vec& q) {
    const Chart& cs = g.charts[tr.src.chart];
    const Chart& cd = g.charts[tr.dst.chart];
    const int d = cs.box.dim();
    Vec Xs = cs.A * (p - cs.origin);
    Vec Xd = cd.A * (q - cd.origin);
    Vec n = Vec::Zero(d);
    n[tr.src.axis] = static_cast<double>(tr.src.side);
    double denom = n.dot(Xs);
    if (std::abs(denom) < 1e-14)
        throw std::runtime_error("tangential facet crossing in chart flow");
    Mat P = Mat::Identity(d, d) - (Xs * n.transpose()) / denom;
    return tr.M * P + (Xd * n.transpose()) / denom;
}

// Solve q = tr(p) for p on the source facet; returns false if q is off the
// image (within tol) or p leaves the facet rectangle.
bool invert_transition(const GluedChartFlow& g, const Transition& tr, const Vec& q, Vec& p) {
    const Chart& cs = g.charts[tr.src.chart];
    const int d = cs.box.dim();
    std::vector<int> free_axes;
    for (int i = 0; i < d; ++i)
        if (i != tr.src.axis) free_axes.push_back(i);
    Vec p0 = cs.box.center();
    p0[tr.src.axis] = g.facet_coordinate(tr.src);
    Mat B(d, static_cast<int>(free_axes.size()));
    for (size_t j = 0; j < free_axes.size(); ++j) B.col(j) = tr.M.col(free_axes[j]);
    Vec rhs = q - tr.apply(p0);
    Vec s = B.colPivHouseholderQr().solve(rhs);
    if ((B * s - rhs).norm() > 1e-9 * std::max(1.0, q.norm())) return false;
    p = p0;
    for (size_t j = 0; j < free_axes.size(); ++j) p[free_axes[j]] += s[j];
    for (size_t j = 0; j < free_axes.size(); ++j) {
        int ax = free_axes[j];
        if (p[ax] < cs.box.lo[ax] - 1e-9 || p[ax] > cs.box.hi[ax] + 1e-9) return false;
    }
    return true;
}

FlowResult advance_charts(const VectorFieldSpec& spec, const Vec& x0, const Mat* V0, double T) {
    const GluedChartFlow& g = *spec.charts;
    const int d = spec.dim;
    FlowResult r;
    r.x = x0;
    if (V0) r.V = *V0;
    r.t_reached = 0;

    int cur = g.locate(x0, 1e-9);
    if (cur < 0) {
        r.status = FlowStatus::escaped;
        return r;
    }
    if (T == 0) {
        r.min_field_norm = (g.charts[cur].A * (x0 - g.charts[cur].origin)).norm();
        return r;
    }
    const double sgn = T > 0 ? 1.0 : -1.0;
    double s = 0;

    auto field_at = [&](int chart, const Vec& y) {
        return Vec(g.charts[chart].A * (y - g.charts[chart].origin));
    };
    r.min_field_norm = field_at(cur, x0).norm();

    for (int hop = 0; hop < 10000; ++hop) {
        const Chart& ch = g.charts[cur];
        double rem = T - s;
        double tau;
        if (!linear_exit_time(ch.A, ch.origin, ch.box, r.x - ch.origin, rem, tau)) {
            Mat E = (ch.A * rem).exp();
            r.x = ch.origin + E * (r.x - ch.origin);
            if (V0) r.V = E * r.V;
            r.t_reached = T;
            r.min_field_norm = std::min(r.min_field_norm, field_at(cur, r.x).norm());
            return r;
        }
        Mat E = (ch.A * tau).exp();
        r.x = ch.origin + E * (r.x - ch.origin);
        if (V0) r.V = E * r.V;
        s += tau;
        r.t_reached = s;
        r.min_field_norm = std::min(r.min_field_norm, field_at(cur, r.x).norm());

        // identify the facet being crossed: the most violated bound
        int axis = -1, side = 0;
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i) {
            double vl = ch.box.lo[i] - r.x[i];
            double vh = r.x[i] - ch.box.hi[i];
            double v = std::max(vl, vh);
            if (v > worst) {
                worst = v;
                axis = i;
                side = (vh > vl) ? +1 : -1;
            }
        }
        r.x[axis] = side > 0 ? ch.box.hi[axis] : ch.box.lo[axis]; // snap onto the facet

        if (sgn > 0) {
            const Transition* tr = g.transition_from(cur, axis, side);
            if (!tr) {
                r.status = FlowStatus::escaped;
                return r;
            }
            Vec q = tr->apply(r.x);
            if (V0) r.V = saltation_matrix(g, *tr, r.x, q) * r.V;
            r.x = q;
            cur = tr->dst.chart;
        } else {
            // backward crossing: the facet is an entry facet; continue through
            // the transition whose image contains the point, if any
            bool continued = false;
            for (const Transition* tr : g.transitions_into(cur, axis, side)) {
                Vec p;
                if (invert_transition(g, *tr, r.x, p)) {
                    if (V0) r.V = saltation_matrix(g, *tr, p, r.x).inverse() * r.V;
                    r.x = p;
                    cur = tr->src.chart;
                    continued = true;
                    break;
                }
            }
            if (!continued) {
                r.status = FlowStatus::escaped;
                return r;
            }
        }
        r.min_field_norm = std::min(r.min_field_norm, field_at(cur, r.x).norm());
    }
    r.status = FlowStatus::failed;
    return r;
}

// ---------------------------------------------------------------------------

FlowResult advance_smooth(const VectorFieldSpec& spec, const Vec& x, const Mat* V, double t,
                          double tol) {
    const int d = spec.dim;
    const int k = V ? static_cast<int>(V->cols()) : 0;
    Vec y(d + d * k);
    y.head(d) = x;
    for (int j = 0; j < k; ++j) y.segment(d + j * d, d) = V->col(j);

    auto rhs = [&](const Vec& s) {
        Vec ds(s.size());
        Vec base = s.head(d);
        ds.head(d) = spec.evaluate(base);
        if (k > 0) {
            Mat J = spec.jacobian(base);
            for (int j = 0; j < k; ++j) ds.segment(d + j * d, d) = J * s.segment(d + j * d, d);
        }
        return ds;
    };
    auto inside = [&](const Vec& s) { return spec.domain.contains(s.head(d)); };
    FlowResult r;
    r.min_field_norm = spec.evaluate(x).norm();
    auto observe = [&](const Vec& s) {
        r.min_field_norm = std::min(r.min_field_norm, spec.evaluate(s.head(d)).norm());
    };
    double t_reached;
    r.status = integrate_adaptive(rhs, y, t, tol, inside, observe, t_reached);
    r.t_reached = t_reached;
    r.x = y.head(d);
    if (k > 0) {
        r.V.resize(d, k);
        for (int j = 0; j < k; ++j) r.V.col(j) = y.segment(d + j * d, d);
    }
    return r;
}

} // namespace

FlowResult advance(const VectorFieldSpec& spec, const Vec& x, double t, double tol) {
    if (spec.is_chart_glued()) return advance_charts(spec, x, nullptr, t);
    if (spec.is_linear()) return advance_linear(spec, x, nullptr, t);
    return advance_smooth(spec, x, nullptr, t, tol);
}

FlowResult tangent_transport(const VectorFieldSpec& spec, const Vec& x, const Mat& V, double t,
                             double tol) {
    if (spec.is_chart_glued()) return advance_charts(spec, x, &V, t);
    if (spec.is_linear()) return advance_linear(spec, x, &V, t);
    return advance_smooth(spec, x, &V, t, tol);
}

TrajectorySample sample_trajectory(const VectorFieldSpec& spec, const Vec& x, double t_end,
                                   double dt_record, double tol) {
    TrajectorySample out;
    Vec cur = x;
    double t = 0;
    out.times.push_back(0);
    out.points.push_back(cur);
    const double sgn = t_end >= 0 ? 1.0 : -1.0;
    double dt = sgn * std::abs(dt_record);
    while (sgn * (t_end - t) > 1e-12) {
        double step = sgn * std::min(std::abs(dt), std::abs(t_end - t));
        FlowResult r = advance(spec, cur, step, tol);
        t += r.t_reached;
        cur = r.x;
        out.times.push_back(t);
        out.points.push_back(cur);
        if (r.status != FlowStatus::ok) {
            out.status = r.status;
            break;
        }
    }
    return out;
}

} // namespace singhyp
