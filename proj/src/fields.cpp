#include "singhyp/fields.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace singhyp {

Vec VectorFieldSpec::evaluate(const Vec& x) const {
    return eval_fn(x);
}

Mat VectorFieldSpec::jacobian(const Vec& x) const {
    if (jac_fn) return jac_fn(x);
    // Central differences, step 1e-6 * (1 + |x|).
    const double h = 1e-6 * (1.0 + x.norm());
    Mat J(dim, dim);
    Vec xp = x, xm = x;
    for (int j = 0; j < dim; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        J.col(j) = (eval_fn(xp) - eval_fn(xm)) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return J;
}

double VectorFieldSpec::singularity_distance(const Vec& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : singularities) d = std::min(d, (x - s.position).norm());
    return d;
}

Singularity make_singularity(const VectorFieldSpec& spec, const Vec& position) {
    Singularity s;
    s.position = position;
    Eigen::EigenSolver<Mat> es(spec.jacobian(position));
    for (int i = 0; i < spec.dim; ++i) s.eigenvalues.push_back(es.eigenvalues()[i]);
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() < b.real();
                  return a.imag() < b.imag();
              });
    s.index = 0;
    s.hyperbolic = true;
    for (const auto& ev : s.eigenvalues) {
        if (ev.real() < 0) ++s.index;
        if (std::abs(ev.real()) < kZeroTol) s.hyperbolic = false;
    }
    return s;
}

VectorFieldSpec builtin_linear(const Mat& A, double domain_halfwidth) {
    if (A.rows() != A.cols()) throw std::invalid_argument("builtin_linear: A must be square");
    if (!A.allFinite()) throw std::invalid_argument("builtin_linear: non-finite entries");
    VectorFieldSpec spec;
    spec.dim = static_cast<int>(A.rows());
    spec.name = "linear";
    spec.linear_A = A;
    Vec lo = Vec::Constant(spec.dim, -domain_halfwidth);
    Vec hi = Vec::Constant(spec.dim, domain_halfwidth);
    spec.domain = Box(lo, hi);
    Mat Ac = A;
    spec.eval_fn = [Ac](const Vec& x) { return Vec(Ac * x); };
    spec.jac_fn = [Ac](const Vec&) { return Ac; };
    spec.singularities.push_back(make_singularity(spec, Vec::Zero(spec.dim)));
    return spec;
}

VectorFieldSpec builtin_lorenz(double sigma_p, double rho, double beta) {
    if (!(sigma_p > 0) || !(rho > 0) || !(beta > 0))
        throw std::invalid_argument("builtin_lorenz: parameters must be positive");
    VectorFieldSpec spec;
    spec.dim = 3;
    spec.name = "lorenz";
    spec.domain = make_box({-60, -60, -30}, {60, 60, 90});
    spec.eval_fn = [=](const Vec& x) {
        Vec f(3);
        f[0] = sigma_p * (x[1] - x[0]);
        f[1] = x[0] * (rho - x[2]) - x[1];
        f[2] = x[0] * x[1] - beta * x[2];
        return f;
    };
    spec.jac_fn = [=](const Vec& x) {
        Mat J(3, 3);
        J << -sigma_p, sigma_p, 0.0,
             rho - x[2], -1.0, -x[0],
             x[1], x[0], -beta;
        return J;
    };
    spec.singularities.push_back(make_singularity(spec, Vec::Zero(3)));
    if (rho > 1) {
        const double r = std::sqrt(beta * (rho - 1));
        spec.singularities.push_back(make_singularity(spec, vec3(r, r, rho - 1)));
        spec.singularities.push_back(make_singularity(spec, vec3(-r, -r, rho - 1)));
    }
    return spec;
}

VectorFieldSpec builtin_limit_cycle() {
    VectorFieldSpec spec;
    spec.dim = 2;
    spec.name = "limit-cycle";
    spec.domain = make_box({-8, -8}, {8, 8});
    // rdot = r(1 - r^2), thetadot = 1:
    //   xdot = x(1 - r^2) - y,  ydot = y(1 - r^2) + x
    spec.eval_fn = [](const Vec& p) {
        const double r2 = p[0] * p[0] + p[1] * p[1];
        Vec f(2);
        f[0] = p[0] * (1.0 - r2) - p[1];
        f[1] = p[1] * (1.0 - r2) + p[0];
        return f;
    };
    spec.jac_fn = [](const Vec& p) {
        const double x = p[0], y = p[1];
        const double r2 = x * x + y * y;
        Mat J(2, 2);
        J << 1.0 - r2 - 2.0 * x * x, -2.0 * x * y - 1.0,
             -2.0 * x * y + 1.0, 1.0 - r2 - 2.0 * y * y;
        return J;
    };
    spec.singularities.push_back(make_singularity(spec, Vec::Zero(2)));
    return spec;
}

VectorFieldSpec builtin_double_well() {
    VectorFieldSpec spec;
    spec.dim = 2;
    spec.name = "double-well";
    spec.domain = make_box({-8, -8}, {8, 8});
    spec.eval_fn = [](const Vec& p) {
        Vec f(2);
        f[0] = p[0] - p[0] * p[0] * p[0];
        f[1] = -p[1];
        return f;
    };
    spec.jac_fn = [](const Vec& p) {
        Mat J(2, 2);
        J << 1.0 - 3.0 * p[0] * p[0], 0.0,
             0.0, -1.0;
        return J;
    };
    spec.singularities.push_back(make_singularity(spec, Vec::Zero(2)));
    spec.singularities.push_back(make_singularity(spec, vec2(1, 0)));
    spec.singularities.push_back(make_singularity(spec, vec2(-1, 0)));
    return spec;
}

VectorFieldSpec builtin_cycle_model() {
    VectorFieldSpec spec;
    spec.dim = 3;
    spec.name = "cycle-model";
    auto glued = std::make_shared<GluedChartFlow>(builtin_cycle_charts());
    glued->validate();
    spec.charts = glued;
    spec.domain = glued->bounding_box();
    auto g = spec.charts;
    spec.eval_fn = [g](const Vec& x) {
        int c = g->locate(x);
        if (c < 0) throw std::domain_error("cycle-model: point outside all charts");
        return Vec(g->charts[c].A * (x - g->charts[c].origin));
    };
    spec.jac_fn = [g](const Vec& x) {
        int c = g->locate(x);
        if (c < 0) throw std::domain_error("cycle-model: point outside all charts");
        return g->charts[c].A;
    };
    for (const auto& c : glued->charts)
        spec.singularities.push_back(make_singularity(spec, c.origin));
    return spec;
}

VectorFieldSpec builtin_by_name(const std::string& name) {
    if (name == "lorenz") return builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
    if (name == "limit-cycle") return builtin_limit_cycle();
    if (name == "double-well") return builtin_double_well();
    if (name == "cycle-model") return builtin_cycle_model();
    if (name == "linear-sink") {
        Mat A = Mat::Zero(3, 3);
        A.diagonal() << -2.0, -1.5, -1.0;
        return builtin_linear(A);
    }
    if (name == "linear-saddle") {
        Mat A = Mat::Zero(3, 3);
        A.diagonal() << -2.0, -1.0, 1.0;
        return builtin_linear(A);
    }
    throw std::invalid_argument("unknown builtin flow: " + name);
}

} // namespace singhyp
