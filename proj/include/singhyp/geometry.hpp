#ifndef SINGHYP_GEOMETRY_HPP
#define SINGHYP_GEOMETRY_HPP

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

namespace singhyp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box in R^d.
struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size())
            throw std::invalid_argument("Box: lo/hi dimension mismatch");
        for (int i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i]))
                throw std::invalid_argument("Box: lo must be strictly below hi");
    }

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Vec& x, double slack = 0.0) const {
        for (int i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
        return true;
    }

    Vec center() const { return 0.5 * (lo + hi); }
    Vec widths() const { return hi - lo; }

    // Euclidean distance from x to the box (0 if inside).
    double distance(const Vec& x) const {
        double d2 = 0.0;
        for (int i = 0; i < lo.size(); ++i) {
            double e = 0.0;
            if (x[i] < lo[i]) e = lo[i] - x[i];
            else if (x[i] > hi[i]) e = x[i] - hi[i];
            d2 += e * e;
        }
        return std::sqrt(d2);
    }

    // Distance from an interior point to the boundary (minimum over faces).
    double boundary_distance(const Vec& x) const {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < lo.size(); ++i) {
            d = std::min(d, x[i] - lo[i]);
            d = std::min(d, hi[i] - x[i]);
        }
        return d;
    }

    bool contains_box(const Box& inner) const {
        return contains(inner.lo) && contains(inner.hi);
    }
};

inline Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
    Vec l(static_cast<int>(lo.size())), h(static_cast<int>(hi.size()));
    int i = 0;
    for (double v : lo) l[i++] = v;
    i = 0;
    for (double v : hi) h[i++] = v;
    return Box(l, h);
}

inline Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

} // namespace singhyp

#endif
