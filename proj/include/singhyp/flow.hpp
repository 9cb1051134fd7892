#ifndef SINGHYP_FLOW_HPP
#define SINGHYP_FLOW_HPP

#include "singhyp/fields.hpp"

#include <optional>
#include <vector>

namespace singhyp {

inline constexpr double kDefaultTol = 1e-9;

enum class FlowStatus { ok, escaped, failed };

/// Result of advancing the base flow (and optionally a tangent frame).
/// On `escaped`, `x`/`V` hold the state at the domain-exit time `t_reached`.
struct FlowResult {
    FlowStatus status = FlowStatus::ok;
    Vec x;
    Mat V;               // d x k transported frame (when requested)
    double t_reached = 0; // signed time actually covered
    double min_field_norm = std::numeric_limits<double>::infinity(); // over the orbit
};

/// phi^t(x). Exact matrix exponentials on linear/chart fields, adaptive
/// embedded Runge-Kutta elsewhere (local error <= tol).
FlowResult advance(const VectorFieldSpec& spec, const Vec& x, double t,
                   double tol = kDefaultTol);

/// (phi^t(x), Dphi^t(x) V) by the variational equation alongside the base flow.
FlowResult tangent_transport(const VectorFieldSpec& spec, const Vec& x, const Mat& V,
                             double t, double tol = kDefaultTol);

/// Sampled trajectory: times (increasing for t>0), points, optional frames.
struct TrajectorySample {
    std::vector<double> times;
    std::vector<Vec> points;
    std::vector<Mat> frames;
    FlowStatus status = FlowStatus::ok;
};

TrajectorySample sample_trajectory(const VectorFieldSpec& spec, const Vec& x,
                                   double t_end, double dt_record,
                                   double tol = kDefaultTol);

} // namespace singhyp

#endif
