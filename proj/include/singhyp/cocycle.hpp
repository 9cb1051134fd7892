#ifndef SINGHYP_COCYCLE_HPP
#define SINGHYP_COCYCLE_HPP

#include "singhyp/poincare.hpp"

#include <functional>
#include <optional>

namespace singhyp {

/// Adapted-metric data for one singularity: the ball U around it, balls V
/// around all the other singularities, and the bump that rescales the metric
/// so the field has unit adapted norm away from all of them.
///
/// xi is 1 outside the balls, 0 on the concentric half-radius balls, and a
/// cubic smoothstep on each radial annulus.  The adapted norm of the field is
/// |X|_ad = xi + (1 - xi)|X|, which extends continuously by the plain norm at
/// the singularities and equals 1 wherever xi = 1.
struct MetricAdapter {
    int sigma_index = -1;
    Vec sigma_pos;
    double r_U = 0;
    std::vector<std::pair<Vec, double>> v_balls;

    double xi(const Vec& x) const;
    double field_norm_adapted(const VectorFieldSpec& spec, const Vec& x) const;
    bool in_U(const Vec& x) const { return (x - sigma_pos).norm() < r_U; }
};

/// Default-radius adapter: r_U = half of min(pairwise singularity distance,
/// distance to the domain boundary), overridable; V-balls at 0.8 of the same
/// formula evaluated at the other singularities, shrunk if needed to keep the
/// balls disjoint from U.
MetricAdapter make_adapter(const VectorFieldSpec& spec, int sigma_index,
                           std::optional<double> r_U_override = std::nullopt);

/// A finite set of singularities with exponents (default 1) and one adapter
/// each, defining the product cocycle  h^t = prod_sigma h_sigma^t ^ alpha.
struct CocycleSpec {
    struct Term {
        int sigma_index;
        double alpha = 1.0;
        MetricAdapter adapter;
    };
    std::vector<Term> terms;
};

CocycleSpec make_cocycle(const VectorFieldSpec& spec, const std::vector<int>& sigma_indices,
                         double alpha = 1.0);

struct LogCocycleValue {
    FlowStatus status = FlowStatus::ok;
    double log_value = 0;
};

/// Evaluator type shared by cocycles and coboundaries: (L, t) -> log h^t(L).
using LogCocycle = std::function<LogCocycleValue(const ProjectivePoint&, double)>;

/// log h_sigma^t(L), the five-case cocycle of the adapter's singularity:
///  - both base endpoints outside U: 0
///  - leaving U: -log |X(x)|_ad ; entering U: +log |X(phi^t x)|_ad
///  - both inside: log of the adapted-norm ratio
///  - based at the singularity itself: log |Dphi^t u| / |u|.
LogCocycleValue log_h_sigma(const VectorFieldSpec& spec, const MetricAdapter& adapter,
                            const ProjectivePoint& L, double t, double tol = kDefaultTol);

/// Endpoint form used when the orbit data is already known.  For section
/// anchors, log|X(x1)| can underflow when the orbit converges onto the
/// adapter's singularity; pass `log_X_end` = log|X(x0)| + log of the section
/// direction growth (an exact identity, accumulated without underflow) to
/// evaluate those cases robustly.
double log_h_sigma_endpoints(const VectorFieldSpec& spec, const MetricAdapter& adapter,
                             const Vec& x0, const Vec& x1, bool based_at_sigma,
                             double log_dir_growth,
                             double log_X_end = std::numeric_limits<double>::quiet_NaN());

/// log of prod h_sigma^alpha.
LogCocycleValue log_h_product(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                              const ProjectivePoint& L, double t, double tol = kDefaultTol);

LogCocycle make_log_h(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                      double tol = kDefaultTol);

/// Coboundary of a positive function g on the projective bundle:
/// h^t(L) = g(phi_P^t L) / g(L).
LogCocycle make_coboundary(const VectorFieldSpec& spec,
                           std::function<double(const ProjectivePoint&)> g,
                           double tol = kDefaultTol);

/// |log h^{t+s}(L) - log h^t(phi_P^s L) - log h^s(L)|.
struct RelationResidual {
    FlowStatus status = FlowStatus::ok;
    double residual = 0;
};
RelationResidual verify_cocycle_relation(const VectorFieldSpec& spec, const LogCocycle& h,
                                         const ProjectivePoint& L, double t, double s,
                                         double tol = kDefaultTol);

/// Shared-orbit form for product cocycles: all three factors are evaluated
/// along one computed orbit x -> phi^s(x) -> phi^{t+s}(x), so the residual
/// measures the five-case algebra (and transport composition at singular
/// anchors) rather than the divergence of independently integrated chaotic
/// orbits.
RelationResidual verify_cocycle_relation(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                                         const ProjectivePoint& L, double t, double s,
                                         double tol = kDefaultTol);

/// h^period at S_X(orbit_point); contract: 1 for any product of singularity
/// cocycles whose U-balls the orbit avoids.  `entered_ball` reports a
/// precondition violation (the orbit met a U-ball).
struct PeriodValue {
    FlowStatus status = FlowStatus::ok;
    double value = 1.0;
    bool entered_ball = false;
};
PeriodValue period_value(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                         const Vec& orbit_point, double period, double tol = kDefaultTol);

} // namespace singhyp

#endif
