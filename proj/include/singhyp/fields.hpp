#ifndef SINGHYP_FIELDS_HPP
#define SINGHYP_FIELDS_HPP

#include "singhyp/charts.hpp"
#include "singhyp/geometry.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace singhyp {

inline constexpr double kZeroTol = 1e-9;  // eigenvalue real parts below this count as zero
inline constexpr double kSingTol = 1e-8;  // |X(x)| below this means "at a singularity"

/// Hyperbolic (or not) zero of a vector field with its linearization data.
struct Singularity {
    Vec position;
    std::vector<std::complex<double>> eigenvalues; // sorted by real part, ascending
    int index = 0;                                 // count of eigenvalues with negative real part
    bool hyperbolic = false;
};

/// A smooth or chart-glued vector field on a box in R^d, with its Jacobian and
/// a registry of singularities.  Immutable after construction; safe to share
/// across threads.
class VectorFieldSpec {
public:
    int dim = 0;
    Box domain;
    std::string name;
    std::function<Vec(const Vec&)> eval_fn;
    std::function<Mat(const Vec&)> jac_fn; // empty -> central finite differences
    std::vector<Singularity> singularities;
    std::optional<Mat> linear_A;                  // set for globally linear fields
    std::shared_ptr<const GluedChartFlow> charts; // set for chart-glued flows

    Vec evaluate(const Vec& x) const;
    Mat jacobian(const Vec& x) const;

    bool is_linear() const { return linear_A.has_value(); }
    bool is_chart_glued() const { return charts != nullptr; }

    // Distance from x to the nearest registered singularity (inf if none).
    double singularity_distance(const Vec& x) const;
};

// Eigen-decompose jacobian(position), sort by real part, count the index and
// decide hyperbolicity at kZeroTol.
Singularity make_singularity(const VectorFieldSpec& spec, const Vec& position);

// x |-> A x, singularity at the origin. Rejects non-finite entries.
VectorFieldSpec builtin_linear(const Mat& A, double domain_halfwidth = 10.0);

// Classical Lorenz field; registers the origin always and the two wing
// equilibria when rho > 1.
VectorFieldSpec builtin_lorenz(double sigma_p, double rho, double beta);

// Planar field rdot = r(1-r^2), thetadot = 1 in Cartesian coordinates.
// Unit circle is a hyperbolic periodic orbit (period 2*pi, normal Floquet
// exponent -2); the origin is a source.
VectorFieldSpec builtin_limit_cycle();

// Gradient-like planar field (x - x^3, -y): sinks at (+-1,0), saddle at 0.
VectorFieldSpec builtin_double_well();

// Wraps builtin_cycle_charts() as a VectorFieldSpec (field defined on the
// union of chart boxes; undefined in between).
VectorFieldSpec builtin_cycle_model();

// Lookup by CLI name: linear | lorenz | limit-cycle | double-well | cycle-model.
VectorFieldSpec builtin_by_name(const std::string& name);

} // namespace singhyp

#endif
