#ifndef SINGHYP_CHARTS_HPP
#define SINGHYP_CHARTS_HPP

#include "singhyp/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace singhyp {

// A chart carries the linear field xdot = A (x - origin) on an axis-aligned box.
struct Chart {
    Box box;
    Vec origin; // equilibrium of the local field, inside box
    Mat A;
};

// Oriented facet of a chart box: {x : x[axis] = side>0 ? hi[axis] : lo[axis]}.
struct Facet {
    int chart = -1;
    int axis = 0;
    int side = +1;
};

// Affine identification of an exit facet of one chart with part of an entry
// facet of another. `map` acts on global coordinates; only its restriction to
// the source facet plane is meaningful.
struct Transition {
    Facet src;
    Facet dst;
    Mat M;
    Vec b;

    Vec apply(const Vec& p) const { return M * p + b; }
};

// One leg of a declared heteroclinic orbit: the exact orbit inside `chart`
// from `start` to `end`.  A leg may begin or end at the chart equilibrium
// (asymptotic end of the connection).
struct ConnectionLeg {
    int chart = -1;
    Vec start;
    Vec end;
    bool starts_at_equilibrium = false;
    bool ends_at_equilibrium = false;
};

struct Connection {
    std::string name;
    std::vector<ConnectionLeg> legs;
};

/// Piecewise-linear flow glued from linear charts along facet identifications.
/// Orbits propagate by exact matrix exponentials inside charts and jump by the
/// affine transition maps at declared facets; exiting an undeclared facet means
/// leaving the flow's domain.
class GluedChartFlow {
public:
    std::vector<Chart> charts;
    std::vector<Transition> transitions;
    std::vector<Connection> connections;

    int dim() const { return charts.empty() ? 0 : charts.front().box.dim(); }

    // Chart containing x, preferring strict interiors. -1 if none.
    int locate(const Vec& x, double slack = 1e-12) const {
        for (size_t i = 0; i < charts.size(); ++i)
            if (charts[i].box.contains(x, slack)) return static_cast<int>(i);
        return -1;
    }

    const Transition* transition_from(int chart, int axis, int side) const {
        for (const auto& t : transitions)
            if (t.src.chart == chart && t.src.axis == axis && t.src.side == side)
                return &t;
        return nullptr;
    }

    // Transitions landing on the given facet (used for backward continuation).
    std::vector<const Transition*> transitions_into(int chart, int axis, int side) const {
        std::vector<const Transition*> out;
        for (const auto& t : transitions)
            if (t.dst.chart == chart && t.dst.axis == axis && t.dst.side == side)
                out.push_back(&t);
        return out;
    }

    double facet_coordinate(const Facet& f) const {
        const Box& b = charts[f.chart].box;
        return f.side > 0 ? b.hi[f.axis] : b.lo[f.axis];
    }

    Box bounding_box() const {
        Vec lo = charts.front().box.lo, hi = charts.front().box.hi;
        for (const auto& c : charts) {
            lo = lo.cwiseMin(c.box.lo);
            hi = hi.cwiseMax(c.box.hi);
        }
        return Box(lo, hi);
    }

    void validate() const;
};

// The builtin two-singularity cycle model: a pair of 3-d linear charts with
// spectra diag(-3,-1,2) and diag(-2,1,3), glued so that the unstable axis of
// the first equilibrium lands on the stable axis of the second, and the weak
// unstable axis of the second returns (two branches) into the stable plane of
// the first.  Declared connections: a (sigma0 -> sigma1), b and c (returns).
GluedChartFlow builtin_cycle_charts();

} // namespace singhyp

#endif
