#include "singhyp/cocycle.hpp"

#include <cmath>

namespace singhyp {

namespace {

// cubic smoothstep from 0 (rho <= r/2) to 1 (rho >= r)
double bump_profile(double rho, double r) {
    if (rho >= r) return 1.0;
    if (rho <= 0.5 * r) return 0.0;
    double tau = (rho - 0.5 * r) / (0.5 * r);
    return tau * tau * (3.0 - 2.0 * tau);
}

} // namespace

double MetricAdapter::xi(const Vec& x) const {
    double v = bump_profile((x - sigma_pos).norm(), r_U);
    for (const auto& [c, r] : v_balls) v *= bump_profile((x - c).norm(), r);
    return v;
}

double MetricAdapter::field_norm_adapted(const VectorFieldSpec& spec, const Vec& x) const {
    double s = xi(x);
    return s + (1.0 - s) * spec.evaluate(x).norm();
}

MetricAdapter make_adapter(const VectorFieldSpec& spec, int sigma_index,
                           std::optional<double> r_U_override) {
    const auto& sings = spec.singularities;
    if (sigma_index < 0 || sigma_index >= static_cast<int>(sings.size()))
        throw std::invalid_argument("make_adapter: no such singularity");

    auto base_radius = [&](const Vec& p) {
        double m = spec.domain.boundary_distance(p);
        for (const auto& s : sings) {
            double d = (p - s.position).norm();
            if (d > 0) m = std::min(m, d);
        }
        return 0.5 * m;
    };

    MetricAdapter a;
    a.sigma_index = sigma_index;
    a.sigma_pos = sings[static_cast<size_t>(sigma_index)].position;
    a.r_U = r_U_override ? *r_U_override : base_radius(a.sigma_pos);
    if (!(a.r_U > 0)) throw std::invalid_argument("make_adapter: nonpositive U radius");

    for (size_t i = 0; i < sings.size(); ++i) {
        if (static_cast<int>(i) == sigma_index) continue;
        const Vec& p = sings[i].position;
        double gap = (p - a.sigma_pos).norm() - a.r_U;
        if (gap <= 0)
            throw std::invalid_argument("make_adapter: U ball swallows another singularity");
        double r = std::min(0.8 * base_radius(p), 0.9 * gap);
        if (!(r > 0)) throw std::invalid_argument("make_adapter: cannot separate V ball");
        a.v_balls.emplace_back(p, r);
    }
    return a;
}

CocycleSpec make_cocycle(const VectorFieldSpec& spec, const std::vector<int>& sigma_indices,
                         double alpha) {
    CocycleSpec c;
    for (int idx : sigma_indices)
        c.terms.push_back({idx, alpha, make_adapter(spec, idx)});
    return c;
}

double log_h_sigma_endpoints(const VectorFieldSpec& spec, const MetricAdapter& adapter,
                             const Vec& x0, const Vec& x1, bool based_at_sigma,
                             double log_dir_growth, double log_X_end) {
    if (based_at_sigma) {
        // based at a zero of X: the projective derivative growth if it is the
        // adapter's own singularity, 1 otherwise (the point never enters U)
        if ((x0 - adapter.sigma_pos).norm() < kSingTol) return log_dir_growth;
        return 0.0;
    }
    const bool in0 = adapter.in_U(x0);
    const bool in1 = adapter.in_U(x1);
    auto log_norm_end = [&]() {
        double xi = adapter.xi(x1);
        double direct = spec.evaluate(x1).norm();
        if (xi == 0.0 && direct < 1e-12 && std::isfinite(log_X_end))
            return log_X_end; // orbit collapsed onto the singularity numerically
        return std::log(xi + (1.0 - xi) * direct);
    };
    if (!in0 && !in1) return 0.0;
    if (in0 && !in1) return -std::log(adapter.field_norm_adapted(spec, x0));
    if (!in0 && in1) return log_norm_end();
    return log_norm_end() - std::log(adapter.field_norm_adapted(spec, x0));
}

LogCocycleValue log_h_sigma(const VectorFieldSpec& spec, const MetricAdapter& adapter,
                            const ProjectivePoint& L, double t, double tol) {
    LogCocycleValue out;
    const bool at_sigma = spec.evaluate(L.x).norm() <= kSingTol;
    if (at_sigma) {
        ProjTransport pt = projective_advance(spec, L, t, tol);
        out.status = pt.status;
        if (pt.status == FlowStatus::failed) return out;
        out.log_value = log_h_sigma_endpoints(spec, adapter, L.x, L.x, true, pt.log_dir_growth);
        return out;
    }
    FlowResult r = advance(spec, L.x, t, tol);
    out.status = r.status;
    if (r.status != FlowStatus::ok) return out;
    out.log_value = log_h_sigma_endpoints(spec, adapter, L.x, r.x, false, 0.0);
    return out;
}

LogCocycleValue log_h_product(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                              const ProjectivePoint& L, double t, double tol) {
    LogCocycleValue out;
    if (cspec.terms.empty()) return out;

    const bool at_sigma = spec.evaluate(L.x).norm() <= kSingTol;
    double log_dir_growth = 0;
    Vec x1 = L.x;
    if (at_sigma) {
        ProjTransport pt = projective_advance(spec, L, t, tol);
        if (pt.status == FlowStatus::failed) {
            out.status = pt.status;
            return out;
        }
        log_dir_growth = pt.log_dir_growth;
    } else {
        FlowResult r = advance(spec, L.x, t, tol);
        if (r.status != FlowStatus::ok) {
            out.status = r.status;
            return out;
        }
        x1 = r.x;
    }
    for (const auto& term : cspec.terms)
        out.log_value += term.alpha * log_h_sigma_endpoints(spec, term.adapter, L.x, x1,
                                                            at_sigma, log_dir_growth);
    return out;
}

LogCocycle make_log_h(const VectorFieldSpec& spec, const CocycleSpec& cspec, double tol) {
    return [&spec, cspec, tol](const ProjectivePoint& L, double t) {
        return log_h_product(spec, cspec, L, t, tol);
    };
}

LogCocycle make_coboundary(const VectorFieldSpec& spec,
                           std::function<double(const ProjectivePoint&)> g, double tol) {
    return [&spec, g, tol](const ProjectivePoint& L, double t) {
        LogCocycleValue out;
        double g0 = g(L);
        if (!(g0 > 0)) throw std::domain_error("coboundary: g must be positive");
        ProjTransport pt = projective_advance(spec, L, t, tol);
        out.status = pt.status;
        if (pt.status != FlowStatus::ok) return out;
        double g1 = g(pt.anchor);
        if (!(g1 > 0)) throw std::domain_error("coboundary: g must be positive");
        out.log_value = std::log(g1) - std::log(g0);
        return out;
    };
}

RelationResidual verify_cocycle_relation(const VectorFieldSpec& spec, const LogCocycle& h,
                                         const ProjectivePoint& L, double t, double s,
                                         double tol) {
    RelationResidual out;
    LogCocycleValue hs = h(L, s);
    LogCocycleValue hts = h(L, t + s);
    if (hs.status != FlowStatus::ok || hts.status != FlowStatus::ok) {
        out.status = hs.status != FlowStatus::ok ? hs.status : hts.status;
        return out;
    }
    ProjTransport mid = projective_advance(spec, L, s, tol);
    if (mid.status != FlowStatus::ok) {
        out.status = mid.status;
        return out;
    }
    LogCocycleValue ht = h(mid.anchor, t);
    if (ht.status != FlowStatus::ok) {
        out.status = ht.status;
        return out;
    }
    out.residual = std::abs(hts.log_value - ht.log_value - hs.log_value);
    return out;
}

RelationResidual verify_cocycle_relation(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                                         const ProjectivePoint& L, double t, double s,
                                         double tol) {
    RelationResidual out;
    const bool at_sigma = spec.evaluate(L.x).norm() <= kSingTol;
    if (at_sigma) {
        ProjTransport g1 = projective_advance(spec, L, s, tol);
        if (g1.status != FlowStatus::ok) {
            out.status = g1.status;
            return out;
        }
        ProjTransport g2 = projective_advance(spec, g1.anchor, t, tol);
        ProjTransport g3 = projective_advance(spec, L, t + s, tol);
        if (g2.status != FlowStatus::ok || g3.status != FlowStatus::ok) {
            out.status = g2.status != FlowStatus::ok ? g2.status : g3.status;
            return out;
        }
        double lv = 0;
        for (const auto& term : cspec.terms) {
            bool own = (L.x - term.adapter.sigma_pos).norm() < kSingTol;
            if (!own) continue;
            lv += term.alpha *
                  (g3.log_dir_growth - g2.log_dir_growth - g1.log_dir_growth);
        }
        out.residual = std::abs(lv);
        return out;
    }
    FlowResult mid = advance(spec, L.x, s, tol);
    if (mid.status != FlowStatus::ok) {
        out.status = mid.status;
        return out;
    }
    FlowResult end = advance(spec, mid.x, t, tol);
    if (end.status != FlowStatus::ok) {
        out.status = end.status;
        return out;
    }
    double ls = 0, lt = 0, lts = 0;
    for (const auto& term : cspec.terms) {
        ls += term.alpha * log_h_sigma_endpoints(spec, term.adapter, L.x, mid.x, false, 0);
        lt += term.alpha * log_h_sigma_endpoints(spec, term.adapter, mid.x, end.x, false, 0);
        lts += term.alpha * log_h_sigma_endpoints(spec, term.adapter, L.x, end.x, false, 0);
    }
    out.residual = std::abs(lts - lt - ls);
    return out;
}

PeriodValue period_value(const VectorFieldSpec& spec, const CocycleSpec& cspec,
                         const Vec& orbit_point, double period, double tol) {
    PeriodValue out;
    // precondition scan: the closed orbit must avoid all U balls
    const int n_scan = 256;
    Vec x = orbit_point;
    for (int i = 0; i < n_scan; ++i) {
        for (const auto& term : cspec.terms)
            if (term.adapter.in_U(x)) out.entered_ball = true;
        FlowResult r = advance(spec, x, period / n_scan, tol);
        if (r.status != FlowStatus::ok) {
            out.status = r.status;
            return out;
        }
        x = r.x;
    }
    ProjectivePoint L = section_of_field(spec, orbit_point);
    LogCocycleValue v = log_h_product(spec, cspec, L, period, tol);
    out.status = v.status;
    out.value = std::exp(v.log_value);
    return out;
}

} // namespace singhyp
