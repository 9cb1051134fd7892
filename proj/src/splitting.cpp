#include "singhyp/splitting.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace singhyp {

namespace {

bool re_equal(double a, double b) {
    return std::abs(a - b) <= kEigTol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

SingularityClass classify_singularity(const VectorFieldSpec& spec, int sigma_index) {
    const auto& s = spec.singularities.at(static_cast<size_t>(sigma_index));
    SingularityClass c;
    c.sigma_index = sigma_index;
    for (const auto& ev : s.eigenvalues) c.re_eigs.push_back(ev.real());
    c.index = s.index;
    c.hyperbolic = s.hyperbolic;
    if (!c.hyperbolic) return c;

    const int d = spec.dim;
    const int si = c.index;
    if (si >= 1 && si <= d - 1) {
        c.saddle_value = c.re_eigs[static_cast<size_t>(si - 1)] + c.re_eigs[static_cast<size_t>(si)];
        c.saddle_value_defined = true;
    }
    if (!c.saddle_value_defined) return c;

    const bool stable_pair = si >= 2 && re_equal(c.re_eigs[static_cast<size_t>(si - 2)],
                                                 c.re_eigs[static_cast<size_t>(si - 1)]);
    const bool unstable_pair = si + 1 < d && re_equal(c.re_eigs[static_cast<size_t>(si)],
                                                      c.re_eigs[static_cast<size_t>(si + 1)]);
    c.lorenz_like = true;
    if (stable_pair && unstable_pair) c.lorenz_like = false;
    if (stable_pair && !(c.saddle_value < 0)) c.lorenz_like = false;
    if (unstable_pair && !(c.saddle_value > 0)) c.lorenz_like = false;
    if (!stable_pair && !unstable_pair && re_equal(c.saddle_value, 0)) c.lorenz_like = false;

    if (c.lorenz_like) {
        if (c.saddle_value > 0) {
            c.strong_dim = si - 1;       // G^ss
            c.center_block_dim = d - si + 1; // G^cu
        } else {
            c.strong_dim = d - si - 1;   // G^uu
            c.center_block_dim = si + 1; // G^cs
        }
    }
    return c;
}

Mat invariant_subspace(const VectorFieldSpec& spec, int sigma_index, int i_lo, int i_hi) {
    const auto& s = spec.singularities.at(static_cast<size_t>(sigma_index));
    const int d = spec.dim;
    if (i_lo > i_hi) return Mat(d, 0);
    Eigen::EigenSolver<Mat> es(spec.jacobian(s.position));
    std::vector<int> order(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) order[static_cast<size_t>(i)] = i;
    auto evs = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (evs[a].real() != evs[b].real()) return evs[a].real() < evs[b].real();
        return evs[a].imag() < evs[b].imag();
    });
    Mat cols(d, 0);
    std::vector<char> used(static_cast<size_t>(d), 0);
    for (int p = i_lo; p <= i_hi; ++p) {
        int i = order[static_cast<size_t>(p)];
        if (used[static_cast<size_t>(i)]) continue;
        used[static_cast<size_t>(i)] = 1;
        auto v = es.eigenvectors().col(i);
        if (std::abs(evs[i].imag()) < 1e-12) {
            cols.conservativeResize(d, cols.cols() + 1);
            cols.col(cols.cols() - 1) = v.real();
        } else {
            // consume the conjugate partner as well
            for (int q = 0; q < d; ++q) {
                if (used[static_cast<size_t>(q)]) continue;
                if (std::abs(evs[q].real() - evs[i].real()) < 1e-9 &&
                    std::abs(evs[q].imag() + evs[i].imag()) < 1e-9) {
                    used[static_cast<size_t>(q)] = 1;
                    break;
                }
            }
            cols.conservativeResize(d, cols.cols() + 2);
            cols.col(cols.cols() - 2) = v.real();
            cols.col(cols.cols() - 1) = v.imag();
        }
    }
    const int want = i_hi - i_lo + 1;
    if (static_cast<int>(cols.cols()) != want)
        throw std::runtime_error("invariant_subspace: range splits a complex pair");
    Eigen::HouseholderQR<Mat> qr(cols);
    return Mat(qr.householderQ()).leftCols(want);
}

TriState escaping_manifold_test(const VectorFieldSpec& spec, int sigma_index,
                                const Mat& subspace, bool stable_side, const Box& region,
                                const EscapeOptions& opts) {
    const auto& sp = spec.singularities.at(static_cast<size_t>(sigma_index)).position;
    const int m = static_cast<int>(subspace.cols());
    if (m == 0) return TriState::yes; // vacuous: the manifold is the point itself

    std::vector<Vec> dirs;
    for (int j = 0; j < m; ++j) {
        dirs.push_back(subspace.col(j));
        dirs.push_back(-subspace.col(j));
    }
    std::mt19937_64 rng(9001u + static_cast<unsigned>(sigma_index));
    std::normal_distribution<double> nd;
    while (static_cast<int>(dirs.size()) < std::max(2 * m, opts.n_samples)) {
        Vec c(m);
        for (int i = 0; i < m; ++i) c[i] = nd(rng);
        if (c.norm() < 1e-8) continue;
        dirs.push_back((subspace * c).normalized());
    }

    const double sgn = stable_side ? -1.0 : 1.0;
    const double travel_threshold =
        std::max(opts.travel_factor * opts.r_loc, 0.05 * region.widths().maxCoeff());
    bool any_unknown = false;
    for (const Vec& dir : dirs) {
        Vec x = sp + opts.r_loc * dir;
        double traveled = 0;
        double t = 0;
        bool exited = false, recurred = false;
        while (t < opts.T_esc) {
            double step = std::min(0.5, opts.T_esc - t);
            FlowResult r = advance(spec, x, sgn * step, opts.tol);
            x = r.x;
            t += std::abs(r.t_reached);
            traveled = std::max(traveled, (x - sp).norm());
            if (r.status == FlowStatus::failed) {
                any_unknown = true;
                break;
            }
            if (r.status == FlowStatus::escaped || !region.contains(x)) {
                exited = true;
                break;
            }
        }
        if (exited) continue;
        if (traveled >= travel_threshold) recurred = true;
        if (recurred) return TriState::no;
        any_unknown = true; // stayed close to the singularity: timeout
    }
    return any_unknown ? TriState::unknown : TriState::yes;
}

namespace {

// Gap-valid prefix dimensions of the stable block (ascending real parts):
// prefix of dim j is valid when re[j-1] < re[j] strictly beyond kEigTol.
std::vector<int> stable_prefix_dims(const std::vector<double>& re, int s, int max_dim) {
    std::vector<int> dims;
    for (int j = 1; j <= std::min(s, max_dim); ++j) {
        if (j == static_cast<int>(re.size())) break;
        if (!re_equal(re[static_cast<size_t>(j - 1)], re[static_cast<size_t>(j)]))
            dims.push_back(j);
    }
    return dims;
}

std::vector<int> unstable_suffix_dims(const std::vector<double>& re, int s, int max_dim) {
    const int d = static_cast<int>(re.size());
    std::vector<int> dims;
    for (int j = 1; j <= std::min(d - s, max_dim); ++j) {
        int cut = d - j; // eigenvalues [cut .. d-1]
        if (cut == 0) break;
        if (!re_equal(re[static_cast<size_t>(cut - 1)], re[static_cast<size_t>(cut)]))
            dims.push_back(j);
    }
    return dims;
}

} // namespace

void resolve_center(const VectorFieldSpec& spec, SingularityClass& cls, const Box& region,
                    const EscapeOptions& opts) {
    if (!cls.hyperbolic) return;
    const int d = spec.dim;
    const int s = cls.index;

    int stable_cap = s, unstable_cap = d - s;
    if (cls.lorenz_like && cls.saddle_value > 0) stable_cap = cls.strong_dim;
    if (cls.lorenz_like && cls.saddle_value < 0) unstable_cap = cls.strong_dim;

    auto stable_dims = stable_prefix_dims(cls.re_eigs, s, stable_cap);
    auto unstable_dims = unstable_suffix_dims(cls.re_eigs, s, unstable_cap);

    TriState expected = TriState::unknown;
    cls.escaping_stable_dim = 0;
    for (auto it = stable_dims.rbegin(); it != stable_dims.rend(); ++it) {
        Mat sub = invariant_subspace(spec, cls.sigma_index, 0, *it - 1);
        TriState r = escaping_manifold_test(spec, cls.sigma_index, sub, true, region, opts);
        if (cls.lorenz_like && cls.saddle_value > 0 && *it == cls.strong_dim) expected = r;
        if (r == TriState::yes) {
            cls.escaping_stable_dim = *it;
            break;
        }
    }
    cls.escaping_unstable_dim = 0;
    for (auto it = unstable_dims.rbegin(); it != unstable_dims.rend(); ++it) {
        Mat sub = invariant_subspace(spec, cls.sigma_index, d - *it, d - 1);
        TriState r = escaping_manifold_test(spec, cls.sigma_index, sub, false, region, opts);
        if (cls.lorenz_like && cls.saddle_value < 0 && *it == cls.strong_dim) expected = r;
        if (r == TriState::yes) {
            cls.escaping_unstable_dim = *it;
            break;
        }
    }
    if (s == 0) cls.escaping_stable_dim = 0;      // stable manifold is the point itself
    if (s == d) cls.escaping_unstable_dim = 0;

    cls.expected_strong_escaping = expected;
    cls.center_dim = d - cls.escaping_stable_dim - cls.escaping_unstable_dim;
    cls.center_frame = invariant_subspace(spec, cls.sigma_index, cls.escaping_stable_dim,
                                          d - 1 - cls.escaping_unstable_dim);
    cls.center_status = TriState::yes;
}

// ---------------------------------------------------------------------------
// splitting estimation
// ---------------------------------------------------------------------------

namespace {

DirectionTrack track_direction_backward(const OrbitRecord& rec, const Vec& u_end) {
    DirectionTrack out;
    out.u.assign(rec.points.size(), Vec());
    Vec u = u_end.normalized();
    out.u.back() = u;
    for (size_t ii = rec.tangents.size(); ii-- > 0;) {
        Vec v = rec.tangents[ii].inverse() * u;
        double g = v.norm();
        out.log_growth -= std::log(g); // forward growth of the direction
        u = v / g;
        out.u[ii] = u;
    }
    return out;
}

Mat random_normal_frame(const Vec& u, int k, std::mt19937_64& rng) {
    const int d = static_cast<int>(u.size());
    std::normal_distribution<double> nd;
    Mat G(d, k);
    for (int j = 0; j < k; ++j) {
        Vec c(d);
        for (int i = 0; i < d; ++i) c[i] = nd(rng);
        c -= u * u.dot(c);
        G.col(j) = c.normalized();
    }
    return G;
}

// Orthonormal basis of the fiber complement of E (perpendicular to both u and
// the columns of E).
Mat fiber_complement(const Vec& u, const Mat& E, int k) {
    const int d = static_cast<int>(u.size());
    Mat P = Mat::Identity(d, d) - u * u.transpose() - E * E.transpose();
    Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(k);
}

} // namespace

std::vector<SplitAnchorInput> anchors_from_sample(const ExtendedSetSample& sample) {
    std::vector<SplitAnchorInput> out;
    for (const auto& ra : sample.regular) out.push_back({ra.L, ra.history, -1});
    for (const auto& ca : sample.center) out.push_back({ca.L, nullptr, ca.sigma_index});
    return out;
}

SplittingEstimate estimate_splitting(const VectorFieldSpec& spec,
                                     const std::vector<SplitAnchorInput>& anchors,
                                     const SplittingOptions& opts) {
    const int d = spec.dim;
    const int fiber = d - 1;
    SplittingEstimate est;
    est.horizon = opts.horizon;
    est.anchors.assign(anchors.size(), AnchorEstimate{});

    // the record extends past the rate horizon so the backward pull can align
    // its generic frame before the accumulated growth window starts
    const double warmup = std::max(5.0, 0.3 * opts.horizon);

    // pass 1: forward records, direction tracks and finite-time exponents
    std::vector<DirectionTrack> tracks(anchors.size());
    std::vector<size_t> n_T(anchors.size(), 0); // chunks covering [0, horizon]
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
    for (long ai = 0; ai < static_cast<long>(anchors.size()); ++ai) {
        AnchorEstimate& a = est.anchors[static_cast<size_t>(ai)];
        a.L = anchors[static_cast<size_t>(ai)].L;
        a.sigma_index = anchors[static_cast<size_t>(ai)].sigma_index;
        a.based_at_sigma = spec.evaluate(a.L.x).norm() <= kSingTol;
        auto rec = std::make_shared<OrbitRecord>(
            record_orbit(spec, a.L.x, opts.horizon + warmup, opts.renorm_dt, opts.tol));
        a.status = rec->status == FlowStatus::failed ? FlowStatus::failed : FlowStatus::ok;
        a.forward = rec;
        double cum = 0;
        size_t nt = 0;
        for (double dt : rec->dts) {
            if (cum >= opts.horizon - 1e-9) break;
            cum += std::abs(dt);
            ++nt;
        }
        n_T[static_cast<size_t>(ai)] = nt;
        a.T_eff = cum;
        if (rec->status == FlowStatus::failed || a.T_eff < 0.25 * opts.horizon) {
            a.status = FlowStatus::failed;
            continue;
        }
        tracks[static_cast<size_t>(ai)] = track_direction(*rec, a.L.u);
        const auto& steps = tracks[static_cast<size_t>(ai)].log_growth_steps;
        a.log_dir_growth = 0;
        for (size_t i = 0; i < nt; ++i) a.log_dir_growth += steps[i];
        a.x_end = rec->points[nt];
        if (fiber > 0) {
            FramePush full = push_frame(*rec, tracks[static_cast<size_t>(ai)],
                                        normal_basis(tracks[static_cast<size_t>(ai)].u.front()),
                                        nt);
            a.exponents.resize(static_cast<size_t>(fiber));
            for (int j = 0; j < fiber; ++j)
                a.exponents[static_cast<size_t>(j)] = full.diag_log_sums[static_cast<size_t>(j)] / a.T_eff;
            std::sort(a.exponents.rbegin(), a.exponents.rend());
        }
    }

    // dims: hint, or the largest common spectral gap
    int dimE = -1;
    if (opts.dim_E_hint) {
        dimE = *opts.dim_E_hint;
    } else if (fiber == 1) {
        int votes_neg = 0, votes = 0;
        for (const auto& a : est.anchors) {
            if (a.status == FlowStatus::failed || a.exponents.empty()) continue;
            ++votes;
            if (a.exponents[0] < 0) ++votes_neg;
        }
        dimE = (votes > 0 && votes_neg * 2 >= votes) ? 1 : 0;
    } else {
        std::vector<int> votes(static_cast<size_t>(fiber), 0);
        int usable = 0;
        for (const auto& a : est.anchors) {
            if (a.status == FlowStatus::failed || a.exponents.empty()) continue;
            double best_gap = -1;
            int best_split = -1; // dimF = number of exponents above the gap
            for (int i = 1; i < fiber; ++i) {
                double gap = a.exponents[static_cast<size_t>(i - 1)] - a.exponents[static_cast<size_t>(i)];
                if (gap > best_gap) {
                    best_gap = gap;
                    best_split = i;
                }
            }
            if (best_split >= 0 && best_gap >= opts.gap_tol) {
                votes[static_cast<size_t>(fiber - best_split)]++;
                ++usable;
            }
        }
        if (usable == 0)
            throw std::runtime_error("no dominated splitting detected: no usable exponent gap");
        dimE = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    if (dimE < 0 || dimE > fiber)
        throw std::invalid_argument("estimate_splitting: dim E out of range");
    est.dimE = dimE;
    est.dimF = fiber - dimE;

    // pass 2: fibers and restricted growth
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
    for (long ai = 0; ai < static_cast<long>(anchors.size()); ++ai) {
        AnchorEstimate& a = est.anchors[static_cast<size_t>(ai)];
        if (a.status == FlowStatus::failed) continue;
        const DirectionTrack& dir = tracks[static_cast<size_t>(ai)];
        std::mt19937_64 rng(opts.seed + 7919u * static_cast<unsigned>(ai));

        // E: pull a generic frame backward along the forward record.  The
        // pull pass also measures the restricted forward growth chunk by
        // chunk with freshly aligned frames (a forward push of the E frame
        // would let fiber round-off grow like e^{gap T} and swamp the true
        // decay across long hyperbolic transits):
        //   psi^T|_E = (psi^{-T}|_{E(T)})^{-1}, so log|psi^T|_E| = -min log sv
        // of the backward restricted operator.
        if (est.dimE > 0) {
            Mat G = random_normal_frame(dir.u.back(), est.dimE, rng);
            FramePush pulled = pull_frame(*a.forward, dir, G, n_T[static_cast<size_t>(ai)]);
            a.E = pulled.Q;
            a.logE_max = -pulled.log_sv_min();
        } else {
            a.E = Mat(d, 0);
            a.logE_max = -std::numeric_limits<double>::infinity();
        }

        // F: push a generic frame through the incoming history
        std::shared_ptr<OrbitRecord> hist = anchors[static_cast<size_t>(ai)].history;
        if (!hist && a.based_at_sigma) {
            OrbitRecord back = record_orbit(spec, a.L.x, -opts.horizon, opts.renorm_dt, opts.tol);
            if (back.status != FlowStatus::failed)
                hist = std::make_shared<OrbitRecord>(reversed_record(back));
        }
        bool have_hist = hist && hist->status != FlowStatus::failed &&
                         !hist->tangents.empty() &&
                         (hist->end() - a.L.x).norm() < 1e-6 * std::max(1.0, a.L.x.norm());
        if (est.dimF > 0 && have_hist) {
            DirectionTrack hdir = track_direction_backward(*hist, a.L.u);
            Mat G = random_normal_frame(hdir.u.front(), est.dimF, rng);
            FramePush pushed = push_frame(*hist, hdir, G);
            a.F = pushed.Q;
        } else if (est.dimF > 0) {
            a.F = fiber_complement(dir.u.front(), a.E, est.dimF);
        } else {
            a.F = Mat(d, 0);
        }

        if (est.dimF > 0) {
            // forward pushes of F are self-correcting: stray E components
            // decay relative to F under the forward flow
            FramePush pf = push_frame(*a.forward, dir, a.F, n_T[static_cast<size_t>(ai)]);
            a.logF_min = pf.log_sv_min();
        } else {
            a.logF_min = std::numeric_limits<double>::infinity();
        }
        a.margin = (a.logF_min - a.logE_max) / a.T_eff;
    }

    for (const auto& a : est.anchors) {
        if (a.status == FlowStatus::failed) {
            ++est.n_dropped;
            continue;
        }
        est.domination_margin = std::min(est.domination_margin, a.margin);
    }
    return est;
}

double check_domination(const VectorFieldSpec& spec, const SplittingEstimate& est, double t_dom,
                        double tol) {
    double slack = std::numeric_limits<double>::infinity();
    for (const auto& a : est.anchors) {
        if (a.status == FlowStatus::failed) continue;
        if (est.dimE == 0 || est.dimF == 0) continue;
        OrbitRecord rec = record_orbit(spec, a.L.x, t_dom, std::min(0.5, t_dom), tol);
        if (rec.status != FlowStatus::ok) continue;
        DirectionTrack dir = track_direction(rec, a.L.u);
        FramePush pe = push_frame(rec, dir, a.E);
        FramePush pf = push_frame(rec, dir, a.F);
        slack = std::min(slack, pf.log_sv_min() - pe.log_sv_max() - std::log(2.0));
    }
    return slack;
}

ConeCheck check_cone_invariance(const VectorFieldSpec& spec, const SplittingEstimate& est,
                                const ConeField& cone, double t, double tol) {
    ConeCheck out;
    out.margin = std::numeric_limits<double>::infinity();
    if (!(cone.aperture > 0)) throw std::invalid_argument("cone aperture must be positive");
    for (const auto& a : est.anchors) {
        if (a.status == FlowStatus::failed) continue;
        const Mat& C = cone.around_E ? a.E : a.F; // cone axis bundle
        const Mat& O = cone.around_E ? a.F : a.E;
        if (C.cols() == 0 || O.cols() == 0) continue;
        OrbitRecord rec = record_orbit(spec, a.L.x, t, std::min(0.5, t), tol);
        if (rec.status != FlowStatus::ok) continue;
        DirectionTrack dir = track_direction(rec, a.L.u);
        FramePush pc = push_frame(rec, dir, C);
        FramePush po = push_frame(rec, dir, O);
        Mat Ci = pc.Q, Oi = po.Q;
        Mat joint(Ci.rows(), Ci.cols() + Oi.cols());
        joint << Ci, Oi;

        // boundary rays: +-axis columns mixed with +-other columns at the
        // aperture ratio
        for (int jc = 0; jc < C.cols(); ++jc) {
            for (int jo = 0; jo < O.cols(); ++jo) {
                for (int sgn = -1; sgn <= 1; sgn += 2) {
                    Vec ray = C.col(jc) + sgn * cone.aperture * O.col(jo);
                    FramePush pr = push_frame(rec, dir, ray);
                    Vec w = pr.Q.col(0);
                    Vec coef = joint.colPivHouseholderQr().solve(w);
                    double wc = coef.head(Ci.cols()).norm();
                    double wo = coef.tail(Oi.cols()).norm();
                    double m = std::log(cone.aperture * wc) - std::log(std::max(wo, 1e-300));
                    out.margin = std::min(out.margin, m);
                }
            }
        }
    }
    out.invariant = out.margin > 0;
    return out;
}

ReparamRates check_reparam_rates(const VectorFieldSpec& spec, const SplittingEstimate& est,
                                 const CocycleSpec& cspec_E, const CocycleSpec& cspec_F) {
    ReparamRates out;
    out.E_vacuous = est.dimE == 0;
    out.F_vacuous = est.dimF == 0;
    for (const auto& a : est.anchors) {
        if (a.status == FlowStatus::failed) continue;
        double log_hE = 0, log_hF = 0;
        // exact identity for section anchors: |X(phi^T x)| = |X(x)| e^{growth}
        double log_X_end = a.based_at_sigma
                               ? std::numeric_limits<double>::quiet_NaN()
                               : std::log(spec.evaluate(a.L.x).norm()) + a.log_dir_growth;
        for (const auto& term : cspec_E.terms)
            log_hE += term.alpha * log_h_sigma_endpoints(spec, term.adapter, a.L.x, a.x_end,
                                                         a.based_at_sigma, a.log_dir_growth,
                                                         log_X_end);
        for (const auto& term : cspec_F.terms)
            log_hF += term.alpha * log_h_sigma_endpoints(spec, term.adapter, a.L.x, a.x_end,
                                                         a.based_at_sigma, a.log_dir_growth,
                                                         log_X_end);
        if (est.dimE > 0) out.rate_E = std::max(out.rate_E, (log_hE + a.logE_max) / a.T_eff);
        if (est.dimF > 0) out.rate_F = std::min(out.rate_F, (log_hF + a.logF_min) / a.T_eff);
    }
    return out;
}

// ---------------------------------------------------------------------------
// the verdict pipeline
// ---------------------------------------------------------------------------

namespace {

std::string tri_str(TriState t) {
    switch (t) {
        case TriState::yes: return "yes";
        case TriState::no: return "no";
        default: return "unknown";
    }
}

} // namespace

Verdict check_multisingular(const VectorFieldSpec& spec, const Box& region,
                            const VerdictConfig& cfg, const ChainGraph* prebuilt_graph) {
    Verdict v;
    v.region = region;
    v.delta_rate = cfg.delta_rate;
    v.seed = cfg.seed;

    std::vector<int> sigmas_in;
    for (size_t i = 0; i < spec.singularities.size(); ++i)
        if (region.contains(spec.singularities[i].position))
            sigmas_in.push_back(static_cast<int>(i));

    for (int si : sigmas_in)
        if (!spec.singularities[static_cast<size_t>(si)].hyperbolic)
            v.all_singularities_hyperbolic = false;
    if (!v.all_singularities_hyperbolic) {
        v.multisingular = TriState::no;
        v.failing_clause = "a singularity in the region is not hyperbolic";
        return v;
    }

    // chain structure
    BoxCover cover(region, cfg.grid, cfg.eps, cfg.t_max);
    ChainGraph local_graph;
    if (!prebuilt_graph)
        local_graph = build_chain_graph(spec, cover, cfg.samples_per_box, cfg.edge_tol,
                                        cfg.parallel);
    const ChainGraph& graph = prebuilt_graph ? *prebuilt_graph : local_graph;
    auto classes = chain_classes(graph);
    v.n_chain_classes = static_cast<int>(classes.size());

    // classification, escape tests, center spaces
    EscapeOptions eopts = cfg.escape;
    eopts.tol = cfg.tol;
    const double cell_diag = cover.cell_width().norm();
    const double r_triv = 2.0 * (cell_diag + cfg.eps);
    for (int si : sigmas_in) {
        SingularityClass cls = classify_singularity(spec, si);
        resolve_center(spec, cls, region, eopts);

        // an entirely escaping invariant manifold forces the true chain class
        // of the singularity to be trivial: regular class orbits accumulating
        // on it would have to accumulate on that manifold
        const int d = spec.dim;
        cls.trivial_class =
            (cls.index > 0 && cls.escaping_stable_dim == cls.index) ||
            (cls.index < d && cls.escaping_unstable_dim == d - cls.index) ||
            cls.index == 0 || cls.index == d; // a point manifold escapes vacuously
        v.classes.push_back(cls);
    }

    for (const auto& cls : v.classes) {
        if (cls.trivial_class) {
            v.trivial_sigmas.push_back(cls.sigma_index);
            continue;
        }
        if (cfg.classical_singular) {
            v.S_F.push_back(cls.sigma_index);
            continue;
        }
        if (!cls.saddle_value_defined) continue; // flagged below via consistency
        if (cls.saddle_value < 0) v.S_E.push_back(cls.sigma_index);
        else v.S_F.push_back(cls.sigma_index);
    }

    // sampled extended set over the recurrent classes; a class is skipped only
    // when it is the sigma-local recurrence cluster of a trivial singularity
    // (at box resolution a trivial singularity may also share the class of
    // genuine recurrence threading its stable manifold; that class stays)
    std::vector<int> class_ids;
    {
        std::set<long> trivial_sccs;
        for (int ti : v.trivial_sigmas) {
            const Vec& p = spec.singularities[static_cast<size_t>(ti)].position;
            long b = cover.locate(p);
            if (b < 0) continue;
            long scc = graph.scc_id[static_cast<size_t>(b)];
            if (!graph.scc_recurrent[static_cast<size_t>(scc)]) continue;
            bool local = true;
            for (long m : graph.scc_members[static_cast<size_t>(scc)])
                if (graph.cover.cell(m).distance(p) > r_triv) local = false;
            if (local) trivial_sccs.insert(scc);
        }
        for (int ci = 0; ci < static_cast<int>(classes.size()); ++ci) {
            long scc = graph.scc_id[static_cast<size_t>(classes[static_cast<size_t>(ci)].front())];
            if (!trivial_sccs.count(scc)) class_ids.push_back(ci);
        }
    }
    std::vector<SigmaCenterInfo> centers;
    for (const auto& cls : v.classes) {
        if (cls.trivial_class) continue;
        SigmaCenterInfo ci;
        ci.sigma_index = cls.sigma_index;
        ci.center_frame = cls.center_frame;
        ci.status = cls.center_status;
        centers.push_back(ci);
    }

    ExtendedSetOptions sopts;
    sopts.settle_time = cfg.settle_time;
    sopts.max_regular = cfg.max_regular_anchors;
    sopts.directions_per_center_dim = cfg.directions_per_center_dim;
    sopts.tol = cfg.tol;
    sopts.seed = cfg.seed;
    ExtendedSetSample sample = sample_extended_set(spec, graph, class_ids, centers, sopts);
    v.warnings = sample.warnings;
    v.n_regular_anchors = static_cast<int>(sample.regular.size());
    v.n_center_anchors = static_cast<int>(sample.center.size());

    if (sample.regular.empty() && sample.center.empty()) {
        // nothing recurrent beyond trivial singularities
        v.multisingular = TriState::yes;
        v.dominated = v.E_contracted_reparam = v.F_expanded_reparam = v.index_consistency =
            TriState::yes;
        v.warnings.push_back("empty sampled extended set: trivially hyperbolic region");
        return v;
    }

    SplittingOptions spl;
    spl.horizon = cfg.horizon;
    spl.tol = cfg.tol;
    spl.seed = cfg.seed;
    spl.parallel = cfg.parallel;
    SplittingEstimate est;
    try {
        est = estimate_splitting(spec, anchors_from_sample(sample), spl);
    } catch (const std::exception& e) {
        v.multisingular = TriState::no;
        v.failing_clause = std::string("no dominated splitting: ") + e.what();
        v.dominated = TriState::no;
        return v;
    }
    v.dimE = est.dimE;
    v.dimF = est.dimF;
    v.domination_margin = est.domination_margin;

    double slack = check_domination(spec, est, cfg.t_dom, cfg.tol);
    v.dominated = (est.domination_margin > 0 && slack > 0) ? TriState::yes : TriState::no;

    CocycleSpec cE = make_cocycle(spec, v.S_E);
    CocycleSpec cF = make_cocycle(spec, v.S_F);
    ReparamRates rates = check_reparam_rates(spec, est, cE, cF);
    v.rate_E = rates.rate_E;
    v.rate_F = rates.rate_F;
    v.E_contracted_reparam =
        (rates.E_vacuous || rates.rate_E <= -cfg.delta_rate) ? TriState::yes : TriState::no;
    v.F_expanded_reparam =
        (rates.F_vacuous || rates.rate_F >= cfg.delta_rate) ? TriState::yes : TriState::no;

    // dimension bookkeeping at the singularities
    v.index_consistency = TriState::yes;
    for (const auto& cls : v.classes) {
        if (cls.trivial_class) continue;
        bool in_E = std::find(v.S_E.begin(), v.S_E.end(), cls.sigma_index) != v.S_E.end();
        bool in_F = std::find(v.S_F.begin(), v.S_F.end(), cls.sigma_index) != v.S_F.end();
        if (!cls.lorenz_like || (!in_E && !in_F)) {
            v.index_consistency = TriState::no;
            v.failing_clause = "non-Lorenz-like singularity in a nontrivial class";
            continue;
        }
        int stable_in_center = cls.index - cls.escaping_stable_dim;
        int unstable_in_center = (spec.dim - cls.index) - cls.escaping_unstable_dim;
        if (in_F && !(cls.index == est.dimE + 1 && stable_in_center == 1))
            v.index_consistency = TriState::no;
        if (in_E && !(cls.index == est.dimE && unstable_in_center == 1))
            v.index_consistency = TriState::no;
        if (v.index_consistency == TriState::no && v.failing_clause.empty())
            v.failing_clause = "singularity index bookkeeping fails";
    }

    bool any_unknown = false;
    for (const auto& cls : v.classes)
        if (!cls.trivial_class && cls.center_status == TriState::unknown) any_unknown = true;

    auto clause = [&](TriState t, const std::string& name) {
        if (t == TriState::no && v.failing_clause.empty()) v.failing_clause = name;
        if (t == TriState::unknown) any_unknown = true;
    };
    clause(v.dominated, "no dominated splitting with positive margin");
    clause(v.E_contracted_reparam, "E is not uniformly contracted by h_E * psi_N");
    clause(v.F_expanded_reparam, "F is not uniformly expanded by h_F * psi_N");
    clause(v.index_consistency, v.failing_clause.empty()
                                    ? "singularity index bookkeeping fails"
                                    : v.failing_clause);

    if (v.dominated == TriState::no || v.E_contracted_reparam == TriState::no ||
        v.F_expanded_reparam == TriState::no || v.index_consistency == TriState::no)
        v.multisingular = TriState::no;
    else if (any_unknown)
        v.multisingular = TriState::unknown;
    else
        v.multisingular = TriState::yes;
    if (v.multisingular == TriState::unknown && v.failing_clause.empty())
        v.failing_clause = "a sub-check returned unknown (" + tri_str(v.dominated) + "/" +
                           tri_str(v.E_contracted_reparam) + "/" + tri_str(v.F_expanded_reparam) +
                           ")";
    return v;
}

} // namespace singhyp
