#ifndef SINGHYP_POINCARE_HPP
#define SINGHYP_POINCARE_HPP

#include "singhyp/flow.hpp"

#include <optional>

namespace singhyp {

/// A point of the projective tangent bundle: base point plus a unit direction,
/// sign-canonicalized (first coordinate of magnitude > 1e-12 made positive).
struct ProjectivePoint {
    Vec x;
    Vec u;

    static Vec canonicalize(Vec v);
    static ProjectivePoint make(Vec base, Vec dir);
};

/// Representative of a class in T_xM / L: the orthogonal representative n,
/// with n perpendicular to the anchor direction.
struct NormalVector {
    ProjectivePoint anchor;
    Vec n;
};

/// S_X: the section x -> line spanned by X(x). Throws if |X(x)| <= kSingTol.
ProjectivePoint section_of_field(const VectorFieldSpec& spec, const Vec& x);

/// Result of advancing a projective point for time t.
struct ProjTransport {
    FlowStatus status = FlowStatus::ok;
    ProjectivePoint anchor;
    double log_dir_growth = 0; // log |Dphi^t u| for unit u (tautological growth)
    double min_field_norm = std::numeric_limits<double>::infinity();
    double t_reached = 0;
};

/// phi_P^t: base advanced by phi^t, direction = normalized Dphi^t u.
ProjTransport projective_advance(const VectorFieldSpec& spec, const ProjectivePoint& L,
                                 double t, double tol = kDefaultTol);

/// Transport of a k-frame of normal representatives under psi_N with periodic
/// QR renormalization (every renorm_dt).  The restricted operator
/// psi_N^t |_{span(V0)} equals Q * R_acc * exp(log_scale) in orthonormal
/// bases; its singular values are svd(R_acc) * exp(log_scale).
/// `diag_log_sums` holds Benettin-style per-column log sums (finite-time
/// exponent estimates when k equals the fiber dimension d-1).
struct BlockTransport {
    FlowStatus status = FlowStatus::ok;
    ProjectivePoint anchor;
    Mat Q;       // d x k orthonormal, perpendicular to anchor.u
    Mat R_acc;   // k x k upper triangular, rescaled
    double log_scale = 0;
    std::vector<double> diag_log_sums;
    double log_dir_growth = 0;
    double min_field_norm = std::numeric_limits<double>::infinity();
    bool near_singular_passage = false;
    double t_reached = 0;

    std::vector<double> log_singular_values() const; // descending
    Mat frame() const { return Q * R_acc * std::exp(log_scale); }
    double log_sv_max() const;
    double log_sv_min() const;
};

BlockTransport block_transport(const VectorFieldSpec& spec, const ProjectivePoint& L,
                               const Mat& V0, double t, double tol = kDefaultTol,
                               double renorm_dt = 0.5);

/// psi_N^t of a single normal representative, materialized.
struct NormalTransportResult {
    FlowStatus status = FlowStatus::ok;
    NormalVector out;
    double log_growth = 0; // log(|out| / |in|)
    bool near_singular_passage = false;
};

NormalTransportResult extended_lpf(const VectorFieldSpec& spec, const NormalVector& nv,
                                   double t, double tol = kDefaultTol);

/// The linear Poincare flow over a regular point: extended_lpf anchored at
/// S_X(x). Requires n perpendicular to X(x).
NormalTransportResult lpf(const VectorFieldSpec& spec, const Vec& x, const Vec& n,
                          double t, double tol = kDefaultTol);

/// (1/t) log(|out|/|in|).
double growth_rate(const NormalTransportResult& r, double t);

/// Orthonormal basis of the hyperplane perpendicular to u (d x (d-1) matrix).
Mat normal_basis(const Vec& u);

// --- recorded orbit segments -----------------------------------------------

/// Chunked record of an orbit segment with the full tangent propagator per
/// chunk: points[i+1] = phi^{dts[i]}(points[i]) and tangents[i] = Dphi^{dts[i]}
/// at points[i].  All chunk durations share one sign.  Records make it
/// possible to move frames backward along a forward orbit (chunkwise inverses)
/// without re-integrating the base flow in the unstable direction.
struct OrbitRecord {
    FlowStatus status = FlowStatus::ok;
    std::vector<Vec> points;
    std::vector<Mat> tangents;
    std::vector<double> dts;
    double min_field_norm = std::numeric_limits<double>::infinity();

    double duration() const {
        double s = 0;
        for (double d : dts) s += d;
        return s;
    }
    const Vec& start() const { return points.front(); }
    const Vec& end() const { return points.back(); }
};

OrbitRecord record_orbit(const VectorFieldSpec& spec, const Vec& x0, double t,
                         double chunk_dt = 0.5, double tol = kDefaultTol);

/// Time-reversed view of a record: endpoints swapped, chunk propagators
/// inverted.  A backward record reversed this way runs forward into its
/// original start point.
OrbitRecord reversed_record(const OrbitRecord& rec);

/// Direction evolution along a record: u_{i+1} = normalize(M_i u_i); returns
/// all directions (size chunks+1), per-chunk log growths, and their sum.
struct DirectionTrack {
    std::vector<Vec> u;
    std::vector<double> log_growth_steps;
    double log_growth = 0;
};
DirectionTrack track_direction(const OrbitRecord& rec, const Vec& u0);

/// Push a normal frame forward through the record (with projection and QR
/// renormalization per chunk).  Returns the orthonormalized frame at the end,
/// the accumulated triangular factor and Benettin diagonal log sums, exactly
/// as block_transport does.  `n_chunks` truncates the push.
struct FramePush {
    Mat Q;
    Mat R_acc;
    double log_scale = 0;
    std::vector<double> diag_log_sums;

    std::vector<double> log_singular_values() const;
    double log_sv_max() const;
    double log_sv_min() const;
};
FramePush push_frame(const OrbitRecord& rec, const DirectionTrack& dir, const Mat& V0,
                     size_t n_chunks = SIZE_MAX);

/// Pull a normal frame backward through the record via chunkwise inverses of
/// the tangent propagators (frame given at the record end, returned at the
/// record start).  Chunks with index >= accum_below act as alignment warmup:
/// they move the frame but are excluded from the accumulated growth, so the
/// restricted singular values are free of the generic-frame transient.
FramePush pull_frame(const OrbitRecord& rec, const DirectionTrack& dir, const Mat& V_end,
                     size_t accum_below = SIZE_MAX);

} // namespace singhyp

#endif
