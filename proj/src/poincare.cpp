#include "singhyp/poincare.hpp"

#include <cmath>
#include <stdexcept>

namespace singhyp {

Vec ProjectivePoint::canonicalize(Vec v) {
    double nrm = v.norm();
    if (nrm == 0) throw std::invalid_argument("projective direction must be nonzero");
    v /= nrm;
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0) v = -v;
            break;
        }
    }
    return v;
}

ProjectivePoint ProjectivePoint::make(Vec base, Vec dir) {
    return ProjectivePoint{std::move(base), canonicalize(std::move(dir))};
}

ProjectivePoint section_of_field(const VectorFieldSpec& spec, const Vec& x) {
    Vec f = spec.evaluate(x);
    if (f.norm() <= kSingTol)
        throw std::domain_error("section_of_field: point is at or too close to a singularity");
    return ProjectivePoint::make(x, std::move(f));
}

Mat normal_basis(const Vec& u) {
    const int d = static_cast<int>(u.size());
    Mat m(d, 1);
    m.col(0) = u;
    Eigen::HouseholderQR<Mat> qr(m);
    Mat Q = qr.householderQ();
    return Q.rightCols(d - 1);
}

namespace {

// Shared chunked driver: carries (x, u, B) where u spans the anchor line and B
// is a normal frame; re-orthogonalizes against the transported direction and
// QR-renormalizes every chunk.
struct ChunkDriver {
    FlowStatus status = FlowStatus::ok;
    Vec x;
    Vec u; // unit, not sign-canonicalized while moving
    Mat B; // d x k
    Mat R_acc;
    double log_scale = 0;
    double log_dir_growth = 0;
    std::vector<double> diag_log_sums;
    double min_field_norm = std::numeric_limits<double>::infinity();
    double t_reached = 0;

    void run(const VectorFieldSpec& spec, double t, double tol, double renorm_dt) {
        const int k = static_cast<int>(B.cols());
        R_acc = Mat::Identity(k, k);
        diag_log_sums.assign(static_cast<size_t>(k), 0.0);
        if (t == 0) return;
        const double sgn = t > 0 ? 1.0 : -1.0;
        double done = 0;
        const double at = std::abs(t);
        while (done < at) {
            double step = std::min(renorm_dt, at - done);
            Mat W(x.size(), 1 + k);
            W.col(0) = u;
            W.rightCols(k) = B;
            FlowResult r = tangent_transport(spec, x, W, sgn * step, tol);
            min_field_norm = std::min(min_field_norm, r.min_field_norm);
            x = r.x;
            Vec du = r.V.col(0);
            double g = du.norm();
            if (!(g > 0) || !std::isfinite(g)) {
                status = FlowStatus::failed;
                return;
            }
            log_dir_growth += std::log(g);
            u = du / g;
            if (k > 0) {
                Mat Bt = r.V.rightCols(k);
                Bt -= u * (u.transpose() * Bt); // project back into the normal fiber
                Eigen::HouseholderQR<Mat> qr(Bt);
                Mat Qfull = qr.householderQ();
                Mat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
                Mat Qthin = Qfull.leftCols(k);
                for (int j = 0; j < k; ++j) {
                    if (R(j, j) < 0) {
                        R.row(j) = -R.row(j);
                        Qthin.col(j) = -Qthin.col(j);
                    }
                    double dj = std::abs(R(j, j));
                    diag_log_sums[static_cast<size_t>(j)] += std::log(std::max(dj, 1e-300));
                }
                B = Qthin;
                R_acc = R * R_acc;
                double m = R_acc.cwiseAbs().maxCoeff();
                if (m > 1e50 || (m > 0 && m < 1e-50)) {
                    R_acc /= m;
                    log_scale += std::log(m);
                }
            }
            done += step;
            t_reached = sgn * done;
            if (r.status != FlowStatus::ok) {
                status = r.status;
                t_reached = sgn * (done - step) + r.t_reached;
                return;
            }
        }
    }
};

} // namespace

ProjTransport projective_advance(const VectorFieldSpec& spec, const ProjectivePoint& L,
                                 double t, double tol) {
    ChunkDriver d;
    d.x = L.x;
    d.u = L.u;
    d.B = Mat(L.x.size(), 0);
    d.run(spec, t, tol, 0.5);
    ProjTransport out;
    out.status = d.status;
    if (d.status != FlowStatus::failed)
        out.anchor = ProjectivePoint::make(d.x, d.u);
    out.log_dir_growth = d.log_dir_growth;
    out.min_field_norm = d.min_field_norm;
    out.t_reached = d.t_reached;
    return out;
}

BlockTransport block_transport(const VectorFieldSpec& spec, const ProjectivePoint& L,
                               const Mat& V0, double t, double tol, double renorm_dt) {
    const int k = static_cast<int>(V0.cols());
    // orthogonality of the representatives to the anchor line
    for (int j = 0; j < k; ++j) {
        if (std::abs(L.u.dot(V0.col(j))) > 1e-9 * std::max(1.0, V0.col(j).norm()))
            throw std::invalid_argument("block_transport: column not normal to the anchor");
    }
    ChunkDriver d;
    d.x = L.x;
    d.u = L.u;
    // absorb the initial frame into Q0 * R0 so that the restricted operator is
    // expressed with respect to V0's columns
    Eigen::HouseholderQR<Mat> qr(V0);
    Mat Q0 = qr.householderQ();
    Mat R0 = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Mat Qthin = Q0.leftCols(k);
    for (int j = 0; j < k; ++j) {
        if (R0(j, j) < 0) {
            R0.row(j) = -R0.row(j);
            Qthin.col(j) = -Qthin.col(j);
        }
    }
    d.B = Qthin;
    bool base_regular = spec.evaluate(L.x).norm() > kSingTol;
    d.run(spec, t, tol, renorm_dt);

    BlockTransport out;
    out.status = d.status;
    if (d.status != FlowStatus::failed)
        out.anchor = ProjectivePoint::make(d.x, d.u);
    out.Q = d.B;
    out.R_acc = d.R_acc * R0; // operator with respect to the original columns
    out.log_scale = d.log_scale;
    out.diag_log_sums = d.diag_log_sums;
    out.log_dir_growth = d.log_dir_growth;
    out.min_field_norm = d.min_field_norm;
    out.near_singular_passage = base_regular && d.min_field_norm < kSingTol;
    out.t_reached = d.t_reached;
    return out;
}

std::vector<double> BlockTransport::log_singular_values() const {
    Eigen::JacobiSVD<Mat> svd(R_acc);
    std::vector<double> out;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        out.push_back(std::log(std::max(svd.singularValues()[i], 1e-300)) + log_scale);
    return out;
}

double BlockTransport::log_sv_max() const {
    auto v = log_singular_values();
    return v.empty() ? -std::numeric_limits<double>::infinity() : v.front();
}

double BlockTransport::log_sv_min() const {
    auto v = log_singular_values();
    return v.empty() ? std::numeric_limits<double>::infinity() : v.back();
}

NormalTransportResult extended_lpf(const VectorFieldSpec& spec, const NormalVector& nv,
                                   double t, double tol) {
    double innorm = nv.n.norm();
    if (!(innorm > 0)) throw std::invalid_argument("extended_lpf: zero normal representative");
    if (std::abs(nv.anchor.u.dot(nv.n)) > 1e-9 * innorm)
        throw std::invalid_argument("extended_lpf: representative not normal to the anchor");
    BlockTransport bt = block_transport(spec, nv.anchor, nv.n, t, tol);
    NormalTransportResult out;
    out.status = bt.status;
    if (bt.status == FlowStatus::failed) return out;
    out.out.anchor = bt.anchor;
    out.out.n = bt.frame().col(0);
    out.log_growth = bt.log_singular_values().front() - std::log(innorm);
    out.near_singular_passage = bt.near_singular_passage;
    return out;
}

NormalTransportResult lpf(const VectorFieldSpec& spec, const Vec& x, const Vec& n, double t,
                          double tol) {
    ProjectivePoint L = section_of_field(spec, x);
    Vec f = spec.evaluate(x);
    if (std::abs(f.normalized().dot(n)) > 1e-9 * std::max(1.0, n.norm()))
        throw std::invalid_argument("lpf: representative not orthogonal to the field direction");
    return extended_lpf(spec, NormalVector{L, n}, t, tol);
}

double growth_rate(const NormalTransportResult& r, double t) {
    if (t == 0) throw std::invalid_argument("growth_rate: t must be nonzero");
    return r.log_growth / t;
}

OrbitRecord record_orbit(const VectorFieldSpec& spec, const Vec& x0, double t, double chunk_dt,
                         double tol) {
    OrbitRecord rec;
    rec.points.push_back(x0);
    if (t == 0) return rec;
    const int d = spec.dim;
    const double sgn = t > 0 ? 1.0 : -1.0;
    const double at = std::abs(t);
    double done = 0;
    Mat I = Mat::Identity(d, d);
    while (done < at) {
        double step = std::min(chunk_dt, at - done);
        FlowResult r = tangent_transport(spec, rec.points.back(), I, sgn * step, tol);
        rec.min_field_norm = std::min(rec.min_field_norm, r.min_field_norm);
        if (r.status == FlowStatus::failed) {
            rec.status = FlowStatus::failed;
            return rec;
        }
        if (std::abs(r.t_reached) > 1e-15) {
            rec.points.push_back(r.x);
            rec.tangents.push_back(r.V);
            rec.dts.push_back(r.t_reached);
        }
        if (r.status == FlowStatus::escaped) {
            rec.status = FlowStatus::escaped;
            return rec;
        }
        done += step;
    }
    return rec;
}

OrbitRecord reversed_record(const OrbitRecord& rec) {
    OrbitRecord out;
    out.status = rec.status;
    out.min_field_norm = rec.min_field_norm;
    for (auto it = rec.points.rbegin(); it != rec.points.rend(); ++it) out.points.push_back(*it);
    for (size_t i = rec.tangents.size(); i-- > 0;) {
        out.tangents.push_back(rec.tangents[i].inverse());
        out.dts.push_back(-rec.dts[i]);
    }
    return out;
}

DirectionTrack track_direction(const OrbitRecord& rec, const Vec& u0) {
    DirectionTrack out;
    Vec u = u0.normalized();
    out.u.push_back(u);
    for (const Mat& M : rec.tangents) {
        Vec v = M * u;
        double g = v.norm();
        out.log_growth_steps.push_back(std::log(g));
        out.log_growth += std::log(g);
        u = v / g;
        out.u.push_back(u);
    }
    return out;
}

namespace {

// One projection + QR renormalization step shared by push/pull.
void qr_renorm(Mat& B, Mat& R_acc, double& log_scale, std::vector<double>& diag_sums) {
    const int k = static_cast<int>(B.cols());
    Eigen::HouseholderQR<Mat> qr(B);
    Mat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Mat Qthin = Mat(qr.householderQ()).leftCols(k);
    for (int j = 0; j < k; ++j) {
        if (R(j, j) < 0) {
            R.row(j) = -R.row(j);
            Qthin.col(j) = -Qthin.col(j);
        }
        diag_sums[static_cast<size_t>(j)] += std::log(std::max(std::abs(R(j, j)), 1e-300));
    }
    B = Qthin;
    R_acc = R * R_acc;
    double m = R_acc.cwiseAbs().maxCoeff();
    if (m > 1e50 || (m > 0 && m < 1e-50)) {
        R_acc /= m;
        log_scale += std::log(m);
    }
}

FramePush init_push(const Mat& V0, Mat& B) {
    const int k = static_cast<int>(V0.cols());
    FramePush out;
    out.R_acc = Mat::Identity(k, k);
    out.diag_log_sums.assign(static_cast<size_t>(k), 0.0);
    Eigen::HouseholderQR<Mat> qr(V0);
    Mat R0 = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Mat Qthin = Mat(qr.householderQ()).leftCols(k);
    for (int j = 0; j < k; ++j) {
        if (R0(j, j) < 0) {
            R0.row(j) = -R0.row(j);
            Qthin.col(j) = -Qthin.col(j);
        }
    }
    B = Qthin;
    out.R_acc = R0;
    return out;
}

} // namespace

FramePush push_frame(const OrbitRecord& rec, const DirectionTrack& dir, const Mat& V0,
                     size_t n_chunks) {
    Mat B;
    FramePush out = init_push(V0, B);
    size_t end = std::min(n_chunks, rec.tangents.size());
    for (size_t i = 0; i < end; ++i) {
        B = rec.tangents[i] * B;
        const Vec& u = dir.u[i + 1];
        B -= u * (u.transpose() * B);
        qr_renorm(B, out.R_acc, out.log_scale, out.diag_log_sums);
    }
    out.Q = B;
    return out;
}

FramePush pull_frame(const OrbitRecord& rec, const DirectionTrack& dir, const Mat& V_end,
                     size_t accum_below) {
    Mat B;
    FramePush out = init_push(V_end, B);
    const int k = static_cast<int>(V_end.cols());
    for (size_t ii = rec.tangents.size(); ii-- > 0;) {
        B = rec.tangents[ii].inverse() * B;
        const Vec& u = dir.u[ii];
        B -= u * (u.transpose() * B);
        if (ii >= accum_below) {
            // warmup range: realign only, keep nothing accumulated
            Eigen::HouseholderQR<Mat> qr(B);
            B = Mat(qr.householderQ()).leftCols(k);
            out.R_acc = Mat::Identity(k, k);
            out.log_scale = 0;
        } else {
            qr_renorm(B, out.R_acc, out.log_scale, out.diag_log_sums);
        }
    }
    out.Q = B;
    return out;
}

std::vector<double> FramePush::log_singular_values() const {
    Eigen::JacobiSVD<Mat> svd(R_acc);
    std::vector<double> out;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        out.push_back(std::log(std::max(svd.singularValues()[i], 1e-300)) + log_scale);
    return out;
}

double FramePush::log_sv_max() const {
    auto v = log_singular_values();
    return v.empty() ? -std::numeric_limits<double>::infinity() : v.front();
}

double FramePush::log_sv_min() const {
    auto v = log_singular_values();
    return v.empty() ? std::numeric_limits<double>::infinity() : v.back();
}

} // namespace singhyp
