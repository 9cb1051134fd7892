#ifndef SINGHYP_SPLITTING_HPP
#define SINGHYP_SPLITTING_HPP

#include "singhyp/cocycle.hpp"
#include "singhyp/recurrence.hpp"

#include <optional>
#include <string>

namespace singhyp {

inline constexpr double kEigTol = 1e-6;    // relative equal-eigenvalue tolerance
inline constexpr double kGapTol = 0.05;    // minimal exponent gap for auto dims
inline constexpr double kDeltaRate = 0.05; // safety margin on certified rates

/// Eigenvalue-level classification of a hyperbolic singularity, plus the
/// escaping-manifold / center-space data filled in by resolve_center.
struct SingularityClass {
    int sigma_index = -1;
    std::vector<double> re_eigs; // ascending real parts (Lyapunov exponents)
    int index = 0;               // stable dimension s
    bool hyperbolic = false;
    double saddle_value = 0;     // lambda_s + lambda_{s+1}
    bool saddle_value_defined = false; // false for sinks/sources
    bool lorenz_like = false;
    int strong_dim = 0; // dim G^ss (sv>0) or dim G^uu (sv<0)
    int center_block_dim = 0; // dim G^cu (sv>0) or dim G^cs (sv<0)

    // filled by resolve_center:
    TriState expected_strong_escaping = TriState::unknown;
    int escaping_stable_dim = 0;
    int escaping_unstable_dim = 0;
    int center_dim = -1;
    Mat center_frame;
    TriState center_status = TriState::unknown;
    bool trivial_class = false; // entire invariant manifold escaping, tiny chain class
};

SingularityClass classify_singularity(const VectorFieldSpec& spec, int sigma_index);

/// Orthonormal real basis of the invariant subspace for the eigenvalue range
/// [i_lo, i_hi] in the sorted-by-real-part order (complex pairs kept whole).
Mat invariant_subspace(const VectorFieldSpec& spec, int sigma_index, int i_lo, int i_hi);

struct EscapeOptions {
    double T_esc = 20.0;
    double r_loc = 1e-3;
    int n_samples = 8;
    double tol = kDefaultTol;
    // an orbit that stays in the region and travels at least this far from the
    // singularity counts as recurrence evidence
    double travel_factor = 50.0;
};

/// Samples a sphere in the local invariant manifold spanned by `subspace` and
/// follows each orbit away from the singularity (backward for stable
/// manifolds, forward for unstable).  yes: every orbit leaves the region;
/// no: some orbit demonstrably stays and travels; unknown: timeout.
TriState escaping_manifold_test(const VectorFieldSpec& spec, int sigma_index,
                                const Mat& subspace, bool stable_side, const Box& region,
                                const EscapeOptions& opts = {});

/// Fills the escape flags, escaping dims, and center space of `cls`.
/// Candidate strong spaces are restricted by the classification: for a
/// Lorenz-like singularity the tested stable candidates lie inside the strong
/// block G^ss (sv>0 case; mirrored for sv<0), which keeps the sampled test
/// meaningful when the full stable manifold meets the invariant set in a
/// measure-zero set.
void resolve_center(const VectorFieldSpec& spec, SingularityClass& cls, const Box& region,
                    const EscapeOptions& opts = {});

// --- finite-horizon splitting estimates --------------------------------------

struct SplittingOptions {
    double horizon = 20.0;
    std::optional<int> dim_E_hint;
    double gap_tol = kGapTol;
    double tol = kDefaultTol;
    double renorm_dt = 0.5;
    unsigned seed = 777;
    bool parallel = true;
};

struct AnchorEstimate {
    ProjectivePoint L;
    int sigma_index = -1; // >= 0 for center anchors
    FlowStatus status = FlowStatus::ok;
    double T_eff = 0;
    Mat E; // d x dimE orthonormal, in the normal fiber at L
    Mat F; // d x dimF orthonormal
    std::vector<double> exponents; // finite-time normal exponents, descending
    double logE_max = 0; // log |psi^T restricted to E|
    double logF_min = 0; // log of the smallest singular value on F
    double margin = 0;   // (logF_min - logE_max) / T_eff
    Vec x_end;
    double log_dir_growth = 0;
    bool based_at_sigma = false;
    std::shared_ptr<OrbitRecord> forward; // the recorded forward segment
};

/// Finite-horizon dominated-splitting estimate over sampled anchors.
/// E-fibers come from pulling a generic frame backward along the recorded
/// forward orbit; F-fibers from pushing a generic frame through the anchor's
/// incoming history segment (orthogonal complement of E when no history).
struct SplittingEstimate {
    int dimE = 0, dimF = 0;
    double horizon = 0;
    std::vector<AnchorEstimate> anchors;
    double domination_margin = std::numeric_limits<double>::infinity();
    int n_dropped = 0;
};

struct SplitAnchorInput {
    ProjectivePoint L;
    std::shared_ptr<OrbitRecord> history; // may be null
    int sigma_index = -1;
};

SplittingEstimate estimate_splitting(const VectorFieldSpec& spec,
                                     const std::vector<SplitAnchorInput>& anchors,
                                     const SplittingOptions& opts);

std::vector<SplitAnchorInput> anchors_from_sample(const ExtendedSetSample& sample);

/// Worst log-slack of |psi^t v|/|v| <= (1/2) |psi^t u|/|u| over sampled
/// v in E, u in F at every anchor (negative slack = domination fails at t_dom).
double check_domination(const VectorFieldSpec& spec, const SplittingEstimate& est,
                        double t_dom, double tol = kDefaultTol);

/// Cone field around the F frames (aperture a); around_E swaps the roles.
struct ConeField {
    double aperture = 1.0;
    bool around_E = false;
};

struct ConeCheck {
    bool invariant = false;
    double margin = 0; // min over rays of log(a |w_F| / |w_E|)
};
ConeCheck check_cone_invariance(const VectorFieldSpec& spec, const SplittingEstimate& est,
                                const ConeField& cone, double t, double tol = kDefaultTol);

/// rate_E = max over anchors of (1/T) log|h_E^T psi^T|_E|,
/// rate_F = min over anchors of (1/T) log(min singular value of h_F^T psi^T|_F).
struct ReparamRates {
    double rate_E = -std::numeric_limits<double>::infinity();
    double rate_F = std::numeric_limits<double>::infinity();
    bool F_vacuous = false;
    bool E_vacuous = false;
};
ReparamRates check_reparam_rates(const VectorFieldSpec& spec, const SplittingEstimate& est,
                                 const CocycleSpec& cspec_E, const CocycleSpec& cspec_F);

// --- the verdict --------------------------------------------------------------

struct VerdictConfig {
    std::vector<int> grid = {24};
    double eps = 0.05;
    double t_max = 50.0;
    int samples_per_box = 8;
    double edge_tol = 1e-6;
    double horizon = 20.0;
    double t_dom = 1.0;
    double settle_time = 20.0;
    int max_regular_anchors = 48;
    int directions_per_center_dim = 8;
    double delta_rate = kDeltaRate;
    EscapeOptions escape;
    double tol = kDefaultTol;
    unsigned seed = 12345;
    bool parallel = true;
    bool classical_singular = false; // S_E = empty, S_F = all (plain singular hyperbolicity)
};

struct Verdict {
    Box region;
    TriState multisingular = TriState::unknown;
    std::string failing_clause;

    bool all_singularities_hyperbolic = true;
    TriState dominated = TriState::unknown;
    TriState E_contracted_reparam = TriState::unknown;
    TriState F_expanded_reparam = TriState::unknown;
    TriState index_consistency = TriState::unknown;

    std::vector<SingularityClass> classes;
    std::vector<int> S_E, S_F, trivial_sigmas;
    int dimE = 0, dimF = 0;
    double domination_margin = 0;
    double rate_E = 0, rate_F = 0;
    double delta_rate = kDeltaRate;
    int n_regular_anchors = 0, n_center_anchors = 0, n_chain_classes = 0;
    std::vector<std::string> warnings;
    unsigned seed = 0;
};

Verdict check_multisingular(const VectorFieldSpec& spec, const Box& region,
                            const VerdictConfig& cfg,
                            const ChainGraph* prebuilt_graph = nullptr);

} // namespace singhyp

#endif
