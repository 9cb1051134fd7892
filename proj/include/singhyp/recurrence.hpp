#ifndef SINGHYP_RECURRENCE_HPP
#define SINGHYP_RECURRENCE_HPP

#include "singhyp/poincare.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace singhyp {

/// Grid cover of a region with the pseudo-orbit parameters: jump tolerance eps
/// and the per-edge flow-time cap.  Cell edge lengths must be >= 2*eps.
struct BoxCover {
    Box region;
    std::vector<int> grid; // cells per axis
    double eps = 0.05;
    double t_max = 50.0;

    BoxCover() = default;
    BoxCover(Box r, std::vector<int> g, double e, double tm);

    int dim() const { return region.dim(); }
    long n_boxes() const;
    Vec cell_width() const;
    Box cell(long idx) const;
    Vec cell_center(long idx) const;
    long locate(const Vec& x) const; // -1 if outside the region
    std::vector<long> cells_within(const Vec& x, double radius) const;
    std::vector<long> to_multi(long idx) const;
};

/// Deterministic sample points of one cell: center plus corner variants at
/// quarter-width offsets, capped at n.
std::vector<Vec> cell_samples(const BoxCover& cover, long idx, int n);

/// Time->=1 reachability digraph over the cover: edge i -> j when some sample
/// of cell i flows, for a grid time in [1, t_max], to within eps of cell j.
/// Node n_boxes() is the virtual exit node (orbit left the inflated region or
/// the flow domain).
struct ChainGraph {
    BoxCover cover;
    struct Edge {
        long target;
        std::int32_t sample;
        float time;
    };
    std::vector<std::vector<Edge>> adj; // size n_boxes()+1 (exit last, no out-edges)

    std::vector<long> scc_id;             // per node
    long n_scc = 0;
    std::vector<char> scc_recurrent;      // size > 1 or self-edge
    std::vector<std::vector<long>> scc_members;
    std::vector<std::vector<long>> cond_adj; // condensation (deduplicated)

    long exit_node() const { return cover.n_boxes(); }
    bool has_self_edge(long node) const;
    std::vector<double> edge_times() const; // the geometric grid used
};

ChainGraph build_chain_graph(const VectorFieldSpec& spec, const BoxCover& cover,
                             int samples_per_box = 8, double tol = 1e-6,
                             bool parallel = true);

/// Recurrent SCCs as box-id lists, ordered by smallest member id.
std::vector<std::vector<long>> chain_classes(const ChainGraph& g);

/// Discrete Lyapunov order: longest-path layering on the condensation,
/// strictly decreasing along condensation edges.
struct LyapunovOrder {
    std::vector<long> scc_level;
    long level_of_box(const ChainGraph& g, long box) const { return scc_level[g.scc_id[box]]; }
};
LyapunovOrder discrete_lyapunov(const ChainGraph& g);

/// Forward-reachable set of the class intersected with the backward-reachable
/// set: a discrete filtrating neighborhood.  Throws if another recurrent class
/// is caught inside (refine the grid).
struct FiltratingSet {
    std::vector<long> boxes;       // the intersection
    std::vector<long> attracting;  // forward-closed side
    std::vector<long> repelling;   // backward-closed side
};
FiltratingSet filtrating_neighborhood(const ChainGraph& g, int class_id);

// --- extended-set sampling ---------------------------------------------------

enum class TriState { yes, no, unknown };

/// Center-space data for one singularity, provided by the classification side.
struct SigmaCenterInfo {
    int sigma_index = -1;
    Mat center_frame;               // d x m orthonormal
    TriState status = TriState::unknown; // unknown -> fall back to the full fiber
};

/// Sampled surrogate of the extended maximal invariant set over one chain
/// class: section anchors over recurrent regular points plus grids of
/// directions in the projective center spaces at the singularities.
struct ExtendedSetSample {
    struct RegularAnchor {
        ProjectivePoint L;
        std::shared_ptr<OrbitRecord> history; // incoming orbit segment ending at L.x
        long source_box = -1;
    };
    struct CenterAnchor {
        ProjectivePoint L;
        int sigma_index = -1;
        bool fallback_full_fiber = false;
    };
    std::vector<RegularAnchor> regular;
    std::vector<CenterAnchor> center;
    std::vector<std::string> warnings;
};

struct ExtendedSetOptions {
    double settle_time = 20.0;
    int max_regular = 48;
    int directions_per_center_dim = 8;
    double tol = kDefaultTol;
    unsigned seed = 12345;
};

ExtendedSetSample sample_extended_set(const VectorFieldSpec& spec, const ChainGraph& graph,
                                      const std::vector<int>& class_ids,
                                      const std::vector<SigmaCenterInfo>& centers,
                                      const ExtendedSetOptions& opts);

} // namespace singhyp

#endif
