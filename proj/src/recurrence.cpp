#include "singhyp/recurrence.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace singhyp {

BoxCover::BoxCover(Box r, std::vector<int> g, double e, double tm)
    : region(std::move(r)), grid(std::move(g)), eps(e), t_max(tm) {
    if (static_cast<int>(grid.size()) == 1 && region.dim() > 1)
        grid.assign(static_cast<size_t>(region.dim()), grid[0]);
    if (static_cast<int>(grid.size()) != region.dim())
        throw std::invalid_argument("BoxCover: grid size does not match dimension");
    if (!(eps > 0)) throw std::invalid_argument("BoxCover: eps must be positive");
    if (!(t_max >= 1)) throw std::invalid_argument("BoxCover: t_max must be >= 1");
    Vec w = cell_width();
    for (int i = 0; i < region.dim(); ++i) {
        if (grid[static_cast<size_t>(i)] < 1)
            throw std::invalid_argument("BoxCover: grid must be positive");
        if (w[i] < 2.0 * eps - 1e-12)
            throw std::invalid_argument("BoxCover: cell edge length must be >= 2*eps");
    }
}

long BoxCover::n_boxes() const {
    long n = 1;
    for (int g : grid) n *= g;
    return n;
}

Vec BoxCover::cell_width() const {
    Vec w = region.widths();
    for (int i = 0; i < dim(); ++i) w[i] /= grid[static_cast<size_t>(i)];
    return w;
}

std::vector<long> BoxCover::to_multi(long idx) const {
    std::vector<long> m(static_cast<size_t>(dim()));
    for (int i = dim() - 1; i >= 0; --i) {
        m[static_cast<size_t>(i)] = idx % grid[static_cast<size_t>(i)];
        idx /= grid[static_cast<size_t>(i)];
    }
    return m;
}

Box BoxCover::cell(long idx) const {
    auto m = to_multi(idx);
    Vec w = cell_width();
    Vec lo(dim()), hi(dim());
    for (int i = 0; i < dim(); ++i) {
        lo[i] = region.lo[i] + w[i] * static_cast<double>(m[static_cast<size_t>(i)]);
        hi[i] = lo[i] + w[i];
    }
    return Box(lo, hi);
}

Vec BoxCover::cell_center(long idx) const { return cell(idx).center(); }

long BoxCover::locate(const Vec& x) const {
    Vec w = cell_width();
    long idx = 0;
    for (int i = 0; i < dim(); ++i) {
        if (x[i] < region.lo[i] || x[i] > region.hi[i]) return -1;
        long k = static_cast<long>(std::floor((x[i] - region.lo[i]) / w[i]));
        k = std::clamp<long>(k, 0, grid[static_cast<size_t>(i)] - 1);
        idx = idx * grid[static_cast<size_t>(i)] + k;
    }
    return idx;
}

std::vector<long> BoxCover::cells_within(const Vec& x, double radius) const {
    Vec w = cell_width();
    std::vector<std::pair<long, long>> ranges(static_cast<size_t>(dim()));
    for (int i = 0; i < dim(); ++i) {
        if (x[i] + radius < region.lo[i] || x[i] - radius > region.hi[i]) return {};
        long klo = static_cast<long>(std::floor((x[i] - radius - region.lo[i]) / w[i]));
        long khi = static_cast<long>(std::floor((x[i] + radius - region.lo[i]) / w[i]));
        klo = std::clamp<long>(klo, 0, grid[static_cast<size_t>(i)] - 1);
        khi = std::clamp<long>(khi, 0, grid[static_cast<size_t>(i)] - 1);
        ranges[static_cast<size_t>(i)] = {klo, khi};
    }
    std::vector<long> out;
    std::vector<long> m(static_cast<size_t>(dim()));
    for (size_t i = 0; i < m.size(); ++i) m[i] = ranges[i].first;
    while (true) {
        long idx = 0;
        for (int i = 0; i < dim(); ++i) idx = idx * grid[static_cast<size_t>(i)] + m[static_cast<size_t>(i)];
        if (cell(idx).distance(x) < radius) out.push_back(idx);
        int i = dim() - 1;
        while (i >= 0) {
            if (++m[static_cast<size_t>(i)] <= ranges[static_cast<size_t>(i)].second) break;
            m[static_cast<size_t>(i)] = ranges[static_cast<size_t>(i)].first;
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

std::vector<Vec> cell_samples(const BoxCover& cover, long idx, int n) {
    // center plus near-corner variants; corners sit at 0.45 of the half-width
    // so samples reach close to cell boundaries (eps-jumps across shared
    // corners are what keep saddle-type classes connected at box level)
    Box b = cover.cell(idx);
    std::vector<Vec> pts;
    pts.push_back(b.center());
    const int d = cover.dim();
    Vec w = b.widths();
    for (int mask = 0; mask < (1 << d) && static_cast<int>(pts.size()) < n; ++mask) {
        Vec p = b.center();
        for (int i = 0; i < d; ++i) p[i] += ((mask >> i) & 1 ? 0.45 : -0.45) * w[i];
        pts.push_back(p);
    }
    if (static_cast<int>(pts.size()) > n) pts.resize(static_cast<size_t>(n));
    return pts;
}

bool ChainGraph::has_self_edge(long node) const {
    for (const Edge& e : adj[static_cast<size_t>(node)])
        if (e.target == node) return true;
    return false;
}

std::vector<double> ChainGraph::edge_times() const {
    std::vector<double> ts;
    for (double t = 1.0; t <= cover.t_max + 1e-9; t *= 1.5) ts.push_back(t);
    return ts;
}

namespace {

// Iterative Tarjan SCC over the graph (exit node included).
void run_scc(ChainGraph& g) {
    const long n = static_cast<long>(g.adj.size());
    std::vector<long> index(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
    std::vector<char> on_stack(static_cast<size_t>(n), 0);
    std::vector<long> stack;
    g.scc_id.assign(static_cast<size_t>(n), -1);
    g.n_scc = 0;
    long counter = 0;

    struct Frame {
        long v;
        size_t child;
    };
    std::vector<Frame> call;
    for (long root = 0; root < n; ++root) {
        if (index[static_cast<size_t>(root)] != -1) continue;
        call.push_back({root, 0});
        index[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<size_t>(root)] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& edges = g.adj[static_cast<size_t>(f.v)];
            bool descended = false;
            while (f.child < edges.size()) {
                long wv = edges[f.child].target;
                ++f.child;
                if (index[static_cast<size_t>(wv)] == -1) {
                    index[static_cast<size_t>(wv)] = low[static_cast<size_t>(wv)] = counter++;
                    stack.push_back(wv);
                    on_stack[static_cast<size_t>(wv)] = 1;
                    call.push_back({wv, 0});
                    descended = true;
                    break;
                }
                if (on_stack[static_cast<size_t>(wv)])
                    low[static_cast<size_t>(f.v)] =
                        std::min(low[static_cast<size_t>(f.v)], index[static_cast<size_t>(wv)]);
            }
            if (descended) continue;
            long v = f.v;
            call.pop_back();
            if (!call.empty())
                low[static_cast<size_t>(call.back().v)] =
                    std::min(low[static_cast<size_t>(call.back().v)], low[static_cast<size_t>(v)]);
            if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
                long id = g.n_scc++;
                while (true) {
                    long wv = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<size_t>(wv)] = 0;
                    g.scc_id[static_cast<size_t>(wv)] = id;
                    if (wv == v) break;
                }
            }
        }
    }

    g.scc_members.assign(static_cast<size_t>(g.n_scc), {});
    for (long v = 0; v < n; ++v) g.scc_members[static_cast<size_t>(g.scc_id[static_cast<size_t>(v)])].push_back(v);
    g.scc_recurrent.assign(static_cast<size_t>(g.n_scc), 0);
    for (long s = 0; s < g.n_scc; ++s) {
        const auto& mem = g.scc_members[static_cast<size_t>(s)];
        if (mem.size() > 1) {
            g.scc_recurrent[static_cast<size_t>(s)] = 1;
            continue;
        }
        if (mem.size() == 1 && mem[0] != static_cast<long>(g.adj.size()) - 1 &&
            g.has_self_edge(mem[0]))
            g.scc_recurrent[static_cast<size_t>(s)] = 1;
    }

    std::vector<std::set<long>> cond(static_cast<size_t>(g.n_scc));
    for (long v = 0; v < n; ++v)
        for (const auto& e : g.adj[static_cast<size_t>(v)]) {
            long a = g.scc_id[static_cast<size_t>(v)], b = g.scc_id[static_cast<size_t>(e.target)];
            if (a != b) cond[static_cast<size_t>(a)].insert(b);
        }
    g.cond_adj.assign(static_cast<size_t>(g.n_scc), {});
    for (long s = 0; s < g.n_scc; ++s)
        g.cond_adj[static_cast<size_t>(s)].assign(cond[static_cast<size_t>(s)].begin(),
                                                  cond[static_cast<size_t>(s)].end());
}

} // namespace

ChainGraph build_chain_graph(const VectorFieldSpec& spec, const BoxCover& cover,
                             int samples_per_box, double tol, bool parallel) {
    if (!spec.domain.contains_box(cover.region) && !spec.is_chart_glued())
        throw std::invalid_argument("build_chain_graph: region not inside the flow domain");
    ChainGraph g;
    g.cover = cover;
    const long n = cover.n_boxes();
    g.adj.assign(static_cast<size_t>(n) + 1, {});
    const std::vector<double> times = g.edge_times();

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (long b = 0; b < n; ++b) {
        std::set<long> seen;
        std::vector<ChainGraph::Edge> edges;
        auto samples = cell_samples(cover, b, samples_per_box);
        for (size_t si = 0; si < samples.size(); ++si) {
            Vec x = samples[si];
            double t_cur = 0;
            bool alive = true;
            for (double tk : times) {
                FlowResult r = advance(spec, x, tk - t_cur, tol);
                x = r.x;
                t_cur = tk;
                if (r.status != FlowStatus::ok) {
                    alive = false;
                } else {
                    auto targets = cover.cells_within(x, cover.eps);
                    if (targets.empty()) alive = false;
                    for (long j : targets) {
                        if (seen.insert(j).second)
                            edges.push_back({j, static_cast<std::int32_t>(si),
                                             static_cast<float>(tk)});
                    }
                }
                if (!alive) {
                    if (seen.insert(n).second)
                        edges.push_back({n, static_cast<std::int32_t>(si),
                                         static_cast<float>(t_cur)});
                    break;
                }
            }
        }
        g.adj[static_cast<size_t>(b)] = std::move(edges);
    }

    run_scc(g);
    return g;
}

std::vector<std::vector<long>> chain_classes(const ChainGraph& g) {
    std::vector<std::vector<long>> out;
    for (long s = 0; s < g.n_scc; ++s)
        if (g.scc_recurrent[static_cast<size_t>(s)]) out.push_back(g.scc_members[static_cast<size_t>(s)]);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

LyapunovOrder discrete_lyapunov(const ChainGraph& g) {
    // longest path to a sink in the condensation, by reverse topological order
    LyapunovOrder order;
    order.scc_level.assign(static_cast<size_t>(g.n_scc), 0);
    std::vector<int> indeg(static_cast<size_t>(g.n_scc), 0);
    for (long s = 0; s < g.n_scc; ++s)
        for (long t : g.cond_adj[static_cast<size_t>(s)]) indeg[static_cast<size_t>(t)]++;
    std::vector<long> topo;
    std::vector<long> q;
    for (long s = 0; s < g.n_scc; ++s)
        if (indeg[static_cast<size_t>(s)] == 0) q.push_back(s);
    while (!q.empty()) {
        long s = q.back();
        q.pop_back();
        topo.push_back(s);
        for (long t : g.cond_adj[static_cast<size_t>(s)])
            if (--indeg[static_cast<size_t>(t)] == 0) q.push_back(t);
    }
    if (static_cast<long>(topo.size()) != g.n_scc)
        throw std::logic_error("condensation is not acyclic");
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        long s = *it;
        long lvl = 0;
        for (long t : g.cond_adj[static_cast<size_t>(s)])
            lvl = std::max(lvl, order.scc_level[static_cast<size_t>(t)] + 1);
        order.scc_level[static_cast<size_t>(s)] = lvl;
    }
    return order;
}

namespace {

std::vector<char> reach(const ChainGraph& g, const std::vector<long>& seeds, bool forward) {
    const long n = static_cast<long>(g.adj.size());
    std::vector<std::vector<long>> radj;
    if (!forward) {
        radj.assign(static_cast<size_t>(n), {});
        for (long v = 0; v < n; ++v)
            for (const auto& e : g.adj[static_cast<size_t>(v)]) radj[static_cast<size_t>(e.target)].push_back(v);
    }
    std::vector<char> vis(static_cast<size_t>(n), 0);
    std::vector<long> q = seeds;
    for (long s : seeds) vis[static_cast<size_t>(s)] = 1;
    while (!q.empty()) {
        long v = q.back();
        q.pop_back();
        if (forward) {
            for (const auto& e : g.adj[static_cast<size_t>(v)])
                if (!vis[static_cast<size_t>(e.target)]) {
                    vis[static_cast<size_t>(e.target)] = 1;
                    q.push_back(e.target);
                }
        } else {
            for (long w : radj[static_cast<size_t>(v)])
                if (!vis[static_cast<size_t>(w)]) {
                    vis[static_cast<size_t>(w)] = 1;
                    q.push_back(w);
                }
        }
    }
    return vis;
}

} // namespace

FiltratingSet filtrating_neighborhood(const ChainGraph& g, int class_id) {
    auto classes = chain_classes(g);
    if (class_id < 0 || class_id >= static_cast<int>(classes.size()))
        throw std::invalid_argument("filtrating_neighborhood: no such class");
    const auto& cls = classes[static_cast<size_t>(class_id)];
    auto fwd = reach(g, cls, true);
    auto bwd = reach(g, cls, false);
    FiltratingSet out;
    const long n = g.cover.n_boxes();
    std::set<long> in_class(cls.begin(), cls.end());
    for (long v = 0; v < n; ++v) {
        if (fwd[static_cast<size_t>(v)]) out.attracting.push_back(v);
        if (bwd[static_cast<size_t>(v)]) out.repelling.push_back(v);
        if (fwd[static_cast<size_t>(v)] && bwd[static_cast<size_t>(v)]) {
            out.boxes.push_back(v);
            if (!in_class.count(v) &&
                g.scc_recurrent[static_cast<size_t>(g.scc_id[static_cast<size_t>(v)])])
                throw std::runtime_error(
                    "filtrating_neighborhood: another chain class inside every candidate; "
                    "refine grid");
        }
    }
    return out;
}

namespace {

// Sample points along a declared connection leg (exact chart orbits).
std::vector<Vec> sample_leg(const GluedChartFlow& g, const ConnectionLeg& leg, int n) {
    const Chart& c = g.charts[static_cast<size_t>(leg.chart)];
    std::vector<Vec> pts;
    if (leg.starts_at_equilibrium) {
        // march backward from the exit point toward the equilibrium
        for (int i = 0; i < n; ++i) {
            double tau = -8.0 * static_cast<double>(i) / std::max(1, n - 1);
            pts.push_back(c.origin + Mat((c.A * tau).exp()) * (leg.end - c.origin));
        }
    } else if (leg.ends_at_equilibrium) {
        for (int i = 0; i < n; ++i) {
            double tau = 8.0 * static_cast<double>(i) / std::max(1, n - 1);
            pts.push_back(c.origin + Mat((c.A * tau).exp()) * (leg.start - c.origin));
        }
    } else {
        pts.push_back(leg.start);
        pts.push_back(0.5 * (leg.start + leg.end));
    }
    return pts;
}

std::vector<Vec> center_directions(const Mat& frame, int per_dim, unsigned seed) {
    const int m = static_cast<int>(frame.cols());
    std::vector<Vec> dirs;
    if (m == 0) return dirs;
    if (m == 1) {
        dirs.push_back(frame.col(0));
        return dirs;
    }
    if (m == 2) {
        int n = std::max(2, per_dim);
        for (int j = 0; j < n; ++j) {
            double th = M_PI * static_cast<double>(j) / n;
            dirs.push_back(std::cos(th) * frame.col(0) + std::sin(th) * frame.col(1));
        }
        return dirs;
    }
    // m >= 3: deterministic pseudo-random directions on the projective sphere
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    int n = std::max(4, per_dim * m);
    for (int j = 0; j < n; ++j) {
        Vec c(m);
        for (int i = 0; i < m; ++i) c[i] = nd(rng);
        dirs.push_back(frame * c);
    }
    return dirs;
}

} // namespace

ExtendedSetSample sample_extended_set(const VectorFieldSpec& spec, const ChainGraph& graph,
                                      const std::vector<int>& class_ids,
                                      const std::vector<SigmaCenterInfo>& centers,
                                      const ExtendedSetOptions& opts) {
    ExtendedSetSample out;
    auto classes = chain_classes(graph);

    std::vector<long> boxes;
    for (int cid : class_ids) {
        if (cid < 0 || cid >= static_cast<int>(classes.size()))
            throw std::invalid_argument("sample_extended_set: no such class");
        boxes.insert(boxes.end(), classes[static_cast<size_t>(cid)].begin(),
                     classes[static_cast<size_t>(cid)].end());
    }

    if (spec.is_chart_glued() && !spec.charts->connections.empty()) {
        // exact anchors from the declared heteroclinic orbits
        for (const auto& conn : spec.charts->connections) {
            for (const auto& leg : conn.legs) {
                for (const Vec& p : sample_leg(*spec.charts, leg, 6)) {
                    if (spec.evaluate(p).norm() <= 100 * kSingTol) continue;
                    if (!graph.cover.region.contains(p)) continue;
                    ExtendedSetSample::RegularAnchor ra;
                    ra.L = section_of_field(spec, p);
                    OrbitRecord back = record_orbit(spec, p, -opts.settle_time, 0.5, opts.tol);
                    if (back.status != FlowStatus::failed && !back.points.empty())
                        ra.history = std::make_shared<OrbitRecord>(reversed_record(back));
                    ra.source_box = graph.cover.locate(p);
                    out.regular.push_back(std::move(ra));
                }
            }
        }
    } else {
        std::vector<long> selected = boxes;
        if (static_cast<int>(selected.size()) > opts.max_regular) {
            std::vector<long> strided;
            double step = static_cast<double>(selected.size()) / opts.max_regular;
            for (int i = 0; i < opts.max_regular; ++i)
                strided.push_back(selected[static_cast<size_t>(i * step)]);
            selected = strided;
        }
        for (long b : selected) {
            Vec x0 = graph.cover.cell_center(b);
            if (spec.singularity_distance(x0) <= kSingTol) continue;
            auto rec = std::make_shared<OrbitRecord>(
                record_orbit(spec, x0, opts.settle_time, 0.5, opts.tol));
            if (rec->status != FlowStatus::ok) continue;
            const Vec& xe = rec->end();
            if (!graph.cover.region.contains(xe)) continue;
            if (spec.evaluate(xe).norm() <= 100 * kSingTol) continue;
            ExtendedSetSample::RegularAnchor ra;
            ra.L = section_of_field(spec, xe);
            ra.history = rec;
            ra.source_box = b;
            out.regular.push_back(std::move(ra));
        }
    }

    for (const auto& ci : centers) {
        const auto& sigma = spec.singularities[static_cast<size_t>(ci.sigma_index)];
        Mat frame = ci.center_frame;
        bool fallback = false;
        if (ci.status == TriState::unknown || frame.cols() == 0) {
            frame = Mat::Identity(spec.dim, spec.dim);
            fallback = true;
            out.warnings.push_back("center space unavailable at singularity " +
                                   std::to_string(ci.sigma_index) +
                                   "; sampling the full projective fiber (conservative superset)");
        }
        for (const Vec& dsel : center_directions(frame, opts.directions_per_center_dim,
                                                 opts.seed + static_cast<unsigned>(ci.sigma_index))) {
            ExtendedSetSample::CenterAnchor ca;
            ca.L = ProjectivePoint::make(sigma.position, dsel);
            ca.sigma_index = ci.sigma_index;
            ca.fallback_full_fiber = fallback;
            out.center.push_back(std::move(ca));
        }
    }
    return out;
}

} // namespace singhyp
