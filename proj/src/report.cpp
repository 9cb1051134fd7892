#include "singhyp/report.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace singhyp {

using nlohmann::json;

namespace {

std::string tri(TriState t) {
    switch (t) {
        case TriState::yes: return "yes";
        case TriState::no: return "no";
        default: return "unknown";
    }
}

json box_json(const Box& b) {
    json j;
    for (int i = 0; i < b.dim(); ++i) j.push_back({b.lo[i], b.hi[i]});
    return j;
}

json class_json(const SingularityClass& c) {
    json j;
    j["sigma_index"] = c.sigma_index;
    j["eigenvalue_real_parts"] = c.re_eigs;
    j["index"] = c.index;
    j["hyperbolic"] = c.hyperbolic;
    if (c.saddle_value_defined) j["saddle_value"] = c.saddle_value;
    j["lorenz_like"] = c.lorenz_like;
    j["escaping_stable_dim"] = c.escaping_stable_dim;
    j["escaping_unstable_dim"] = c.escaping_unstable_dim;
    j["center_dim"] = c.center_dim;
    j["center_status"] = tri(c.center_status);
    j["trivial_class"] = c.trivial_class;
    return j;
}

// fixed formatting so identical runs produce identical bytes
std::string dump(const json& j) { return j.dump(2) + "\n"; }

} // namespace

std::string verdict_to_json(const Verdict& v, const AnalysisConfig& cfg) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "verdict";
    j["flow"] = cfg.flow_name;
    j["seed"] = v.seed;
    j["region"] = box_json(v.region);
    j["verdict"] = tri(v.multisingular);
    j["failing_clause"] = v.failing_clause;
    j["checks"] = {{"all_singularities_hyperbolic", v.all_singularities_hyperbolic},
                   {"dominated", tri(v.dominated)},
                   {"E_contracted_reparam", tri(v.E_contracted_reparam)},
                   {"F_expanded_reparam", tri(v.F_expanded_reparam)},
                   {"index_consistency", tri(v.index_consistency)}};
    j["dims"] = {{"E", v.dimE}, {"F", v.dimF}};
    j["margins"] = {{"domination", v.domination_margin},
                    {"rate_E", v.rate_E},
                    {"rate_F", v.rate_F},
                    {"delta_rate", v.delta_rate}};
    j["S_E"] = v.S_E;
    j["S_F"] = v.S_F;
    j["trivial_singularities"] = v.trivial_sigmas;
    json cl = json::array();
    for (const auto& c : v.classes) cl.push_back(class_json(c));
    j["singularities"] = cl;
    j["sampling"] = {{"regular_anchors", v.n_regular_anchors},
                     {"center_anchors", v.n_center_anchors},
                     {"chain_classes", v.n_chain_classes}};
    j["warnings"] = v.warnings;
    return dump(j);
}

std::string verdict_to_text(const Verdict& v) {
    std::ostringstream os;
    os << "verdict: ";
    if (v.multisingular == TriState::yes) {
        if (v.S_E.empty() && v.S_F.empty() && v.n_center_anchors == 0)
            os << "hyperbolic (no singularities engaged)";
        else if (v.S_E.empty())
            os << "singular hyperbolic (S_E empty)";
        else if (v.S_F.empty())
            os << "singular hyperbolic (S_F empty)";
        else
            os << "multisingular hyperbolic";
    } else if (v.multisingular == TriState::no) {
        os << "not multisingular hyperbolic";
    } else {
        os << "unknown";
    }
    os << "\n";
    auto set_str = [](const std::vector<int>& s) {
        std::ostringstream o;
        o << "{";
        for (size_t i = 0; i < s.size(); ++i) o << (i ? "," : "") << "sigma" << s[i];
        o << "}";
        return o.str();
    };
    os << "S_E = " << set_str(v.S_E) << ", S_F = " << set_str(v.S_F);
    if (!v.trivial_sigmas.empty()) os << ", trivial = " << set_str(v.trivial_sigmas);
    os << "\n";
    os << "dims: E = " << v.dimE << ", F = " << v.dimF << "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "domination margin = %.6g, rate_E = %.6g, rate_F = %.6g (delta = %.3g)\n",
                  v.domination_margin, v.rate_E, v.rate_F, v.delta_rate);
    os << buf;
    if (!v.failing_clause.empty()) os << "failing clause: " << v.failing_clause << "\n";
    for (const auto& w : v.warnings) os << "warning: " << w << "\n";
    return os.str();
}

std::string classification_to_json(const VectorFieldSpec& spec,
                                   const std::vector<SingularityClass>& classes) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "classification";
    json arr = json::array();
    for (const auto& c : classes) {
        json cj = class_json(c);
        json pos = json::array();
        const Vec& p = spec.singularities[static_cast<size_t>(c.sigma_index)].position;
        for (int i = 0; i < p.size(); ++i) pos.push_back(p[i]);
        cj["position"] = pos;
        arr.push_back(cj);
    }
    j["singularities"] = arr;
    return dump(j);
}

std::string chain_graph_to_text(const ChainGraph& g) {
    std::ostringstream os;
    os << "# box_id center... -> targets (exit node = " << g.exit_node() << ")\n";
    for (long b = 0; b < g.cover.n_boxes(); ++b) {
        if (g.adj[static_cast<size_t>(b)].empty()) continue;
        os << b;
        Vec c = g.cover.cell_center(b);
        char buf[64];
        for (int i = 0; i < c.size(); ++i) {
            std::snprintf(buf, sizeof buf, " %.9g", c[i]);
            os << buf;
        }
        os << " ->";
        for (const auto& e : g.adj[static_cast<size_t>(b)]) os << " " << e.target;
        os << "\n";
    }
    return os.str();
}

std::string chain_classes_to_csv(const ChainGraph& g) {
    auto classes = chain_classes(g);
    LyapunovOrder order = discrete_lyapunov(g);
    std::ostringstream os;
    os << "box_id,class_id,scc_level";
    for (int i = 0; i < g.cover.dim(); ++i) os << ",c" << i;
    os << "\n";
    for (size_t ci = 0; ci < classes.size(); ++ci) {
        for (long b : classes[ci]) {
            os << b << "," << ci << "," << order.scc_level[static_cast<size_t>(g.scc_id[static_cast<size_t>(b)])];
            Vec c = g.cover.cell_center(b);
            char buf[64];
            for (int i = 0; i < c.size(); ++i) {
                std::snprintf(buf, sizeof buf, ",%.9g", c[i]);
                os << buf;
            }
            os << "\n";
        }
    }
    return os.str();
}

std::string trajectory_to_csv(const TrajectorySample& tr) {
    std::ostringstream os;
    os << "t";
    if (!tr.points.empty())
        for (int i = 0; i < tr.points[0].size(); ++i) os << ",x" << i + 1;
    os << "\n";
    char buf[64];
    for (size_t k = 0; k < tr.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g", tr.times[k]);
        os << buf;
        for (int i = 0; i < tr.points[k].size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.12g", tr.points[k][i]);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string cocycle_trace_csv(const VectorFieldSpec& spec, const CocycleSpec& cE,
                              const CocycleSpec& cF, const Vec& x0, double t_end, double dt,
                              double tol) {
    std::ostringstream os;
    os << "t,log_hE,log_hF";
    for (int i = 0; i < x0.size(); ++i) os << ",x" << i + 1;
    os << ",dist_to_singularity\n";
    ProjectivePoint L0 = section_of_field(spec, x0);
    char buf[64];
    Vec x = x0;
    for (double t = 0; t <= t_end + 1e-9; t += dt) {
        LogCocycleValue he = log_h_product(spec, cE, L0, t, tol);
        LogCocycleValue hf = log_h_product(spec, cF, L0, t, tol);
        if (he.status != FlowStatus::ok || hf.status != FlowStatus::ok) break;
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g", t, he.log_value, hf.log_value);
        os << buf;
        for (int i = 0; i < x.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.9g", x[i]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.9g", spec.singularity_distance(x));
        os << buf << "\n";
        FlowResult r = advance(spec, x, dt, tol);
        if (r.status != FlowStatus::ok) break;
        x = r.x;
    }
    return os.str();
}

std::string splitting_to_json(const SplittingEstimate& est) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "splitting";
    j["dims"] = {{"E", est.dimE}, {"F", est.dimF}};
    j["horizon"] = est.horizon;
    j["domination_margin"] = est.domination_margin;
    j["anchors_dropped"] = est.n_dropped;
    json arr = json::array();
    for (const auto& a : est.anchors) {
        if (a.status == FlowStatus::failed) continue;
        json aj;
        json base = json::array();
        for (int i = 0; i < a.L.x.size(); ++i) base.push_back(a.L.x[i]);
        aj["base"] = base;
        aj["T_eff"] = a.T_eff;
        aj["exponents"] = a.exponents;
        aj["margin"] = a.margin;
        arr.push_back(aj);
    }
    j["anchors"] = arr;
    return dump(j);
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

} // namespace singhyp
