#include "singhyp/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace singhyp {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

} // namespace

ConfigDoc ConfigDoc::parse_string(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            doc.data_[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = unquote(trim(line.substr(eq + 1)));
        doc.data_[section][key] = val;
    }
    return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
}

bool ConfigDoc::has_section(const std::string& s) const { return data_.count(s) > 0; }

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
    auto it = data_.find(section);
    return it != data_.end() && it->second.count(key) > 0;
}

std::vector<std::string> ConfigDoc::sections_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, _] : data_)
        if (name.rfind(prefix, 0) == 0) out.push_back(name);
    std::sort(out.begin(), out.end());
    return out;
}

std::string ConfigDoc::get_str(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    if (!has(section, key)) return fallback;
    return data_.at(section).at(key);
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    if (!has(section, key)) return fallback;
    return std::stod(data_.at(section).at(key));
}

int ConfigDoc::get_int(const std::string& section, const std::string& key, int fallback) const {
    if (!has(section, key)) return fallback;
    return std::stoi(data_.at(section).at(key));
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = data_.at(section).at(key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: not a boolean: " + v);
}

Vec parse_vec(const std::string& s) {
    std::istringstream in(s);
    std::vector<double> vals;
    double x;
    std::string tok;
    while (in >> tok) {
        std::replace(tok.begin(), tok.end(), ',', ' ');
        std::istringstream t(tok);
        while (t >> x) vals.push_back(x);
    }
    Vec v(static_cast<int>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) v[static_cast<int>(i)] = vals[i];
    return v;
}

Box parse_box(const std::string& s) {
    // "a:b, c:d, e:f"
    std::vector<double> lo, hi;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, ',')) {
        size_t colon = part.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("box literal needs lo:hi per axis: " + s);
        lo.push_back(std::stod(trim(part.substr(0, colon))));
        hi.push_back(std::stod(trim(part.substr(colon + 1))));
    }
    Vec l(static_cast<int>(lo.size())), h(static_cast<int>(hi.size()));
    for (size_t i = 0; i < lo.size(); ++i) {
        l[static_cast<int>(i)] = lo[i];
        h[static_cast<int>(i)] = hi[i];
    }
    return Box(l, h);
}

Mat parse_mat(const std::string& s) {
    std::vector<Vec> rows;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, ';')) rows.push_back(parse_vec(part));
    if (rows.empty()) return Mat(0, 0);
    Mat m(static_cast<int>(rows.size()), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw std::invalid_argument("matrix literal has ragged rows: " + s);
        m.row(static_cast<int>(i)) = rows[i];
    }
    return m;
}

Vec ConfigDoc::get_vec(const std::string& section, const std::string& key) const {
    return parse_vec(data_.at(section).at(key));
}

Box ConfigDoc::get_box(const std::string& section, const std::string& key) const {
    return parse_box(data_.at(section).at(key));
}

Mat ConfigDoc::get_mat(const std::string& section, const std::string& key) const {
    return parse_mat(data_.at(section).at(key));
}

std::vector<int> ConfigDoc::get_ints(const std::string& section, const std::string& key) const {
    Vec v = get_vec(section, key);
    std::vector<int> out;
    for (int i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(std::lround(v[i])));
    return out;
}

VectorFieldSpec flow_from_doc(const ConfigDoc& doc) {
    std::string kind = doc.get_str("flow", "kind", "lorenz");
    VectorFieldSpec spec;
    if (kind == "lorenz") {
        Vec p = doc.has("flow", "params") ? doc.get_vec("flow", "params") : parse_vec("10 28 2.66666666666666667");
        if (p.size() != 3) throw std::invalid_argument("lorenz needs 3 parameters");
        spec = builtin_lorenz(p[0], p[1], p[2]);
    } else if (kind == "linear") {
        Mat A = doc.get_mat("flow", "matrix");
        double hw = doc.get_double("flow", "halfwidth", 10.0);
        spec = builtin_linear(A, hw);
    } else if (kind == "charts") {
        auto glued = std::make_shared<GluedChartFlow>();
        for (const auto& sec : doc.sections_with_prefix("chart.")) {
            Chart c;
            c.box = doc.get_box(sec, "box");
            c.origin = doc.get_vec(sec, "origin");
            c.A = doc.get_mat(sec, "matrix");
            glued->charts.push_back(c);
        }
        for (const auto& sec : doc.sections_with_prefix("transition.")) {
            Transition t;
            t.src = {doc.get_int(sec, "src_chart", 0), doc.get_int(sec, "src_axis", 0),
                     doc.get_int(sec, "src_side", 1)};
            t.dst = {doc.get_int(sec, "dst_chart", 0), doc.get_int(sec, "dst_axis", 0),
                     doc.get_int(sec, "dst_side", 1)};
            t.M = doc.get_mat(sec, "map");
            t.b = doc.get_vec(sec, "offset");
            glued->transitions.push_back(t);
        }
        // declared heteroclinic orbits: leg.N = "chart | start | end | flag"
        // with flag one of start-eq, end-eq, none
        for (const auto& sec : doc.sections_with_prefix("connection.")) {
            Connection conn;
            conn.name = doc.get_str(sec, "name", sec);
            for (int li = 0; doc.has(sec, "leg." + std::to_string(li)); ++li) {
                std::string raw = doc.get_str(sec, "leg." + std::to_string(li), "");
                std::vector<std::string> parts;
                std::string item;
                std::istringstream in(raw);
                while (std::getline(in, item, '|')) parts.push_back(item);
                if (parts.size() < 3)
                    throw std::invalid_argument("connection leg needs chart | start | end");
                ConnectionLeg leg;
                leg.chart = static_cast<int>(std::lround(parse_vec(parts[0])[0]));
                leg.start = parse_vec(parts[1]);
                leg.end = parse_vec(parts[2]);
                if (parts.size() > 3) {
                    std::string flag = parts[3];
                    flag.erase(std::remove_if(flag.begin(), flag.end(), ::isspace), flag.end());
                    leg.starts_at_equilibrium = flag == "start-eq";
                    leg.ends_at_equilibrium = flag == "end-eq";
                }
                conn.legs.push_back(std::move(leg));
            }
            glued->connections.push_back(std::move(conn));
        }
        glued->validate();
        spec.dim = glued->dim();
        spec.name = "charts";
        spec.charts = glued;
        spec.domain = glued->bounding_box();
        auto g = spec.charts;
        spec.eval_fn = [g](const Vec& x) {
            int c = g->locate(x);
            if (c < 0) throw std::domain_error("charts: point outside all charts");
            return Vec(g->charts[static_cast<size_t>(c)].A *
                       (x - g->charts[static_cast<size_t>(c)].origin));
        };
        spec.jac_fn = [g](const Vec& x) {
            int c = g->locate(x);
            if (c < 0) throw std::domain_error("charts: point outside all charts");
            return g->charts[static_cast<size_t>(c)].A;
        };
        for (const auto& c : glued->charts)
            spec.singularities.push_back(make_singularity(spec, c.origin));
    } else {
        spec = builtin_by_name(kind);
    }
    // extra singularity seeds
    for (const auto& sec : doc.sections_with_prefix("singularity.")) {
        Vec p = doc.get_vec(sec, "position");
        bool known = false;
        for (const auto& s : spec.singularities)
            if ((s.position - p).norm() < 1e-9) known = true;
        if (!known) spec.singularities.push_back(make_singularity(spec, p));
    }
    if (doc.has("flow", "domain")) spec.domain = doc.get_box("flow", "domain");
    return spec;
}

AnalysisConfig analysis_from_doc(const ConfigDoc& doc) {
    AnalysisConfig cfg;
    cfg.flow = flow_from_doc(doc);
    cfg.flow_name = doc.get_str("flow", "kind", cfg.flow.name);
    cfg.pipeline = doc.get_str("analysis", "pipeline", "verify");
    cfg.region = doc.has("analysis", "region") ? doc.get_box("analysis", "region")
                                               : cfg.flow.domain;
    if (doc.has("analysis", "grid")) cfg.verdict.grid = doc.get_ints("analysis", "grid");
    cfg.verdict.eps = doc.get_double("analysis", "eps", cfg.verdict.eps);
    cfg.verdict.t_max = doc.get_double("analysis", "t_max", cfg.verdict.t_max);
    cfg.verdict.samples_per_box = doc.get_int("analysis", "samples_per_box",
                                              cfg.verdict.samples_per_box);
    cfg.verdict.horizon = doc.get_double("analysis", "horizon", cfg.verdict.horizon);
    cfg.verdict.t_dom = doc.get_double("analysis", "t_dom", cfg.verdict.t_dom);
    cfg.verdict.settle_time = doc.get_double("analysis", "settle", cfg.verdict.settle_time);
    cfg.verdict.tol = doc.get_double("analysis", "tol", cfg.verdict.tol);
    cfg.verdict.edge_tol = doc.get_double("analysis", "edge_tol", cfg.verdict.edge_tol);
    cfg.verdict.delta_rate = doc.get_double("analysis", "delta_rate", cfg.verdict.delta_rate);
    cfg.verdict.max_regular_anchors =
        doc.get_int("analysis", "max_anchors", cfg.verdict.max_regular_anchors);
    cfg.verdict.directions_per_center_dim =
        doc.get_int("analysis", "dirs_per_center_dim", cfg.verdict.directions_per_center_dim);
    cfg.verdict.classical_singular =
        doc.get_bool("analysis", "singular_mode", cfg.verdict.classical_singular);
    cfg.verdict.parallel = doc.get_bool("analysis", "parallel", cfg.verdict.parallel);
    cfg.t_esc = doc.get_double("analysis", "t_esc", cfg.t_esc);
    cfg.verdict.escape.T_esc = cfg.t_esc;
    cfg.seed = static_cast<unsigned>(doc.get_int("analysis", "seed", 12345));
    cfg.verdict.seed = cfg.seed;
    cfg.out_dir = doc.get_str("output", "dir", cfg.out_dir);
    cfg.format = doc.get_str("output", "format", cfg.format);
    return cfg;
}

std::vector<std::string> validate_config(const AnalysisConfig& cfg) {
    std::vector<std::string> diags;
    auto positive = [&](double v, const std::string& name) {
        if (!(v > 0)) diags.push_back(name + " must be positive");
    };
    positive(cfg.verdict.eps, "analysis.eps");
    positive(cfg.verdict.tol, "analysis.tol");
    positive(cfg.verdict.edge_tol, "analysis.edge_tol");
    positive(cfg.verdict.horizon, "analysis.horizon");
    positive(cfg.verdict.t_dom, "analysis.t_dom");
    positive(cfg.t_esc, "analysis.t_esc");
    if (cfg.verdict.t_max < 1) diags.push_back("analysis.t_max must be >= 1");
    for (int g : cfg.verdict.grid)
        if (g < 1) diags.push_back("analysis.grid entries must be >= 1");
    if (cfg.pipeline != "classify" && cfg.pipeline != "recur" && cfg.pipeline != "splitting" &&
        cfg.pipeline != "verify")
        diags.push_back("analysis.pipeline must be one of classify|recur|splitting|verify");
    if (cfg.format != "json" && cfg.format != "csv")
        diags.push_back("output.format must be json or csv");
    if (cfg.region.dim() != cfg.flow.dim) {
        diags.push_back("analysis.region dimension does not match the flow");
    } else if (!cfg.flow.domain.contains_box(cfg.region)) {
        diags.push_back("analysis.region must lie inside the flow domain");
    } else {
        // cover invariant: cell edges at least 2*eps
        std::vector<int> grid = cfg.verdict.grid;
        if (grid.size() == 1) grid.assign(static_cast<size_t>(cfg.region.dim()), grid[0]);
        if (static_cast<int>(grid.size()) == cfg.region.dim()) {
            for (int i = 0; i < cfg.region.dim(); ++i) {
                double w = (cfg.region.hi[i] - cfg.region.lo[i]) / grid[static_cast<size_t>(i)];
                if (w < 2 * cfg.verdict.eps - 1e-12) {
                    diags.push_back("cover cells thinner than 2*eps on axis " + std::to_string(i));
                    break;
                }
            }
        } else {
            diags.push_back("analysis.grid must have one entry or one per axis");
        }
    }
    return diags;
}

} // namespace singhyp
