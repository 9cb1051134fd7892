#include "singhyp/report.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace singhyp;

namespace {

std::vector<int> default_grid(const Box& region) {
    const int d = region.dim();
    if (d <= 2) return {64};
    Vec w = region.widths();
    double wmax = w.maxCoeff();
    std::vector<int> g;
    for (int i = 0; i < d; ++i)
        g.push_back(std::max(8, static_cast<int>(std::lround(20.0 * w[i] / wmax))));
    return g;
}

struct CliOptions {
    std::string config_path;
    std::string flow;
    std::string preset;
    std::string region;
    std::string out_dir = "out";
    std::string format = "json";
    std::vector<int> grid;
    double eps = -1, t_max = -1, horizon = -1, t_esc = -1, t_dom = -1, settle = -1;
    int seed = -1;
    bool singular_mode = false;
    bool serial = false;
};

void add_common(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--config", o.config_path, "structured-text config file");
    cmd->add_option("--flow", o.flow, "builtin flow: lorenz|limit-cycle|double-well|cycle-model|linear-sink|linear-saddle");
    cmd->add_option("--preset", o.preset, "parameter preset (lorenz: classic)");
    cmd->add_option("--region", o.region, "analysis box, e.g. -25:25,-30:30,0:55");
    cmd->add_option("--grid", o.grid, "cover cells per axis (one value or one per axis)");
    cmd->add_option("--eps", o.eps, "pseudo-orbit jump tolerance");
    cmd->add_option("--t-max", o.t_max, "per-edge flow-time cap");
    cmd->add_option("--horizon", o.horizon, "rate/splitting horizon T");
    cmd->add_option("--t-esc", o.t_esc, "escape-test horizon");
    cmd->add_option("--t-dom", o.t_dom, "domination check time");
    cmd->add_option("--settle", o.settle, "anchor settle time");
    cmd->add_option("--seed", o.seed, "RNG seed (recorded in reports)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--format", o.format, "report format: json|csv");
    cmd->add_flag("--singular", o.singular_mode,
                  "classical singular-hyperbolicity mode (S_E forced empty)");
    cmd->add_flag("--serial", o.serial, "disable OpenMP parallel kernels");
}

AnalysisConfig assemble(const CliOptions& o, const std::string& pipeline) {
    AnalysisConfig cfg;
    if (!o.config_path.empty()) {
        cfg = analysis_from_doc(ConfigDoc::parse_file(o.config_path));
    } else {
        std::string flow = o.flow.empty() ? "lorenz" : o.flow;
        cfg.flow = builtin_by_name(flow);
        cfg.flow_name = flow;
        cfg.region = cfg.flow.domain;
    }
    if (!o.flow.empty() && !o.config_path.empty()) {
        cfg.flow = builtin_by_name(o.flow);
        cfg.flow_name = o.flow;
    }
    cfg.pipeline = pipeline;
    if (!o.region.empty()) cfg.region = parse_box(o.region);
    else if (cfg.flow_name == "lorenz" && o.config_path.empty())
        cfg.region = parse_box("-25:25,-30:30,0:55");
    if (!o.grid.empty()) cfg.verdict.grid = o.grid;
    else if (o.config_path.empty()) cfg.verdict.grid = default_grid(cfg.region);
    if (o.eps > 0) cfg.verdict.eps = o.eps;
    if (o.t_max > 0) cfg.verdict.t_max = o.t_max;
    if (o.horizon > 0) cfg.verdict.horizon = o.horizon;
    if (o.t_esc > 0) cfg.verdict.escape.T_esc = o.t_esc;
    if (o.t_dom > 0) cfg.verdict.t_dom = o.t_dom;
    if (o.settle > 0) cfg.verdict.settle_time = o.settle;
    if (o.seed >= 0) {
        cfg.seed = static_cast<unsigned>(o.seed);
        cfg.verdict.seed = cfg.seed;
    }
    cfg.verdict.classical_singular = o.singular_mode || cfg.verdict.classical_singular;
    if (o.serial) cfg.verdict.parallel = false;
    cfg.out_dir = o.out_dir;
    cfg.format = o.format;
    return cfg;
}

int fail_config(const std::vector<std::string>& diags) {
    for (const auto& d : diags) std::cerr << "config error: " << d << "\n";
    return 3;
}

int run_classify(AnalysisConfig& cfg) {
    std::vector<SingularityClass> classes;
    for (size_t i = 0; i < cfg.flow.singularities.size(); ++i) {
        if (!cfg.region.contains(cfg.flow.singularities[i].position)) continue;
        SingularityClass c = classify_singularity(cfg.flow, static_cast<int>(i));
        EscapeOptions eo = cfg.verdict.escape;
        eo.tol = cfg.verdict.tol;
        if (c.hyperbolic) resolve_center(cfg.flow, c, cfg.region, eo);
        classes.push_back(c);
    }
    std::string out = classification_to_json(cfg.flow, classes);
    write_file(cfg.out_dir + "/classification.json", out);
    std::cout << out;
    return 0;
}

int run_recur(AnalysisConfig& cfg) {
    BoxCover cover(cfg.region, cfg.verdict.grid, cfg.verdict.eps, cfg.verdict.t_max);
    ChainGraph g = build_chain_graph(cfg.flow, cover, cfg.verdict.samples_per_box,
                                     cfg.verdict.edge_tol, cfg.verdict.parallel);
    auto classes = chain_classes(g);
    LyapunovOrder order = discrete_lyapunov(g);
    write_file(cfg.out_dir + "/chain_graph.txt", chain_graph_to_text(g));
    write_file(cfg.out_dir + "/chain_classes.csv", chain_classes_to_csv(g));
    std::cout << "chain classes: " << classes.size() << "\n";
    for (size_t i = 0; i < classes.size(); ++i) {
        std::cout << "  class " << i << ": " << classes[i].size() << " boxes, level "
                  << order.scc_level[static_cast<size_t>(g.scc_id[static_cast<size_t>(classes[i][0])])]
                  << "\n";
    }
    return 0;
}

int run_splitting(AnalysisConfig& cfg) {
    BoxCover cover(cfg.region, cfg.verdict.grid, cfg.verdict.eps, cfg.verdict.t_max);
    ChainGraph g = build_chain_graph(cfg.flow, cover, cfg.verdict.samples_per_box,
                                     cfg.verdict.edge_tol, cfg.verdict.parallel);
    std::vector<SigmaCenterInfo> centers;
    EscapeOptions eo = cfg.verdict.escape;
    eo.tol = cfg.verdict.tol;
    for (size_t i = 0; i < cfg.flow.singularities.size(); ++i) {
        if (!cfg.region.contains(cfg.flow.singularities[i].position)) continue;
        SingularityClass c = classify_singularity(cfg.flow, static_cast<int>(i));
        if (!c.hyperbolic) continue;
        resolve_center(cfg.flow, c, cfg.region, eo);
        centers.push_back({c.sigma_index, c.center_frame, c.center_status});
    }
    std::vector<int> all_classes;
    for (int i = 0; i < static_cast<int>(chain_classes(g).size()); ++i) all_classes.push_back(i);
    ExtendedSetOptions so;
    so.settle_time = cfg.verdict.settle_time;
    so.max_regular = cfg.verdict.max_regular_anchors;
    so.directions_per_center_dim = cfg.verdict.directions_per_center_dim;
    so.tol = cfg.verdict.tol;
    so.seed = cfg.seed;
    ExtendedSetSample sample = sample_extended_set(cfg.flow, g, all_classes, centers, so);
    SplittingOptions sp;
    sp.horizon = cfg.verdict.horizon;
    sp.tol = cfg.verdict.tol;
    sp.seed = cfg.seed;
    sp.parallel = cfg.verdict.parallel;
    SplittingEstimate est = estimate_splitting(cfg.flow, anchors_from_sample(sample), sp);
    std::string out = splitting_to_json(est);
    write_file(cfg.out_dir + "/splitting.json", out);
    std::cout << out;
    return 0;
}

int run_verify(AnalysisConfig& cfg) {
    BoxCover cover(cfg.region, cfg.verdict.grid, cfg.verdict.eps, cfg.verdict.t_max);
    ChainGraph g = build_chain_graph(cfg.flow, cover, cfg.verdict.samples_per_box,
                                     cfg.verdict.edge_tol, cfg.verdict.parallel);
    Verdict v = check_multisingular(cfg.flow, cfg.region, cfg.verdict, &g);
    write_file(cfg.out_dir + "/verdict.json", verdict_to_json(v, cfg));
    std::string text = verdict_to_text(v);
    write_file(cfg.out_dir + "/verdict.txt", text);
    std::cout << text;

    // companion exports: chain classes and a cocycle trace from a region point
    try {
        write_file(cfg.out_dir + "/chain_classes.csv", chain_classes_to_csv(g));
        CocycleSpec cE = make_cocycle(cfg.flow, v.S_E);
        CocycleSpec cF = make_cocycle(cfg.flow, v.S_F);
        Vec x0 = cfg.region.center() + 0.01 * cfg.region.widths(); // off invariant axes
        FlowResult settle = advance(cfg.flow, x0, cfg.verdict.settle_time, cfg.verdict.tol);
        if (settle.status == FlowStatus::ok &&
            cfg.flow.evaluate(settle.x).norm() > 100 * kSingTol) {
            write_file(cfg.out_dir + "/cocycle_trace.csv",
                       cocycle_trace_csv(cfg.flow, cE, cF, settle.x, 10.0, 0.25,
                                         cfg.verdict.tol));
            TrajectorySample tr = sample_trajectory(cfg.flow, settle.x, 10.0, 0.05,
                                                    cfg.verdict.tol);
            write_file(cfg.out_dir + "/trajectory.csv", trajectory_to_csv(tr));
        }
    } catch (const std::exception& e) {
        std::cerr << "note: companion exports skipped: " << e.what() << "\n";
    }

    if (v.multisingular == TriState::yes) return 0;
    if (v.multisingular == TriState::no) return 1;
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical multisingular-hyperbolicity toolkit for singular flows"};
    app.require_subcommand(1);
    CliOptions o;

    CLI::App* classify = app.add_subcommand("classify", "classify the singularities in a region");
    CLI::App* recur = app.add_subcommand("recur", "chain-recurrence analysis over a box cover");
    CLI::App* splitting = app.add_subcommand("splitting", "finite-horizon dominated-splitting estimate");
    CLI::App* verify = app.add_subcommand("verify", "full multisingular-hyperbolicity verdict");
    CLI::App* validate = app.add_subcommand("validate", "check a config file, run nothing");
    for (CLI::App* c : {classify, recur, splitting, verify}) add_common(c, o);
    std::string validate_path;
    validate->add_option("config", validate_path, "config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            AnalysisConfig cfg;
            try {
                cfg = analysis_from_doc(ConfigDoc::parse_file(validate_path));
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 3;
            }
            auto diags = validate_config(cfg);
            if (diags.empty()) {
                std::cout << "config ok\n";
                return 0;
            }
            return fail_config(diags);
        }

        std::string pipeline = classify->parsed()   ? "classify"
                               : recur->parsed()    ? "recur"
                               : splitting->parsed() ? "splitting"
                                                     : "verify";
        AnalysisConfig cfg = assemble(o, pipeline);
        auto diags = validate_config(cfg);
        if (!diags.empty()) return fail_config(diags);

        if (pipeline == "classify") return run_classify(cfg);
        if (pipeline == "recur") return run_recur(cfg);
        if (pipeline == "splitting") return run_splitting(cfg);
        return run_verify(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
