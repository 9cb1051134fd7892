#ifndef SINGHYP_CONFIG_HPP
#define SINGHYP_CONFIG_HPP

#include "singhyp/splitting.hpp"

#include <map>
#include <string>
#include <vector>

namespace singhyp {

/// Parsed structured-text document: [section] headers with key = value lines.
/// Values stay as raw strings; typed access goes through the getters.
/// Nested table names use dots ([chart.0], [transition.2]).
class ConfigDoc {
public:
    static ConfigDoc parse_file(const std::string& path);
    static ConfigDoc parse_string(const std::string& text);

    bool has_section(const std::string& s) const;
    bool has(const std::string& section, const std::string& key) const;
    std::vector<std::string> sections_with_prefix(const std::string& prefix) const;

    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback = "") const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // "1 2 3" -> vector; "a:b, c:d" -> box; "r1; r2; r3" rows -> matrix
    Vec get_vec(const std::string& section, const std::string& key) const;
    Box get_box(const std::string& section, const std::string& key) const;
    Mat get_mat(const std::string& section, const std::string& key) const;
    std::vector<int> get_ints(const std::string& section, const std::string& key) const;

    const std::map<std::string, std::map<std::string, std::string>>& raw() const {
        return data_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

Vec parse_vec(const std::string& s);
Box parse_box(const std::string& s);
Mat parse_mat(const std::string& s);

/// Everything one run needs: the flow, the region, cover and horizon
/// parameters, tolerances, pipeline selection, output paths.
struct AnalysisConfig {
    std::string pipeline = "verify"; // classify | recur | splitting | verify
    std::string flow_name = "lorenz";
    VectorFieldSpec flow;
    Box region;
    VerdictConfig verdict;
    double t_esc = 20.0;
    std::string out_dir = "out";
    std::string format = "json"; // json | csv
    unsigned seed = 12345;
};

/// Build the flow described by a [flow] section (builtin or chart list) and
/// optional [singularity.*] seeds.
VectorFieldSpec flow_from_doc(const ConfigDoc& doc);

/// Assemble an AnalysisConfig from a parsed document (flow, region, [analysis]
/// parameters).  Throws on structural errors; value-level problems are
/// reported by validate_config.
AnalysisConfig analysis_from_doc(const ConfigDoc& doc);

/// All violations, none executed. Empty list means the config is runnable.
std::vector<std::string> validate_config(const AnalysisConfig& cfg);

} // namespace singhyp

#endif
