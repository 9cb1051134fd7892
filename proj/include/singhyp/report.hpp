#ifndef SINGHYP_REPORT_HPP
#define SINGHYP_REPORT_HPP

#include "singhyp/config.hpp"

#include <string>

namespace singhyp {

inline constexpr int kReportSchemaVersion = 1;

std::string verdict_to_json(const Verdict& v, const AnalysisConfig& cfg);
std::string verdict_to_text(const Verdict& v);

std::string classification_to_json(const VectorFieldSpec& spec,
                                   const std::vector<SingularityClass>& classes);

/// Adjacency-list text export: one line per box with center coordinates and
/// edge targets; classes/levels as CSV.
std::string chain_graph_to_text(const ChainGraph& g);
std::string chain_classes_to_csv(const ChainGraph& g);

std::string trajectory_to_csv(const TrajectorySample& tr);

/// Cocycle trace along an orbit: t, log h_E, log h_F, base point, distance to
/// the nearest singularity.
std::string cocycle_trace_csv(const VectorFieldSpec& spec, const CocycleSpec& cE,
                              const CocycleSpec& cF, const Vec& x0, double t_end, double dt,
                              double tol = kDefaultTol);

std::string splitting_to_json(const SplittingEstimate& est);

void write_file(const std::string& path, const std::string& content);

} // namespace singhyp

#endif
