#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbitpde/barrier.hpp"
#include "orbitpde/flux.hpp"
#include "orbitpde/geometry.hpp"
#include "orbitpde/solver.hpp"

namespace orbitpde {

using Json = nlohmann::json;

/// Every emitted document carries this in "format_version".
inline constexpr int kReportVersion = 1;

/// "%.17g"; non-finite values print as nan / inf / -inf.
std::string format_double(double x);

/// Serializes with sorted keys, two-space indent and every floating point
/// number at 17 significant digits. Non-finite numbers become null.
std::string dump_json(const Json& j);

Json witness_json(const ConditionWitness& w);
Json classification_json(const FluxProfile& profile, const Classification& cls);
Json verification_json(const VerificationReport& v);
Json barrier_json(const BarrierSpec& spec);
Json supersolution_json(const SupersolutionCheck& chk);
Json convexity_json(const MeanConvexityVerdict& verdict);
/// Everything in the report except wall-clock time, which would break
/// byte-identical reruns.
Json solve_report_json(const SolveReport& report);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string str() const;
};

/// Chart coordinates (axis names) and value per node, in node order.
CsvTable field_table(const SolutionField& field);
/// Inverse of field_table on the same grid. Throws ConfigError when the
/// file does not match the grid node by node.
std::vector<double> read_field_csv(const std::filesystem::path& path, const Grid& grid);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace orbitpde
