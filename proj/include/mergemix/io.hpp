#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "mergemix/consistency.hpp"
#include "mergemix/hier_search.hpp"
#include "mergemix/model.hpp"
#include "mergemix/surface_lab.hpp"

namespace mergemix::io {

using json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "mergemix-ckpt-v1";
inline constexpr const char* kSurfaceFormat = "mm-surface-v1";
inline constexpr const char* kReportFormat = "mergemix-report-v1";
inline constexpr const char* kTheoryFormat = "mergemix-theory-v1";
inline constexpr const char* kManifestFormat = "mergemix-manifest-v1";

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double x);

/// Pretty JSON with a trailing newline; key order is deterministic.
std::string dump(const json& j);

// Checkpoints ----------------------------------------------------------------

json model_spec_to_json(const ModelSpec& model);
ModelSpec model_spec_from_json(const json& j);

struct Checkpoint {
  ModelSpec model;
  ParameterVector params;
  std::string digest;
};

std::string checkpoint_text(const ModelSpec& model, const ParameterVector& params);
/// Throws FormatError on a wrong format tag, count mismatch or bad digest.
Checkpoint parse_checkpoint(std::string_view text);

// CSV ------------------------------------------------------------------------

/// alpha_1..alpha_K, y_1..y_M, digest
std::string samples_csv(const SampleSet& samples);
/// step, then <capability>_raw and <capability>_normalized per capability
std::string trajectory_csv(const ExpertArtifact& artifact);
/// lambda_1..lambda_K, merged_score, trained_score, merged_rank, trained_rank
std::string rank_table_csv(const ConsistencyReport& report);
/// Square matrix with a leading name column.
std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names);
/// leaf, ratio
std::string leaf_ratios_csv(const std::vector<std::string>& leaves, const SimplexWeights& ratios);

// JSON documents ---------------------------------------------------------------

json weights_to_json(const SimplexWeights& w);
SimplexWeights weights_from_json(const json& j);

json surface_to_json(const SurfaceModel& surface);
SurfaceModel surface_from_json(const json& j);

json verification_to_json(const VerificationReport& r);
VerificationReport verification_from_json(const json& j);

json tree_to_json(const MixtureTree& tree);
MixtureTree tree_from_json(const json& j);

json correlation_to_json(const CorrelationReport& r);
json cost_to_json(const CostModel& cost);

}  // namespace mergemix::io
