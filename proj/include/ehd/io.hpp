#pragma once

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ehd/event.hpp"
#include "ehd/model.hpp"
#include "ehd/solver.hpp"

namespace ehd::io {

using nlohmann::json;

/// Non-finite reals are written as the strings "inf", "-inf" and "nan".
json real_to_json(double v);
double real_from_json(const json& j);

struct SequenceRecord {
  std::string id;
  EventSequence sequence;
  /// Optional names for the dense mark ids.
  std::vector<std::string> mark_labels;
};

/// {"id": ..., "t0": ..., "t_end": ..., "events": [{"m": .., "t": ..}, ...]}
json sequence_to_json(const SequenceRecord& record);
/// Marks are range-checked when `mark_count` is given.
SequenceRecord sequence_from_json(const json& j, std::optional<std::size_t> mark_count = {});

std::vector<SequenceRecord> read_sequences(const std::filesystem::path& path,
                                           std::optional<std::size_t> mark_count = {});
std::string sequences_to_jsonl(const std::vector<SequenceRecord>& records);

struct InstanceFile {
  Instance instance;
  /// Known influential history positions, present for planted instances.
  std::optional<IndexSubset> ground_truth;
};

json instance_to_json(const Instance& instance, const std::optional<IndexSubset>& ground_truth = {});
InstanceFile instance_from_json(const json& j, std::optional<std::size_t> mark_count = {});
InstanceFile read_instance(const std::filesystem::path& path,
                           std::optional<std::size_t> mark_count = {});

struct ModelFile {
  enum class Kind { kHawkes, kPoisson };
  Kind kind{Kind::kHawkes};
  /// For Poisson models alpha is zero and beta unused.
  HawkesParams params;

  std::unique_ptr<MtppModel> build() const;
};

/// {"type": "hawkes_exp", "mu": [...], "alpha": [[...]], "beta": b} or
/// {"type": "poisson", "mu": [...]}.
json model_to_json(const ModelFile& model);
ModelFile model_from_json(const json& j);
ModelFile read_model(const std::filesystem::path& path);

struct ReportMeta {
  std::string dataset;
  std::string instance;
  std::optional<IndexSubset> ground_truth;
};

json report_to_json(const SolveReport& report, const EhdConfig& config, const ReportMeta& meta,
                    bool include_timing);

/// The fields of an explain report the aggregation step needs.
struct StoredReport {
  ReportMeta meta;
  std::string solver;
  EhdConfig config;
  Partition partition;
  PplReport ppl;
  std::size_t evaluations{0};
  std::optional<double> wall_time_s;
  bool optimal{false};
};

StoredReport report_from_json(const json& j);

json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ehd::io
