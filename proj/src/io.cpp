#include "ehd/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace ehd::io {

namespace fs = std::filesystem;

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing field \"") + key + "\"");
  }
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

std::vector<double> number_list(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_array()) throw ValidationError(std::string("field \"") + key + "\" must be an array");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw ValidationError(std::string("field \"") + key + "\" holds a non-number");
    out.push_back(x.get<double>());
  }
  return out;
}

json indices_to_json(const IndexSubset& s) { return json(s.indices()); }

IndexSubset indices_from_json(const json& j, std::size_t universe) {
  if (!j.is_array()) throw ValidationError("index list must be an array");
  std::vector<std::size_t> idx;
  for (const json& v : j) {
    if (!v.is_number_unsigned()) throw ValidationError("indices must be non-negative integers");
    idx.push_back(v.get<std::size_t>());
  }
  return IndexSubset(std::move(idx), universe);
}

}  // namespace

json real_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("expected a real number");
}

json sequence_to_json(const SequenceRecord& record) {
  json events = json::array();
  for (const Event& e : record.sequence.events()) events.push_back({{"m", e.mark}, {"t", e.time}});
  json j = {{"id", record.id},
            {"t0", record.sequence.window().start},
            {"t_end", record.sequence.window().end},
            {"events", std::move(events)}};
  if (!record.mark_labels.empty()) j["mark_labels"] = record.mark_labels;
  return j;
}

SequenceRecord sequence_from_json(const json& j, std::optional<std::size_t> mark_count) {
  if (!j.is_object()) throw ValidationError("sequence must be a JSON object");
  SequenceRecord r;
  if (j.contains("id")) {
    r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  }
  const TimeWindow window{number(j, "t0"), number(j, "t_end")};
  const json& raw = require(j, "events");
  if (!raw.is_array()) throw ValidationError("\"events\" must be an array");
  std::vector<Event> events;
  events.reserve(raw.size());
  for (const json& e : raw) {
    const json& m = require(e, "m");
    if (!m.is_number_integer() || m.get<long long>() < 0) {
      throw ValidationError("event mark must be a non-negative integer");
    }
    events.push_back({m.get<Mark>(), number(e, "t")});
  }
  if (j.contains("mark_labels")) r.mark_labels = j.at("mark_labels").get<std::vector<std::string>>();
  const std::size_t marks = mark_count.value_or(std::numeric_limits<Mark>::max());
  r.sequence = validate_sequence(std::move(events), window, marks);
  return r;
}

std::vector<SequenceRecord> read_sequences(const fs::path& path,
                                           std::optional<std::size_t> mark_count) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<SequenceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sequence_from_json(json::parse(line), mark_count));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string sequences_to_jsonl(const std::vector<SequenceRecord>& records) {
  std::string out;
  for (const SequenceRecord& r : records) {
    out += sequence_to_json(r).dump();
    out += '\n';
  }
  return out;
}

json instance_to_json(const Instance& instance, const std::optional<IndexSubset>& ground_truth) {
  json j = {{"history", sequence_to_json({"history", instance.history(), {}})},
            {"target", sequence_to_json({"target", instance.target(), {}})}};
  if (ground_truth) j["ground_truth"] = indices_to_json(*ground_truth);
  return j;
}

InstanceFile instance_from_json(const json& j, std::optional<std::size_t> mark_count) {
  SequenceRecord history = sequence_from_json(require(j, "history"), mark_count);
  SequenceRecord target = sequence_from_json(require(j, "target"), mark_count);
  InstanceFile f{Instance(std::move(history.sequence), std::move(target.sequence)), std::nullopt};
  if (j.contains("ground_truth")) {
    f.ground_truth = indices_from_json(j.at("ground_truth"), f.instance.history().size());
  }
  return f;
}

InstanceFile read_instance(const fs::path& path, std::optional<std::size_t> mark_count) {
  return instance_from_json(read_json(path), mark_count);
}

std::unique_ptr<MtppModel> ModelFile::build() const {
  if (kind == Kind::kPoisson) return std::make_unique<PoissonModel>(params.mu);
  return std::make_unique<HawkesModel>(params);
}

json model_to_json(const ModelFile& model) {
  if (model.kind == ModelFile::Kind::kPoisson) {
    return {{"type", "poisson"}, {"mu", model.params.mu}};
  }
  const HawkesParams& p = model.params;
  json alpha = json::array();
  for (Eigen::Index r = 0; r < p.alpha.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < p.alpha.cols(); ++c) row.push_back(p.alpha(r, c));
    alpha.push_back(std::move(row));
  }
  return {{"type", "hawkes_exp"}, {"mu", p.mu}, {"alpha", std::move(alpha)}, {"beta", p.beta}};
}

ModelFile model_from_json(const json& j) {
  const json& type = require(j, "type");
  if (!type.is_string()) throw ValidationError("model \"type\" must be a string");
  ModelFile f;
  f.params.mu = number_list(j, "mu");
  const auto m = static_cast<Eigen::Index>(f.params.mu.size());
  if (type == "poisson") {
    f.kind = ModelFile::Kind::kPoisson;
    f.params.alpha = Eigen::MatrixXd::Zero(m, m);
    f.params.beta = 1.0;
  } else if (type == "hawkes_exp") {
    f.kind = ModelFile::Kind::kHawkes;
    const json& alpha = require(j, "alpha");
    if (!alpha.is_array() || static_cast<Eigen::Index>(alpha.size()) != m) {
      throw ValidationError("alpha must have one row per mark");
    }
    f.params.alpha.resize(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const json& row = alpha[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
        throw ValidationError("alpha must be square");
      }
      for (Eigen::Index c = 0; c < m; ++c) {
        const json& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number()) throw ValidationError("alpha entries must be numbers");
        f.params.alpha(r, c) = v.get<double>();
      }
    }
    f.params.beta = number(j, "beta");
  } else {
    throw ValidationError("unknown model type \"" + type.get<std::string>() + "\"");
  }
  f.params.validate();
  return f;
}

ModelFile read_model(const fs::path& path) { return model_from_json(read_json(path)); }

json report_to_json(const SolveReport& report, const EhdConfig& config, const ReportMeta& meta,
                    bool include_timing) {
  const PplReport& p = report.ppl;
  json j = {
      {"dataset", meta.dataset},
      {"instance", meta.instance},
      {"solver", report.solver},
      {"config", {{"epsilon_d", config.epsilon_d}, {"epsilon_l", config.epsilon_l}, {"slack", config.slack}}},
      {"history_size", report.partition.d.universe()},
      {"partition", {{"d", indices_to_json(report.partition.d)}, {"l", indices_to_json(report.partition.l)}}},
      {"size", report.size()},
      {"log_ppl", {{"full", real_to_json(p.log_ppl_full)}, {"d", real_to_json(p.log_ppl_d)}, {"l", real_to_json(p.log_ppl_l)}}},
      {"margins", {{"c1", real_to_json(p.c1_margin)}, {"c2", real_to_json(p.c2_margin)}}},
      {"c1_satisfied", p.c1_satisfied},
      {"c2_satisfied", p.c2_satisfied},
      {"feasible", p.feasible()},
      {"rational", p.rational},
      {"optimal", report.optimal},
      {"evaluations", report.evaluations},
  };
  if (meta.ground_truth) j["ground_truth"] = indices_to_json(*meta.ground_truth);
  if (include_timing) j["wall_time_s"] = report.wall_time_s;
  return j;
}

StoredReport report_from_json(const json& j) {
  StoredReport r;
  r.meta.dataset = require(j, "dataset").get<std::string>();
  r.meta.instance = require(j, "instance").get<std::string>();
  r.solver = require(j, "solver").get<std::string>();
  const json& cfg = require(j, "config");
  r.config.epsilon_d = number(cfg, "epsilon_d");
  r.config.epsilon_l = number(cfg, "epsilon_l");
  r.config.slack = cfg.contains("slack") ? number(cfg, "slack") : 0.0;
  const auto n = require(j, "history_size").get<std::size_t>();
  const json& part = require(j, "partition");
  r.partition.d = indices_from_json(require(part, "d"), n);
  r.partition.l = indices_from_json(require(part, "l"), n);
  if (r.partition.d.complement() != r.partition.l) {
    throw ValidationError("report partition is not a split of the history");
  }
  const json& lp = require(j, "log_ppl");
  r.ppl.log_ppl_full = real_from_json(require(lp, "full"));
  r.ppl.log_ppl_d = real_from_json(require(lp, "d"));
  r.ppl.log_ppl_l = real_from_json(require(lp, "l"));
  const json& margins = require(j, "margins");
  r.ppl.c1_margin = real_from_json(require(margins, "c1"));
  r.ppl.c2_margin = real_from_json(require(margins, "c2"));
  r.ppl.c1_satisfied = require(j, "c1_satisfied").get<bool>();
  r.ppl.c2_satisfied = require(j, "c2_satisfied").get<bool>();
  r.ppl.rational = require(j, "rational").get<bool>();
  r.optimal = j.value("optimal", false);
  r.evaluations = require(j, "evaluations").get<std::size_t>();
  if (j.contains("ground_truth")) r.meta.ground_truth = indices_from_json(j.at("ground_truth"), n);
  if (j.contains("wall_time_s")) r.wall_time_s = number(j, "wall_time_s");
  return r;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ValidationError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ValidationError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace ehd::io
