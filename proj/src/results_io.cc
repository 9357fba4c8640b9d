// Copyright 2026 The EdgeVeil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <fstream>

#include "edgeveil/errors.h"
#include "edgeveil/format.h"
#include "edgeveil/harness.h"

namespace edgeveil {
namespace {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json();
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

nlohmann::json to_json(const Utility& u) {
  return {{"micro_f1", u.micro_f1},
          {"rare_class_f1", optional_json(u.rare_class_f1)},
          {"correct", u.correct},
          {"total", u.total}};
}

Utility utility_from_json(const nlohmann::json& j) {
  return {j.at("micro_f1").get<double>(), optional_from<double>(j, "rare_class_f1"),
          j.at("correct").get<Index>(), j.at("total").get<Index>()};
}

nlohmann::json optional_utility(const std::optional<Utility>& u) {
  return u ? to_json(*u) : nlohmann::json();
}

std::optional<Utility> optional_utility_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return utility_from_json(j[key]);
}

nlohmann::json optional_provenance(const std::optional<Provenance>& p) {
  return p ? to_json(*p) : nlohmann::json();
}

std::optional<Provenance> optional_provenance_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return provenance_from_json(j[key]);
}

// Doubles written through the shortest round-trip representation; empty
// when absent.
std::string csv_number(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

nlohmann::json to_json(const ResultRecord& r) {
  nlohmann::json attacks = nlohmann::json::array();
  for (const AttackReport& a : r.attacks) attacks.push_back(to_json(a));
  nlohmann::json degree_change;
  if (r.degree_change) {
    degree_change = {{"low_at_least_95", r.degree_change->low_at_least_95},
                     {"high_at_least_95", r.degree_change->high_at_least_95}};
  }
  return {{"mechanism", to_string(r.cell.mechanism)},
          {"epsilon", optional_json(r.cell.epsilon)},
          {"rank", optional_json(r.cell.rank)},
          {"seed", r.cell.seed},
          {"setting", to_string(r.setting)},
          {"status", r.ok ? "ok" : "failed"},
          {"error", r.error},
          {"train_graph", optional_provenance(r.train_graph)},
          {"test_graph", optional_provenance(r.test_graph)},
          {"degree_change", degree_change},
          {"train_config",
           {{"learning_rate", r.train_config.learning_rate},
            {"weight_decay", r.train_config.weight_decay},
            {"epochs", r.train_config.epochs},
            {"dropout", r.train_config.dropout},
            {"hidden", r.train_config.hidden},
            {"seed", r.train_config.seed}}},
          {"best_epoch", r.best_epoch},
          {"train", optional_utility(r.train)},
          {"val", optional_utility(r.val)},
          {"test", optional_utility(r.test)},
          {"f1", r.f1},
          {"attacks", attacks},
          {"timings",
           {{"perturb_seconds", r.timings.perturb_seconds},
            {"train_seconds", r.timings.train_seconds},
            {"attack_seconds", r.timings.attack_seconds}}}};
}

ResultRecord record_from_json(const nlohmann::json& j) {
  ResultRecord r;
  r.cell.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
  r.cell.epsilon = optional_from<double>(j, "epsilon");
  r.cell.rank = optional_from<Index>(j, "rank");
  r.cell.seed = j.at("seed").get<std::uint64_t>();
  r.setting = parse_attack_setting(j.at("setting").get<std::string>());
  r.ok = j.at("status").get<std::string>() == "ok";
  r.error = j.at("error").get<std::string>();
  r.train_graph = optional_provenance_from(j, "train_graph");
  r.test_graph = optional_provenance_from(j, "test_graph");
  if (!j.at("degree_change").is_null()) {
    const nlohmann::json& d = j["degree_change"];
    r.degree_change = DegreeChangeSummary{d.at("low_at_least_95").get<double>(),
                                          d.at("high_at_least_95").get<double>()};
  }
  const nlohmann::json& t = j.at("train_config");
  r.train_config.learning_rate = t.at("learning_rate").get<double>();
  r.train_config.weight_decay = t.at("weight_decay").get<double>();
  r.train_config.epochs = t.at("epochs").get<int>();
  r.train_config.dropout = t.at("dropout").get<double>();
  r.train_config.hidden = t.at("hidden").get<std::vector<Index>>();
  r.train_config.seed = t.at("seed").get<std::uint64_t>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.train = optional_utility_from(j, "train");
  r.val = optional_utility_from(j, "val");
  r.test = optional_utility_from(j, "test");
  r.f1 = j.at("f1").get<double>();
  for (const nlohmann::json& a : j.at("attacks")) r.attacks.push_back(attack_report_from_json(a));
  const nlohmann::json& tm = j.at("timings");
  r.timings = {tm.at("perturb_seconds").get<double>(), tm.at("train_seconds").get<double>(),
               tm.at("attack_seconds").get<double>()};
  return r;
}

nlohmann::json to_json(const SeedSummary& s) {
  return {{"mechanism", to_string(s.mechanism)},
          {"epsilon", optional_json(s.epsilon)},
          {"rank", optional_json(s.rank)},
          {"n_seeds", s.num_seeds},
          {"mean_f1", s.mean_f1},
          {"mean_auc", s.mean_auc},
          {"mean_auc_low", s.mean_auc_low},
          {"mean_auc_high", s.mean_auc_high}};
}

SeedSummary summary_from_json(const nlohmann::json& j) {
  SeedSummary s;
  s.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
  s.epsilon = optional_from<double>(j, "epsilon");
  s.rank = optional_from<Index>(j, "rank");
  s.num_seeds = j.at("n_seeds").get<Index>();
  s.mean_f1 = j.at("mean_f1").get<double>();
  s.mean_auc = j.at("mean_auc").get<std::map<std::string, double>>();
  s.mean_auc_low = j.at("mean_auc_low").get<std::map<std::string, double>>();
  s.mean_auc_high = j.at("mean_auc_high").get<std::map<std::string, double>>();
  return s;
}

nlohmann::json to_json(const ExperimentResult& result) {
  nlohmann::json records = nlohmann::json::array();
  for (const ResultRecord& r : result.records) records.push_back(to_json(r));
  nlohmann::json summaries = nlohmann::json::array();
  for (const SeedSummary& s : result.summaries) summaries.push_back(to_json(s));
  return {{"schema_version", kResultsSchemaVersion},
          {"config", result.config},
          {"warnings", result.warnings},
          {"selected_hyperparameters", result.selected_hyperparameters},
          {"records", records},
          {"summaries", summaries}};
}

ExperimentResult result_from_json(const nlohmann::json& j) {
  int version = j.at("schema_version").get<int>();
  if (version != kResultsSchemaVersion) {
    throw ValidationError("unsupported results schema version " + std::to_string(version));
  }
  ExperimentResult result;
  result.config = j.at("config");
  result.warnings = j.at("warnings").get<std::vector<std::string>>();
  result.selected_hyperparameters = j.at("selected_hyperparameters");
  for (const nlohmann::json& r : j.at("records")) result.records.push_back(record_from_json(r));
  for (const nlohmann::json& s : j.at("summaries")) {
    result.summaries.push_back(summary_from_json(s));
  }
  return result;
}

std::vector<std::string> curve_columns() {
  return {"mechanism",     "epsilon",          "rank",
          "seed",          "f1",               "auc_lpa",
          "auc_linkteller", "auc_lpa_low",     "auc_lpa_high",
          "auc_linkteller_low", "auc_linkteller_high"};
}

void emit_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "results.json");
    if (!out) throw std::runtime_error((dir / "results.json").string() + ": cannot open");
    out << to_json(result).dump(2) << '\n';
    if (!out) throw std::runtime_error((dir / "results.json").string() + ": write failed");
  }
  std::ofstream out(dir / "curves.csv");
  if (!out) throw std::runtime_error((dir / "curves.csv").string() + ": cannot open");
  std::vector<std::string> columns = curve_columns();
  for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
  out << '\n';
  for (const ResultRecord& r : result.records) {
    if (!r.ok) continue;
    auto auc = [&](const char* name) -> std::optional<double> {
      const AttackReport* a = r.attack(name);
      return a ? std::optional<double>(a->auc) : std::nullopt;
    };
    auto low = [&](const char* name) -> std::optional<double> {
      const AttackReport* a = r.attack(name);
      return a ? a->strata.low : std::nullopt;
    };
    auto high = [&](const char* name) -> std::optional<double> {
      const AttackReport* a = r.attack(name);
      return a ? a->strata.high : std::nullopt;
    };
    out << to_string(r.cell.mechanism) << ',' << csv_number(r.cell.epsilon) << ','
        << (r.cell.rank ? std::to_string(*r.cell.rank) : std::string()) << ',' << r.cell.seed
        << ',' << format_double(r.f1) << ',' << csv_number(auc("lpa")) << ','
        << csv_number(auc("linkteller")) << ',' << csv_number(low("lpa")) << ','
        << csv_number(high("lpa")) << ',' << csv_number(low("linkteller")) << ','
        << csv_number(high("linkteller")) << '\n';
  }
  if (!out) throw std::runtime_error((dir / "curves.csv").string() + ": write failed");
}

ExperimentResult read_results(const std::filesystem::path& results_json) {
  std::ifstream in(results_json);
  if (!in) throw ParseError(results_json.string(), 0, "cannot open file");
  try {
    return result_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(results_json.string(), 0, e.what());
  }
}

}  // namespace edgeveil
