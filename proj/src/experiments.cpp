#include "slotfill/experiments.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace slotfill {

using nlohmann::json;

namespace {

/// Out-of-domain contributions for MT/CT: every domain except the target,
/// each with its own 80/20 train/dev split.
std::map<std::string, DomainTrainData> out_of_domain_data(
    const std::string& target, const std::map<std::string, DomainDataset>& datasets) {
  std::map<std::string, DomainTrainData> out;
  for (const auto& [domain, ds] : datasets) {
    if (domain == target) continue;
    DevSplit split = split_dev(ds.train);
    out[domain] = DomainTrainData{ds.schema, split.train_part, split.dev_part};
  }
  return out;
}

}  // namespace

MetricsReport zero_shot_eval(const std::string& target,
                             const std::map<std::string, DomainDataset>& datasets,
                             const EmbeddingTable& table, const TrainConfig& cfg) {
  if (cfg.kind != ModelKind::ConceptTagger)
    throw DataError("zero-shot evaluation with zero target samples is unsupported for '" +
                    kind_name(cfg.kind) + "'; only the concept tagger can run at 0 samples");
  auto it = datasets.find(target);
  if (it == datasets.end()) throw DataError("zero_shot_eval: unknown target domain '" + target + "'");
  if (it->second.test.empty())
    throw DataError("zero_shot_eval: target domain '" + target + "' has no test set");

  auto data = out_of_domain_data(target, datasets);
  TrainResult result = train(data, table, cfg);
  LoadedModel model = model_from_checkpoint(result.checkpoint);
  return evaluate_ct(*model.ct, it->second.schema, it->second.test, table);
}

CurveTable learning_curve(const std::string& target,
                          const std::map<std::string, DomainDataset>& datasets,
                          const EmbeddingTable& table, const TrainConfig& cfg,
                          const std::vector<std::size_t>& points, std::size_t runs,
                          const std::set<ModelKind>& kinds) {
  auto target_it = datasets.find(target);
  if (target_it == datasets.end())
    throw DataError("learning_curve: unknown target domain '" + target + "'");
  const DomainDataset& target_ds = target_it->second;

  CurveTable table_out;
  table_out.runs = runs;
  for (ModelKind k :
       {ModelKind::SingleTask, ModelKind::MultiTask, ModelKind::ConceptTagger})
    if (kinds.count(k)) table_out.kinds.push_back(kind_name(k));

  auto ood = out_of_domain_data(target, datasets);

  for (std::size_t n : points) {
    if (n > target_ds.train.size()) {
      table_out.warnings.push_back("point " + std::to_string(n) + " skipped: only " +
                                   std::to_string(target_ds.train.size()) +
                                   " target train samples");
      continue;
    }
    table_out.points.push_back(n);
    for (ModelKind kind :
         {ModelKind::SingleTask, ModelKind::MultiTask, ModelKind::ConceptTagger}) {
      if (!kinds.count(kind)) continue;
      if (n == 0 && kind != ModelKind::ConceptTagger) continue;  // CT only at 0 samples

      CurveCell cell;
      cell.present = true;
      for (std::size_t r = 0; r < runs; ++r) {
        auto sub = subsample(target_ds.train, n, r, runs);
        DevSplit split = split_dev(sub);

        std::map<std::string, DomainTrainData> data;
        if (kind != ModelKind::SingleTask) data = ood;
        if (n > 0 || kind != ModelKind::SingleTask)
          data[target] = DomainTrainData{target_ds.schema, split.train_part, split.dev_part};
        if (kind == ModelKind::SingleTask)
          data = {{target, DomainTrainData{target_ds.schema, split.train_part, split.dev_part}}};

        TrainConfig run_cfg = cfg;
        run_cfg.kind = kind;
        run_cfg.seed = cfg.seed + 0x1000 * (r + 1);
        TrainResult result = train(data, table, run_cfg);
        LoadedModel model = model_from_checkpoint(result.checkpoint);

        MetricsReport rep;
        if (kind == ModelKind::SingleTask)
          rep = evaluate_st(*model.st, target_ds.test, table);
        else if (kind == ModelKind::MultiTask)
          rep = evaluate_mt(*model.mt, target, target_ds.test, table);
        else
          rep = evaluate_ct(*model.ct, target_ds.schema, target_ds.test, table);
        cell.run_scores.push_back(rep.weighted_f1);
      }
      double sum = 0.0;
      for (double s : cell.run_scores) sum += s;
      cell.mean = cell.run_scores.empty() ? 0.0 : sum / (double)cell.run_scores.size();
      table_out.rows[target][n][kind_name(kind)] = std::move(cell);
    }
  }
  return table_out;
}

// ---- rendering ----

std::string metrics_to_json(const MetricsReport& report) {
  json j;
  j["utterances"] = report.utterance_count;
  j["weighted_f1"] = report.weighted_f1;
  j["slots"] = json::object();
  for (const auto& [slot, m] : report.per_slot)
    j["slots"][slot] = {{"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1},
                        {"support", m.support},
                        {"predicted", m.predicted}};
  return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
  json j = json::parse(text);
  MetricsReport report;
  report.utterance_count = j.at("utterances").get<std::size_t>();
  report.weighted_f1 = j.at("weighted_f1").get<double>();
  for (const auto& [slot, jm] : j.at("slots").items()) {
    SlotMetrics m;
    m.precision = jm.at("precision").get<double>();
    m.recall = jm.at("recall").get<double>();
    m.f1 = jm.at("f1").get<double>();
    m.support = jm.at("support").get<std::size_t>();
    m.predicted = jm.at("predicted").get<std::size_t>();
    report.per_slot.emplace(slot, m);
  }
  return report;
}

std::string render_metrics_text(const MetricsReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  std::size_t width = 4;
  for (const auto& [slot, _] : report.per_slot) width = std::max(width, slot.size());
  os << std::left << std::setw((int)width + 2) << "slot"
     << std::right << std::setw(6) << "P" << std::setw(7) << "R" << std::setw(7) << "F1"
     << std::setw(9) << "support" << '\n';
  for (const auto& [slot, m] : report.per_slot) {
    os << std::left << std::setw((int)width + 2) << slot << std::right << std::setw(6)
       << m.precision << std::setw(7) << m.recall << std::setw(7) << m.f1 << std::setw(9)
       << m.support << '\n';
  }
  os << std::left << std::setw((int)width + 2) << "weighted" << std::right << std::setw(20)
     << report.weighted_f1 << '\n';
  return os.str();
}

std::string curve_to_json(const CurveTable& table) {
  json j;
  j["points"] = table.points;
  j["kinds"] = table.kinds;
  j["runs"] = table.runs;
  j["warnings"] = table.warnings;
  j["rows"] = json::object();
  for (const auto& [domain, by_point] : table.rows) {
    json jp = json::object();
    for (const auto& [point, by_kind] : by_point) {
      json jk = json::object();
      for (const auto& [kind, cell] : by_kind)
        jk[kind] = {{"mean", cell.mean}, {"runs", cell.run_scores}};
      jp[std::to_string(point)] = jk;
    }
    j["rows"][domain] = jp;
  }
  return j.dump(2);
}

std::string render_curve_text(const CurveTable& table) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  std::size_t width = 6;
  for (const auto& [domain, _] : table.rows) width = std::max(width, domain.size());

  os << std::left << std::setw((int)width + 2) << "domain";
  for (std::size_t point : table.points)
    for (const auto& kind : table.kinds)
      os << std::right << std::setw(9) << (kind + "@" + std::to_string(point));
  os << '\n';
  for (const auto& [domain, by_point] : table.rows) {
    os << std::left << std::setw((int)width + 2) << domain;
    for (std::size_t point : table.points) {
      auto pit = by_point.find(point);
      for (const auto& kind : table.kinds) {
        bool have = false;
        double mean = 0.0;
        if (pit != by_point.end()) {
          auto kit = pit->second.find(kind);
          if (kit != pit->second.end() && kit->second.present) {
            have = true;
            mean = kit->second.mean;
          }
        }
        if (have) {
          std::ostringstream cell;
          cell << std::fixed << std::setprecision(2) << mean;
          os << std::right << std::setw(9) << cell.str();
        } else {
          os << std::right << std::setw(9) << "-";
        }
      }
    }
    os << '\n';
  }
  for (const auto& w : table.warnings) os << "warning: " << w << '\n';
  return os.str();
}

}  // namespace slotfill
