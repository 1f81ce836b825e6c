#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "slotfill/metrics.hpp"
#include "slotfill/training.hpp"

namespace slotfill {

/// Trains the concept tagger on every domain except `target` (the target
/// contributes zero training batches) and evaluates on the target test set
/// using only the target schema's slot descriptions. Only the concept
/// tagger supports the zero-sample condition.
MetricsReport zero_shot_eval(const std::string& target,
                             const std::map<std::string, DomainDataset>& datasets,
                             const EmbeddingTable& table, const TrainConfig& cfg);

struct CurveCell {
  bool present = false;
  double mean = 0.0;
  std::vector<double> run_scores;
};

/// Learning-curve results for one or more target domains:
/// rows[domain][point][kind]. At point 0 only "ct" cells exist.
struct CurveTable {
  std::vector<std::size_t> points;
  std::vector<std::string> kinds;
  std::size_t runs = 0;
  std::map<std::string, std::map<std::size_t, std::map<std::string, CurveCell>>> rows;
  std::vector<std::string> warnings;
};

/// One target domain's learning curve. For each point n and run r the target
/// train set is the rotating-block subsample, split 80/20 into train/dev;
/// MT and CT additionally see all out-of-domain data, ST trains in-domain
/// only. Infeasible points are skipped with a warning.
CurveTable learning_curve(const std::string& target,
                          const std::map<std::string, DomainDataset>& datasets,
                          const EmbeddingTable& table, const TrainConfig& cfg,
                          const std::vector<std::size_t>& points = {0, 5, 20, 100, 1000},
                          std::size_t runs = 10,
                          const std::set<ModelKind>& kinds = {ModelKind::SingleTask,
                                                              ModelKind::MultiTask,
                                                              ModelKind::ConceptTagger});

// ---- report rendering ----

std::string metrics_to_json(const MetricsReport& report);
std::string render_metrics_text(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);

std::string curve_to_json(const CurveTable& table);
std::string render_curve_text(const CurveTable& table);

}  // namespace slotfill
