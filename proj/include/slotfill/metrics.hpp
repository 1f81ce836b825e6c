#pragma once

#include <map>
#include <string>
#include <vector>

#include "slotfill/models.hpp"

namespace slotfill {

/// Token-level scores for one slot. A token counts for slot s iff its tag is
/// B-s or I-s; the B/I distinction is ignored when scoring.
struct SlotMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold token count
  std::size_t predicted = 0;  // predicted token count
};

struct MetricsReport {
  std::map<std::string, SlotMetrics> per_slot;  // slots absent from both gold and pred excluded
  double weighted_f1 = 0.0;                     // support-weighted, over slots with support > 0
  std::size_t utterance_count = 0;
};

/// Aggregated over the whole test set; per-utterance length mismatch errors.
MetricsReport token_f1_report(const std::vector<std::vector<std::string>>& gold,
                              const std::vector<std::vector<std::string>>& pred);

enum class F1Weighting { Support, Uniform };

/// Mean of per-slot F1 over slots with support > 0, weighted by token support
/// by default (uniform weighting available). Errors if no slot has support.
double weighted_f1(const MetricsReport& report, F1Weighting weighting = F1Weighting::Support);

/// Cross-domain dev aggregation: scores averaged with weight ln(max(n, 2)).
double dev_weighted_score(const std::map<std::string, double>& scores,
                          const std::map<std::string, std::size_t>& train_sizes);

// Predicted-tag evaluation per model kind (argmax decode + lenient repair,
// ct_tag_frame for the concept tagger).
MetricsReport evaluate_st(SingleTaskModel& model, const std::vector<TaggedUtterance>& test,
                          const EmbeddingTable& table);
MetricsReport evaluate_mt(MultiTaskModel& model, const std::string& domain,
                          const std::vector<TaggedUtterance>& test, const EmbeddingTable& table);
MetricsReport evaluate_ct(ConceptTaggerModel& model, const DomainSchema& schema,
                          const std::vector<TaggedUtterance>& test, const EmbeddingTable& table);

}  // namespace slotfill
