#include "slotfill/metrics.hpp"

#include <cmath>

namespace slotfill {

MetricsReport token_f1_report(const std::vector<std::vector<std::string>>& gold,
                              const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size())
    throw DataError("token_f1: " + std::to_string(gold.size()) + " gold vs " +
                    std::to_string(pred.size()) + " predicted utterances");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    if (gold[u].size() != pred[u].size())
      throw DataError("token_f1: record " + std::to_string(u) + ": " +
                      std::to_string(gold[u].size()) + " gold vs " +
                      std::to_string(pred[u].size()) + " predicted tags");
    for (std::size_t t = 0; t < gold[u].size(); ++t) {
      IobTag g = parse_tag(gold[u][t]);
      IobTag p = parse_tag(pred[u][t]);
      std::string gs = g.kind == 'O' ? "" : g.slot;
      std::string ps = p.kind == 'O' ? "" : p.slot;
      if (gs == ps) {
        if (!gs.empty()) counts[gs].tp++;
      } else {
        if (!gs.empty()) counts[gs].fn++;
        if (!ps.empty()) counts[ps].fp++;
      }
    }
  }

  MetricsReport report;
  report.utterance_count = gold.size();
  double num = 0.0, den = 0.0;
  for (const auto& [slot, c] : counts) {
    SlotMetrics m;
    m.support = c.tp + c.fn;
    m.predicted = c.tp + c.fp;
    m.precision = m.predicted ? (double)c.tp / (double)m.predicted : 0.0;
    m.recall = m.support ? (double)c.tp / (double)m.support : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    if (m.support > 0) {
      num += (double)m.support * m.f1;
      den += (double)m.support;
    }
    report.per_slot.emplace(slot, m);
  }
  report.weighted_f1 = den > 0.0 ? num / den : 0.0;
  return report;
}

double weighted_f1(const MetricsReport& report, F1Weighting weighting) {
  double num = 0.0, den = 0.0;
  for (const auto& [slot, m] : report.per_slot) {
    if (m.support == 0) continue;
    double w = weighting == F1Weighting::Support ? (double)m.support : 1.0;
    num += w * m.f1;
    den += w;
  }
  if (den == 0.0) throw DataError("weighted_f1: no slot has gold support");
  return num / den;
}

double dev_weighted_score(const std::map<std::string, double>& scores,
                          const std::map<std::string, std::size_t>& train_sizes) {
  if (scores.empty()) throw DataError("dev_weighted_score: no domain scores");
  double num = 0.0, den = 0.0;
  for (const auto& [domain, score] : scores) {
    auto it = train_sizes.find(domain);
    std::size_t n = it == train_sizes.end() ? 0 : it->second;
    double w = std::log((double)std::max<std::size_t>(n, 2));
    num += w * score;
    den += w;
  }
  return num / den;
}

namespace {
std::vector<std::vector<std::string>> gold_tags_of(const std::vector<TaggedUtterance>& test) {
  std::vector<std::vector<std::string>> out;
  out.reserve(test.size());
  for (const auto& u : test) out.push_back(u.tags);
  return out;
}
}  // namespace

MetricsReport evaluate_st(SingleTaskModel& model, const std::vector<TaggedUtterance>& test,
                          const EmbeddingTable& table) {
  std::vector<std::vector<std::string>> pred;
  pred.reserve(test.size());
  for (const auto& utt : test)
    pred.push_back(decode_tags(model.distributions(lookup(utt.tokens, table)), model.labels()));
  return token_f1_report(gold_tags_of(test), pred);
}

MetricsReport evaluate_mt(MultiTaskModel& model, const std::string& domain,
                          const std::vector<TaggedUtterance>& test, const EmbeddingTable& table) {
  std::vector<std::vector<std::string>> pred;
  pred.reserve(test.size());
  for (const auto& utt : test)
    pred.push_back(
        decode_tags(model.distributions(domain, lookup(utt.tokens, table)), model.labels(domain)));
  return token_f1_report(gold_tags_of(test), pred);
}

MetricsReport evaluate_ct(ConceptTaggerModel& model, const DomainSchema& schema,
                          const std::vector<TaggedUtterance>& test, const EmbeddingTable& table) {
  std::vector<std::vector<std::string>> pred;
  pred.reserve(test.size());
  for (const auto& utt : test)
    pred.push_back(ct_tag_frame(model, utt.tokens, schema, table).tags);
  return token_f1_report(gold_tags_of(test), pred);
}

}  // namespace slotfill
