#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "slotfill/models.hpp"

namespace slotfill {

struct TrainConfig {
  std::size_t steps = 2000;        // full-scale runs use 50000
  std::size_t batch_size = 16;     // full-scale runs use 100
  RmsPropConfig optimizer;
  std::uint64_t seed = 0;
  ModelKind kind = ModelKind::SingleTask;
  std::size_t dev_period = 200;    // dev evaluation + best-checkpoint tracking
  ModelDims dims;
  bool parallel_batch = true;      // per-example gradients via OpenMP; reduction order is fixed
};

/// Normalized per-domain sampling weights, proportional to ln(max(n, 2));
/// empty domains get weight zero.
struct MixSchedule {
  std::vector<std::pair<std::string, double>> weights;  // sorted by domain name

  double weight_of(const std::string& domain) const;
};

MixSchedule make_schedule(const std::map<std::string, std::size_t>& domain_sizes);

/// Seeded domain draws from a MixSchedule; same seed, same sequence.
class DomainSampler {
 public:
  DomainSampler(MixSchedule schedule, std::uint64_t seed);
  const std::string& next();

 private:
  MixSchedule schedule_;
  std::mt19937_64 rng_;
};

/// One concept-tagger training example: an utterance projected onto one slot.
struct CtExample {
  const SlotDef* slot;
  std::vector<Bio> labels;
  bool positive;
};

/// One example per schema slot (positives and negatives both included).
std::vector<CtExample> ct_make_examples(const TaggedUtterance& utt, const DomainSchema& schema);

struct DomainTrainData {
  DomainSchema schema;
  std::vector<TaggedUtterance> train;
  std::vector<TaggedUtterance> dev;
};

struct TrainLog {
  std::vector<double> loss;                              // per step
  std::vector<std::pair<std::size_t, double>> dev_scores;  // (step, log-weighted dev F1)
  double best_dev = -1.0;
  std::size_t best_step = 0;
};

struct ModelCheckpoint {
  int format_version = 1;
  std::string kind;
  ModelDims dims;
  RmsPropConfig optimizer;
  std::vector<DomainSchema> schemas;
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
  };
  std::vector<Entry> params;
  std::string embedding_fingerprint;
};

struct TrainResult {
  ModelCheckpoint checkpoint;
  TrainLog log;
};

/// Full training run: log-proportional domain mixing, RMSProp, periodic dev
/// scoring, returns the parameters with the best dev score (final parameters
/// when no dev data exists). Bitwise reproducible for a fixed config + seed.
TrainResult train(const std::map<std::string, DomainTrainData>& data,
                  const EmbeddingTable& table, const TrainConfig& cfg);

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

/// A rebuilt model of whichever kind the checkpoint holds.
struct LoadedModel {
  ModelKind kind;
  std::unique_ptr<SingleTaskModel> st;
  std::unique_ptr<MultiTaskModel> mt;
  std::unique_ptr<ConceptTaggerModel> ct;

  ParameterStore& params();
};

LoadedModel model_from_checkpoint(const ModelCheckpoint& ckpt);

ModelCheckpoint make_checkpoint(ModelKind kind, const ModelDims& dims,
                                const RmsPropConfig& optimizer,
                                const std::vector<DomainSchema>& schemas,
                                const ParameterStore& params, const std::string& fingerprint);

}  // namespace slotfill
