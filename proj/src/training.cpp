#include "slotfill/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "slotfill/metrics.hpp"
#include <json.hpp>

namespace slotfill {

using nlohmann::json;

double MixSchedule::weight_of(const std::string& domain) const {
  for (const auto& [d, w] : weights)
    if (d == domain) return w;
  return 0.0;
}

MixSchedule make_schedule(const std::map<std::string, std::size_t>& domain_sizes) {
  MixSchedule schedule;
  double total = 0.0;
  for (const auto& [domain, n] : domain_sizes) {
    double w = n == 0 ? 0.0 : std::log((double)std::max<std::size_t>(n, 2));
    schedule.weights.emplace_back(domain, w);
    total += w;
  }
  if (total <= 0.0) throw DataError("make_schedule: no domain has training samples");
  for (auto& [domain, w] : schedule.weights) w /= total;
  return schedule;
}

DomainSampler::DomainSampler(MixSchedule schedule, std::uint64_t seed)
    : schedule_(std::move(schedule)), rng_(seed) {}

const std::string& DomainSampler::next() {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  double acc = 0.0;
  for (const auto& [domain, w] : schedule_.weights) {
    acc += w;
    if (u < acc && w > 0.0) return domain;
  }
  // numeric tail: last nonzero-weight domain
  for (auto it = schedule_.weights.rbegin(); it != schedule_.weights.rend(); ++it)
    if (it->second > 0.0) return it->first;
  throw StateError("sampler: schedule has no positive weights");
}

std::vector<CtExample> ct_make_examples(const TaggedUtterance& utt, const DomainSchema& schema) {
  std::vector<CtExample> out;
  out.reserve(schema.slots.size());
  for (const auto& slot : schema.slots) {
    SlotProjection proj = project_slot(utt.tags, slot.name);
    out.push_back(CtExample{&slot, std::move(proj.labels), proj.positive});
  }
  return out;
}

ParameterStore& LoadedModel::params() {
  switch (kind) {
    case ModelKind::SingleTask: return st->params();
    case ModelKind::MultiTask: return mt->params();
    case ModelKind::ConceptTagger: return ct->params();
  }
  throw StateError("LoadedModel: empty");
}

ModelCheckpoint make_checkpoint(ModelKind kind, const ModelDims& dims,
                                const RmsPropConfig& optimizer,
                                const std::vector<DomainSchema>& schemas,
                                const ParameterStore& params, const std::string& fingerprint) {
  ModelCheckpoint ckpt;
  ckpt.kind = kind_name(kind);
  ckpt.dims = dims;
  ckpt.optimizer = optimizer;
  ckpt.schemas = schemas;
  ckpt.embedding_fingerprint = fingerprint;
  for (const auto& p : params.all())
    ckpt.params.push_back({p->name, p->value.shape, p->value.data});
  return ckpt;
}

namespace {

struct BatchItem {
  const std::vector<Tensor>* embedded = nullptr;
  std::vector<std::size_t> gold;
  std::string domain;               // multi-task head selection
  const Tensor* slot_enc = nullptr; // concept tagger conditioning
};

NodeRef sequence_loss(Tape& tape, const std::vector<NodeRef>& logits,
                      const std::vector<std::size_t>& gold) {
  NodeRef sum;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    NodeRef l = tape.softmax_xent(logits[i], gold[i]).loss;
    sum = i == 0 ? l : tape.add(sum, l);
  }
  return tape.scale(sum, 1.0 / (double)logits.size());
}

std::vector<Tensor> snapshot_values(const ParameterStore& params) {
  std::vector<Tensor> vals;
  for (const auto& p : params.all()) vals.push_back(p->value);
  return vals;
}

void restore_values(ParameterStore& params, const std::vector<Tensor>& vals) {
  std::size_t i = 0;
  for (const auto& p : params.all()) p->value = vals[i++];
}

}  // namespace

TrainResult train(const std::map<std::string, DomainTrainData>& data,
                  const EmbeddingTable& table, const TrainConfig& cfg) {
  if (cfg.steps == 0) throw DataError("config: steps must be >= 1");
  if (cfg.batch_size == 0) throw DataError("config: batch_size must be >= 1");
  if (data.empty()) throw DataError("train: no domains");

  ModelDims dims = cfg.dims;
  dims.embed_dim = table.dim;

  std::map<std::string, std::size_t> sizes;
  for (const auto& [domain, d] : data) sizes[domain] = d.train.size();
  if (cfg.kind == ModelKind::SingleTask) {
    std::size_t nonempty = 0;
    for (const auto& [domain, n] : sizes) nonempty += n > 0 ? 1 : 0;
    if (nonempty != 1)
      throw DataError("single-task training takes exactly one non-empty domain, got " +
                      std::to_string(nonempty));
  }
  MixSchedule schedule = make_schedule(sizes);

  // pre-embedded training utterances and per-domain state
  struct DomainPrep {
    const DomainTrainData* src = nullptr;
    std::vector<std::vector<Tensor>> embedded;
    std::vector<std::vector<std::size_t>> gold;  // st/mt label indices
    std::vector<Tensor> slot_encs;               // ct, schema order
    std::size_t cursor = 0;
  };
  std::map<std::string, DomainPrep> prep;
  for (const auto& [domain, d] : data) {
    DomainPrep& dp = prep[domain];
    dp.src = &d;
    dp.embedded.reserve(d.train.size());
    for (const auto& utt : d.train) dp.embedded.push_back(lookup(utt.tokens, table));
  }

  // model + per-kind batch assembly and dev scoring
  std::unique_ptr<SingleTaskModel> st;
  std::unique_ptr<MultiTaskModel> mt;
  std::unique_ptr<ConceptTaggerModel> ct;
  ParameterStore* params = nullptr;
  std::vector<DomainSchema> schemas;

  if (cfg.kind == ModelKind::SingleTask) {
    const DomainSchema* schema = nullptr;
    for (const auto& [domain, d] : data)
      if (!d.train.empty()) schema = &d.schema;
    st = std::make_unique<SingleTaskModel>(*schema, dims, cfg.seed);
    params = &st->params();
    schemas = {*schema};
    for (auto& [domain, dp] : prep) {
      for (const auto& utt : dp.src->train) {
        std::vector<std::size_t> g;
        for (const auto& tag : utt.tags) g.push_back(st->labels().index_of(tag));
        dp.gold.push_back(std::move(g));
      }
    }
  } else if (cfg.kind == ModelKind::MultiTask) {
    std::map<std::string, DomainSchema> schema_map;
    for (const auto& [domain, d] : data) schema_map[domain] = d.schema;
    mt = std::make_unique<MultiTaskModel>(schema_map, dims, cfg.seed);
    params = &mt->params();
    for (const auto& [domain, s] : schema_map) schemas.push_back(s);
    for (auto& [domain, dp] : prep) {
      const LabelSpace& ls = mt->labels(domain);
      for (const auto& utt : dp.src->train) {
        std::vector<std::size_t> g;
        for (const auto& tag : utt.tags) g.push_back(ls.index_of(tag));
        dp.gold.push_back(std::move(g));
      }
    }
  } else {
    ct = std::make_unique<ConceptTaggerModel>(dims, cfg.seed);
    params = &ct->params();
    for (auto& [domain, dp] : prep) {
      for (const auto& slot : dp.src->schema.slots)
        dp.slot_encs.push_back(slot_encoding(slot, table));
    }
  }

  DomainSampler sampler(schedule, cfg.seed ^ 0x9e3779b97f4a7c15ull);

  auto fill_batch = [&](std::vector<BatchItem>& batch) {
    batch.clear();
    const std::string& domain = sampler.next();
    DomainPrep& dp = prep.at(domain);
    std::size_t n = dp.embedded.size();
    if (cfg.kind == ModelKind::ConceptTagger) {
      std::size_t s_count = dp.src->schema.slots.size();
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        std::size_t c = dp.cursor++;
        std::size_t u = (c / s_count) % n;
        std::size_t s = c % s_count;
        BatchItem item;
        item.embedded = &dp.embedded[u];
        item.slot_enc = &dp.slot_encs[s];
        SlotProjection proj =
            project_slot(dp.src->train[u].tags, dp.src->schema.slots[s].name);
        item.gold.reserve(proj.labels.size());
        for (Bio b : proj.labels) item.gold.push_back((std::size_t)b);
        batch.push_back(std::move(item));
      }
    } else {
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        std::size_t u = dp.cursor++ % n;
        BatchItem item;
        item.embedded = &dp.embedded[u];
        item.gold = dp.gold[u];
        item.domain = domain;
        batch.push_back(std::move(item));
      }
    }
  };

  auto example_loss = [&](Tape& tape, const BatchItem& item) -> NodeRef {
    std::vector<NodeRef> logits;
    if (cfg.kind == ModelKind::SingleTask)
      logits = st->forward(tape, *item.embedded);
    else if (cfg.kind == ModelKind::MultiTask)
      logits = mt->forward(tape, item.domain, *item.embedded);
    else
      logits = ct->forward(tape, *item.embedded, *item.slot_enc);
    return sequence_loss(tape, logits, item.gold);
  };

  std::map<std::string, std::size_t> dev_sizes;
  bool have_dev = false;
  for (const auto& [domain, d] : data) {
    if (!d.dev.empty()) have_dev = true;
    dev_sizes[domain] = d.train.size();
  }

  auto dev_score = [&]() -> double {
    std::map<std::string, double> scores;
    for (const auto& [domain, d] : data) {
      if (d.dev.empty()) continue;
      MetricsReport rep;
      if (cfg.kind == ModelKind::SingleTask)
        rep = evaluate_st(*st, d.dev, table);
      else if (cfg.kind == ModelKind::MultiTask)
        rep = evaluate_mt(*mt, domain, d.dev, table);
      else
        rep = evaluate_ct(*ct, d.schema, d.dev, table);
      scores[domain] = rep.weighted_f1;
    }
    return dev_weighted_score(scores, dev_sizes);
  };

  RmsProp optimizer(cfg.optimizer);
  TrainLog log;
  std::vector<Tensor> best_values;

  std::vector<BatchItem> batch;
  using GradVec = std::vector<std::pair<Parameter*, Tensor>>;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    fill_batch(batch);
    std::size_t bsz = batch.size();
    std::vector<GradVec> grads(bsz);
    std::vector<double> losses(bsz, 0.0);

#pragma omp parallel for schedule(dynamic) if (cfg.parallel_batch)
    for (long long i = 0; i < (long long)bsz; ++i) {
      Tape tape;
      NodeRef loss = example_loss(tape, batch[i]);
      losses[i] = tape.value(loss).data[0];
      tape.backward(loss);
      tape.for_each_param_grad([&](Parameter& p, const Tensor& g) {
        grads[i].emplace_back(&p, g);
      });
    }

    // fixed-order reduction keeps results identical for any thread count
    double inv = 1.0 / (double)bsz;
    for (std::size_t i = 0; i < bsz; ++i)
      for (auto& [p, g] : grads[i])
        for (std::size_t j = 0; j < g.size(); ++j) p->grad.data[j] += g.data[j] * inv;

    double mean_loss = 0.0;
    for (double l : losses) mean_loss += l * inv;
    if (!std::isfinite(mean_loss)) throw NumericError("train: non-finite loss at step " +
                                                      std::to_string(step));
    log.loss.push_back(mean_loss);

    optimizer.step(*params);

    bool last = step + 1 == cfg.steps;
    if (have_dev && ((step + 1) % cfg.dev_period == 0 || last)) {
      double score = dev_score();
      log.dev_scores.emplace_back(step + 1, score);
      if (score > log.best_dev) {
        log.best_dev = score;
        log.best_step = step + 1;
        best_values = snapshot_values(*params);
      }
    }
  }

  if (!best_values.empty()) restore_values(*params, best_values);

  TrainResult result;
  result.log = std::move(log);
  result.checkpoint =
      make_checkpoint(cfg.kind, dims, cfg.optimizer, schemas, *params, std::string());
  return result;
}

// ---- checkpoint persistence ----

namespace {

json dims_to_json(const ModelDims& d) {
  return json{{"embed_dim", d.embed_dim},     {"st_hidden", d.st_hidden},
              {"mt_hidden", d.mt_hidden},     {"ct_hidden1", d.ct_hidden1},
              {"ct_combined", d.ct_combined}, {"ct_hidden2", d.ct_hidden2}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.embed_dim = j.at("embed_dim").get<std::size_t>();
  d.st_hidden = j.at("st_hidden").get<std::size_t>();
  d.mt_hidden = j.at("mt_hidden").get<std::size_t>();
  d.ct_hidden1 = j.at("ct_hidden1").get<std::size_t>();
  d.ct_combined = j.at("ct_combined").get<std::size_t>();
  d.ct_hidden2 = j.at("ct_hidden2").get<std::size_t>();
  return d;
}

json schema_to_json(const DomainSchema& s) {
  json slots = json::array();
  for (const auto& slot : s.slots)
    slots.push_back({{"name", slot.name}, {"description", slot.description}});
  return json{{"domain", s.domain}, {"slots", slots}};
}

DomainSchema schema_from_json(const json& j) {
  DomainSchema s;
  s.domain = j.at("domain").get<std::string>();
  for (const auto& js : j.at("slots"))
    s.slots.push_back({js.at("name").get<std::string>(), js.at("description").get<std::string>()});
  return s;
}

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  json j;
  j["format_version"] = ckpt.format_version;
  j["model"] = ckpt.kind;
  j["hyperparams"] = {{"dims", dims_to_json(ckpt.dims)},
                      {"optimizer",
                       {{"learning_rate", ckpt.optimizer.learning_rate},
                        {"decay", ckpt.optimizer.decay},
                        {"epsilon", ckpt.optimizer.epsilon}}}};
  j["schemas"] = json::array();
  for (const auto& s : ckpt.schemas) j["schemas"].push_back(schema_to_json(s));
  j["params"] = json::array();
  for (const auto& p : ckpt.params)
    j["params"].push_back({{"name", p.name}, {"shape", p.shape}, {"data", p.data}});
  j["embedding_fingerprint"] = ckpt.embedding_fingerprint;

  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out << j.dump() << '\n';
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint " + path + ": " + e.what());
  }
  ModelCheckpoint ckpt;
  try {
    ckpt.format_version = j.at("format_version").get<int>();
    if (ckpt.format_version != 1)
      throw DataError("checkpoint " + path + ": unsupported format_version " +
                      std::to_string(ckpt.format_version));
    ckpt.kind = j.at("model").get<std::string>();
    kind_from_name(ckpt.kind);
    ckpt.dims = dims_from_json(j.at("hyperparams").at("dims"));
    const json& opt = j.at("hyperparams").at("optimizer");
    ckpt.optimizer.learning_rate = opt.at("learning_rate").get<double>();
    ckpt.optimizer.decay = opt.at("decay").get<double>();
    ckpt.optimizer.epsilon = opt.at("epsilon").get<double>();
    for (const auto& js : j.at("schemas")) ckpt.schemas.push_back(schema_from_json(js));
    for (const auto& jp : j.at("params")) {
      ModelCheckpoint::Entry e;
      e.name = jp.at("name").get<std::string>();
      e.shape = jp.at("shape").get<std::vector<std::size_t>>();
      e.data = jp.at("data").get<std::vector<double>>();
      if (e.data.size() != shape_product(e.shape))
        throw DataError("corrupt checkpoint " + path + ": parameter '" + e.name +
                        "' has " + std::to_string(e.data.size()) + " values");
      ckpt.params.push_back(std::move(e));
    }
    ckpt.embedding_fingerprint = j.at("embedding_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint " + path + ": " + e.what());
  }
  return ckpt;
}

LoadedModel model_from_checkpoint(const ModelCheckpoint& ckpt) {
  LoadedModel m;
  m.kind = kind_from_name(ckpt.kind);
  if (m.kind == ModelKind::SingleTask) {
    if (ckpt.schemas.size() != 1)
      throw DataError("checkpoint: single-task model needs exactly one schema");
    m.st = std::make_unique<SingleTaskModel>(ckpt.schemas[0], ckpt.dims, 0);
  } else if (m.kind == ModelKind::MultiTask) {
    std::map<std::string, DomainSchema> schema_map;
    for (const auto& s : ckpt.schemas) schema_map[s.domain] = s;
    m.mt = std::make_unique<MultiTaskModel>(schema_map, ckpt.dims, 0);
  } else {
    m.ct = std::make_unique<ConceptTaggerModel>(ckpt.dims, 0);
  }

  ParameterStore& store = m.params();
  std::size_t assigned = 0;
  for (const auto& e : ckpt.params) {
    Parameter* p = store.find(e.name);
    if (!p) throw DataError("checkpoint: unknown parameter '" + e.name + "'");
    if (p->value.shape != e.shape)
      throw DataError("checkpoint: parameter '" + e.name + "' shape mismatch");
    p->value.data = e.data;
    ++assigned;
  }
  if (assigned != store.all().size())
    throw DataError("checkpoint: " + std::to_string(assigned) + " of " +
                    std::to_string(store.all().size()) + " parameters present");
  return m;
}

}  // namespace slotfill
