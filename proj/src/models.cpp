#include "slotfill/models.hpp"

#include <algorithm>

namespace slotfill {

std::string kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::SingleTask: return "st";
    case ModelKind::MultiTask: return "mt";
    case ModelKind::ConceptTagger: return "ct";
  }
  return "?";
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "st") return ModelKind::SingleTask;
  if (name == "mt") return ModelKind::MultiTask;
  if (name == "ct") return ModelKind::ConceptTagger;
  throw DataError("unknown model kind '" + name + "' (expected st|mt|ct)");
}

LabelSpace LabelSpace::for_schema(const DomainSchema& schema) {
  LabelSpace ls;
  ls.labels.push_back("O");
  for (const auto& s : schema.slots) {
    ls.labels.push_back("B-" + s.name);
    ls.labels.push_back("I-" + s.name);
  }
  return ls;
}

std::size_t LabelSpace::index_of(const std::string& tag) const {
  auto it = std::find(labels.begin(), labels.end(), tag);
  if (it == labels.end()) throw DataError("tag '" + tag + "' not in label space");
  return (std::size_t)(it - labels.begin());
}

Tensor slot_encoding(const SlotDef& slot, const EmbeddingTable& table) {
  auto tokens = preprocess(slot.description);
  if (tokens.empty())
    throw DataError("slot '" + slot.name + "': description empty after preprocessing");
  Tensor enc = Tensor::zeros({table.dim});
  for (const auto& tok : tokens) {
    const auto& v = table.vector_for(tok);
    for (std::size_t i = 0; i < table.dim; ++i) enc.data[i] += v[i];
  }
  for (double& x : enc.data) x /= (double)tokens.size();
  return enc;
}

namespace {

std::vector<NodeRef> embed_leaves(Tape& tape, const std::vector<Tensor>& embedded) {
  if (embedded.empty()) throw DataError("forward: empty input sequence");
  std::vector<NodeRef> seq;
  seq.reserve(embedded.size());
  for (const auto& e : embedded) seq.push_back(tape.constant(e));
  return seq;
}

std::vector<Tensor> to_distributions(Tape& tape, const std::vector<NodeRef>& logits) {
  std::vector<Tensor> out;
  out.reserve(logits.size());
  for (NodeRef l : logits) out.push_back(softmax(tape.value(l)));
  return out;
}

}  // namespace

SingleTaskModel::SingleTaskModel(const DomainSchema& schema, const ModelDims& dims,
                                 std::uint64_t seed)
    : schema_(schema), labels_(LabelSpace::for_schema(schema)), dims_(dims) {
  Rng rng(seed);
  fwd_ = make_lstm_cell(params_, "st.lstm.fwd", dims_.embed_dim, dims_.st_hidden, rng);
  bwd_ = make_lstm_cell(params_, "st.lstm.bwd", dims_.embed_dim, dims_.st_hidden, rng);
  std::size_t rep = 2 * dims_.st_hidden;
  head_w_ = &params_.create("st.head.w", {rep, labels_.size()});
  head_b_ = &params_.create("st.head.b", {labels_.size()});
  init_glorot(head_w_->value, rep, labels_.size(), rng);
}

std::vector<NodeRef> SingleTaskModel::forward(Tape& tape, const std::vector<Tensor>& embedded) {
  auto seq = embed_leaves(tape, embedded);
  auto reps = bilstm(tape, seq, fwd_, bwd_);
  std::vector<NodeRef> logits;
  logits.reserve(reps.size());
  for (NodeRef r : reps)
    logits.push_back(tape.affine(r, tape.param(*head_w_), tape.param(*head_b_)));
  return logits;
}

std::vector<Tensor> SingleTaskModel::distributions(const std::vector<Tensor>& embedded) {
  Tape tape;
  return to_distributions(tape, forward(tape, embedded));
}

MultiTaskModel::MultiTaskModel(const std::map<std::string, DomainSchema>& schemas,
                               const ModelDims& dims, std::uint64_t seed)
    : dims_(dims) {
  if (schemas.empty()) throw DataError("multi-task model: no domains");
  Rng rng(seed);
  std::size_t h = dims_.mt_hidden;
  l1_fwd_ = make_lstm_cell(params_, "mt.lstm1.fwd", dims_.embed_dim, h, rng);
  l1_bwd_ = make_lstm_cell(params_, "mt.lstm1.bwd", dims_.embed_dim, h, rng);
  l2_fwd_ = make_lstm_cell(params_, "mt.lstm2.fwd", 2 * h, h, rng);
  l2_bwd_ = make_lstm_cell(params_, "mt.lstm2.bwd", 2 * h, h, rng);
  std::size_t rep = 2 * h;
  for (const auto& [domain, schema] : schemas) {  // std::map: sorted, deterministic
    Head head;
    head.schema = schema;
    head.labels = LabelSpace::for_schema(schema);
    head.w = &params_.create("mt.head." + domain + ".w", {rep, head.labels.size()});
    head.b = &params_.create("mt.head." + domain + ".b", {head.labels.size()});
    init_glorot(head.w->value, rep, head.labels.size(), rng);
    heads_.emplace(domain, std::move(head));
  }
}

std::vector<NodeRef> MultiTaskModel::trunk(Tape& tape, const std::vector<Tensor>& embedded) {
  auto seq = embed_leaves(tape, embedded);
  auto l1 = bilstm(tape, seq, l1_fwd_, l1_bwd_);
  return bilstm(tape, l1, l2_fwd_, l2_bwd_);
}

std::vector<NodeRef> MultiTaskModel::forward(Tape& tape, const std::string& domain,
                                             const std::vector<Tensor>& embedded) {
  auto it = heads_.find(domain);
  if (it == heads_.end()) throw DataError("multi-task model has no head for domain '" + domain + "'");
  auto reps = trunk(tape, embedded);
  std::vector<NodeRef> logits;
  logits.reserve(reps.size());
  for (NodeRef r : reps)
    logits.push_back(tape.affine(r, tape.param(*it->second.w), tape.param(*it->second.b)));
  return logits;
}

std::vector<Tensor> MultiTaskModel::distributions(const std::string& domain,
                                                  const std::vector<Tensor>& embedded) {
  Tape tape;
  return to_distributions(tape, forward(tape, domain, embedded));
}

const LabelSpace& MultiTaskModel::labels(const std::string& domain) const {
  auto it = heads_.find(domain);
  if (it == heads_.end()) throw DataError("multi-task model has no head for domain '" + domain + "'");
  return it->second.labels;
}

const DomainSchema& MultiTaskModel::schema(const std::string& domain) const {
  auto it = heads_.find(domain);
  if (it == heads_.end()) throw DataError("multi-task model has no head for domain '" + domain + "'");
  return it->second.schema;
}

std::vector<std::string> MultiTaskModel::domains() const {
  std::vector<std::string> out;
  for (const auto& [d, _] : heads_) out.push_back(d);
  return out;
}

ConceptTaggerModel::ConceptTaggerModel(const ModelDims& dims, std::uint64_t seed) : dims_(dims) {
  Rng rng(seed);
  l1_fwd_ = make_lstm_cell(params_, "ct.lstm1.fwd", dims_.embed_dim, dims_.ct_hidden1, rng);
  l1_bwd_ = make_lstm_cell(params_, "ct.lstm1.bwd", dims_.embed_dim, dims_.ct_hidden1, rng);
  std::size_t comb_in = 2 * dims_.ct_hidden1 + dims_.embed_dim;
  comb_w_ = &params_.create("ct.comb.w", {comb_in, dims_.ct_combined});
  comb_b_ = &params_.create("ct.comb.b", {dims_.ct_combined});
  init_glorot(comb_w_->value, comb_in, dims_.ct_combined, rng);
  l2_fwd_ = make_lstm_cell(params_, "ct.lstm2.fwd", dims_.ct_combined, dims_.ct_hidden2, rng);
  l2_bwd_ = make_lstm_cell(params_, "ct.lstm2.bwd", dims_.ct_combined, dims_.ct_hidden2, rng);
  std::size_t rep = 2 * dims_.ct_hidden2;
  head_w_ = &params_.create("ct.head.w", {rep, 3});
  head_b_ = &params_.create("ct.head.b", {3});
  init_glorot(head_w_->value, rep, 3, rng);
}

std::vector<NodeRef> ConceptTaggerModel::forward(Tape& tape, const std::vector<Tensor>& embedded,
                                                 const Tensor& slot_enc) {
  if (slot_enc.size() != dims_.embed_dim)
    throw DimensionError("ct forward: slot encoding " + slot_enc.shape_str() + " expected [" +
                         std::to_string(dims_.embed_dim) + "]");
  auto seq = embed_leaves(tape, embedded);
  auto reps = bilstm(tape, seq, l1_fwd_, l1_bwd_);
  NodeRef enc = tape.constant(slot_enc);
  std::vector<NodeRef> combined;
  combined.reserve(reps.size());
  for (NodeRef r : reps)
    combined.push_back(tape.tanh_(
        tape.affine(tape.concat(r, enc), tape.param(*comb_w_), tape.param(*comb_b_))));
  auto reps2 = bilstm(tape, combined, l2_fwd_, l2_bwd_);
  std::vector<NodeRef> logits;
  logits.reserve(reps2.size());
  for (NodeRef r : reps2)
    logits.push_back(tape.affine(r, tape.param(*head_w_), tape.param(*head_b_)));
  return logits;
}

std::vector<Tensor> ConceptTaggerModel::distributions(const std::vector<Tensor>& embedded,
                                                      const Tensor& slot_enc) {
  Tape tape;
  return to_distributions(tape, forward(tape, embedded, slot_enc));
}

std::vector<std::string> decode_tags(const std::vector<Tensor>& distributions,
                                     const LabelSpace& labels) {
  std::vector<std::string> tags;
  tags.reserve(distributions.size());
  for (const auto& dist : distributions) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i)
      if (dist.data[i] > dist.data[best]) best = i;
    tags.push_back(labels.labels.at(best));
  }
  return validate_iob(tags, IobMode::Lenient).tags;
}

TaggedUtterance merge_slot_predictions(const std::vector<std::string>& tokens,
                                       const DomainSchema& schema,
                                       const std::vector<std::vector<Tensor>>& per_slot) {
  std::size_t n = tokens.size();
  std::size_t s_count = schema.slots.size();
  TaggedUtterance out;
  out.tokens = tokens;
  out.tags.assign(n, "O");
  for (std::size_t t = 0; t < n; ++t) {
    double best_non_o = 0.0;
    long best_slot = -1;
    char best_kind = 'O';
    for (std::size_t s = 0; s < s_count; ++s) {
      const Tensor& d = per_slot[s][t];
      double p_b = d.data[(int)Bio::B], p_i = d.data[(int)Bio::I], p_o = d.data[(int)Bio::O];
      double non_o = p_b + p_i;
      if (non_o <= p_o) continue;
      if (best_slot < 0 || non_o > best_non_o) {
        best_non_o = non_o;
        best_slot = (long)s;
        best_kind = p_b >= p_i ? 'B' : 'I';
      }
    }
    if (best_slot >= 0)
      out.tags[t] = std::string(1, best_kind) + "-" + schema.slots[best_slot].name;
  }
  out.tags = validate_iob(out.tags, IobMode::Lenient).tags;
  return out;
}

TaggedUtterance ct_tag_frame(ConceptTaggerModel& model, const std::vector<std::string>& tokens,
                             const DomainSchema& schema, const EmbeddingTable& table) {
  if (schema.slots.empty()) throw DataError("ct_tag_frame: schema has no slots");
  auto embedded = lookup(tokens, table);
  std::size_t s_count = schema.slots.size();

  // per-slot distributions; slots are independent, so this loop is parallel
  std::vector<std::vector<Tensor>> per_slot(s_count);
#pragma omp parallel for schedule(dynamic)
  for (long long s = 0; s < (long long)s_count; ++s) {
    Tensor enc = slot_encoding(schema.slots[s], table);
    per_slot[s] = model.distributions(embedded, enc);
  }
  return merge_slot_predictions(tokens, schema, per_slot);
}

}  // namespace slotfill
