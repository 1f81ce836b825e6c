#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slotfill/corpus.hpp"
#include "slotfill/nn.hpp"
#include "slotfill/text.hpp"

namespace slotfill {

enum class ModelKind { SingleTask, MultiTask, ConceptTagger };

std::string kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

/// IOB label inventory of one domain: "O" then B-/I- pairs in schema order.
struct LabelSpace {
  std::vector<std::string> labels;

  static LabelSpace for_schema(const DomainSchema& schema);
  std::size_t size() const { return labels.size(); }
  std::size_t index_of(const std::string& tag) const;
};

/// Mean of the slot description's token embeddings (OOV rule applies).
Tensor slot_encoding(const SlotDef& slot, const EmbeddingTable& table);

/// Hidden widths, per direction. Defaults are the full-scale configuration;
/// tests shrink them.
struct ModelDims {
  std::size_t embed_dim = 200;
  std::size_t st_hidden = 64;
  std::size_t mt_hidden = 128;    // both stacked layers
  std::size_t ct_hidden1 = 128;
  std::size_t ct_combined = 128;  // combiner output width
  std::size_t ct_hidden2 = 64;
};

/// Per-domain bidirectional LSTM with a softmax head over the domain's
/// 2S+1 IOB labels.
class SingleTaskModel {
 public:
  SingleTaskModel(const DomainSchema& schema, const ModelDims& dims, std::uint64_t seed);

  std::vector<NodeRef> forward(Tape& tape, const std::vector<Tensor>& embedded);
  /// Softmax over each token's logits; inference only, no tape kept.
  std::vector<Tensor> distributions(const std::vector<Tensor>& embedded);

  const DomainSchema& schema() const { return schema_; }
  const LabelSpace& labels() const { return labels_; }
  ParameterStore& params() { return params_; }
  const ModelDims& dims() const { return dims_; }

 private:
  DomainSchema schema_;
  LabelSpace labels_;
  ModelDims dims_;
  ParameterStore params_;
  LstmCellParams fwd_, bwd_;
  Parameter* head_w_;
  Parameter* head_b_;
};

/// Two stacked bidirectional LSTM layers shared across domains, with one
/// softmax head per training domain.
class MultiTaskModel {
 public:
  MultiTaskModel(const std::map<std::string, DomainSchema>& schemas, const ModelDims& dims,
                 std::uint64_t seed);

  /// Shared-trunk token representations, dim 2 * mt_hidden.
  std::vector<NodeRef> trunk(Tape& tape, const std::vector<Tensor>& embedded);
  std::vector<NodeRef> forward(Tape& tape, const std::string& domain,
                               const std::vector<Tensor>& embedded);
  std::vector<Tensor> distributions(const std::string& domain,
                                    const std::vector<Tensor>& embedded);

  bool has_head(const std::string& domain) const { return heads_.count(domain) != 0; }
  const LabelSpace& labels(const std::string& domain) const;
  const DomainSchema& schema(const std::string& domain) const;
  std::vector<std::string> domains() const;
  ParameterStore& params() { return params_; }
  const ModelDims& dims() const { return dims_; }

 private:
  struct Head {
    DomainSchema schema;
    LabelSpace labels;
    Parameter* w;
    Parameter* b;
  };

  ModelDims dims_;
  ParameterStore params_;
  LstmCellParams l1_fwd_, l1_bwd_, l2_fwd_, l2_bwd_;
  std::map<std::string, Head> heads_;
};

/// Domain-agnostic tagger conditioned on a slot-description encoding:
/// bi-LSTM over tokens, per-token concat with the slot encoding through a
/// tanh affine, a second bi-LSTM, and a 3-way {B,I,O} softmax.
class ConceptTaggerModel {
 public:
  ConceptTaggerModel(const ModelDims& dims, std::uint64_t seed);

  std::vector<NodeRef> forward(Tape& tape, const std::vector<Tensor>& embedded,
                               const Tensor& slot_enc);
  std::vector<Tensor> distributions(const std::vector<Tensor>& embedded, const Tensor& slot_enc);

  ParameterStore& params() { return params_; }
  const ModelDims& dims() const { return dims_; }

 private:
  ModelDims dims_;
  ParameterStore params_;
  LstmCellParams l1_fwd_, l1_bwd_, l2_fwd_, l2_bwd_;
  Parameter* comb_w_;  // [(2*h1 + d) x combined]
  Parameter* comb_b_;
  Parameter* head_w_;  // [2*h2 x 3]
  Parameter* head_b_;
};

/// Per-token argmax decode, then lenient IOB repair.
std::vector<std::string> decode_tags(const std::vector<Tensor>& distributions,
                                     const LabelSpace& labels);

/// Merge of per-slot {B,I,O} distributions (slot order = schema order, inner
/// index = Bio) into one IOB frame, lenient-repaired.
TaggedUtterance merge_slot_predictions(const std::vector<std::string>& tokens,
                                       const DomainSchema& schema,
                                       const std::vector<std::vector<Tensor>>& per_slot);

/// Runs the concept tagger once per schema slot and merges the per-slot
/// {B,I,O} predictions into a single frame. A token goes to the slot with
/// the highest non-O probability among slots whose non-O probability beats
/// their O probability; ties break by schema order.
TaggedUtterance ct_tag_frame(ConceptTaggerModel& model, const std::vector<std::string>& tokens,
                             const DomainSchema& schema, const EmbeddingTable& table);

}  // namespace slotfill
