#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slotfill/tensor.hpp"

namespace slotfill {

/// One utterance with its per-token IOB tags ("O", "B-<slot>", "I-<slot>").
struct TaggedUtterance {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

struct SlotDef {
  std::string name;
  std::string description;  // natural-language phrase, e.g. "number of senior passengers"
};

struct DomainSchema {
  std::string domain;
  std::vector<SlotDef> slots;

  const SlotDef* find_slot(const std::string& name) const;
};

struct DomainDataset {
  DomainSchema schema;
  std::vector<TaggedUtterance> train;
  std::vector<TaggedUtterance> test;
};

/// Template grammar for the bundled synthetic corpus: templates contain
/// {slot} placeholders filled from per-slot surface lexicons.
struct SynthGrammar {
  std::vector<std::string> templates;
  std::map<std::string, std::vector<std::string>> lexicons;
};

struct IobTag {
  char kind = 'O';        // 'B', 'I' or 'O'
  std::string slot;       // empty for 'O'
};

IobTag parse_tag(const std::string& tag);  // malformed tag -> DataError
std::string format_tag(const IobTag& t);

enum class IobMode { Strict, Lenient };

struct IobResult {
  std::vector<std::string> tags;
  std::vector<std::string> warnings;
};

/// Strict: an orphan "I-s" (not preceded by B-s/I-s) is an error with its
/// position. Lenient: it is rewritten to "B-s" with a warning.
IobResult validate_iob(const std::vector<std::string>& tags, IobMode mode);

/// Per-slot {B,I,O} projection used by the concept tagger.
enum class Bio : int { B = 0, I = 1, O = 2 };

struct SlotProjection {
  std::vector<Bio> labels;
  bool positive = false;  // true iff the slot occurs in the utterance
};

SlotProjection project_slot(const std::vector<std::string>& tags, const std::string& slot);

/// Dev split: final floor(fraction*n) samples become dev, the rest train.
struct DevSplit {
  std::vector<TaggedUtterance> train_part;
  std::vector<TaggedUtterance> dev_part;
};
DevSplit split_dev(const std::vector<TaggedUtterance>& samples, double fraction = 0.2);

/// Deterministic rotating-block subsample: n consecutive samples starting at
/// offset round(run_index * |train| / total_runs), wrapping around.
/// n >= |train| returns the whole set.
std::vector<TaggedUtterance> subsample(const std::vector<TaggedUtterance>& train, std::size_t n,
                                       std::size_t run_index, std::size_t total_runs = 10);

/// Alternative subsampling mode: seeded shuffle, then the first n samples.
std::vector<TaggedUtterance> subsample_shuffled(const std::vector<TaggedUtterance>& train,
                                                std::size_t n, std::uint64_t seed);

// ---- file formats ----

DomainSchema load_schema(const std::string& path);
void save_schema(const DomainSchema& schema, const std::string& path);

SynthGrammar load_grammar(const std::string& path);

/// JSON Lines, one {"tokens": [...], "tags": [...]} per line, validated
/// against the schema.
std::vector<TaggedUtterance> parse_dataset(const std::string& path, const DomainSchema& schema);
void save_dataset(const std::vector<TaggedUtterance>& data, const std::string& path);

void validate_utterance(const TaggedUtterance& utt, const DomainSchema& schema,
                        std::size_t record_index);

/// Seeded synthetic generation; gold tags are emitted by construction and
/// always pass strict IOB validation.
std::vector<TaggedUtterance> synth_generate(const SynthGrammar& grammar,
                                            const DomainSchema& schema, std::uint64_t seed,
                                            std::size_t n);

/// Every distinct token a grammar + schema can produce (template words,
/// lexicon values, slot description words), preprocessed.
std::vector<std::string> grammar_vocabulary(const SynthGrammar& grammar,
                                            const DomainSchema& schema);

}  // namespace slotfill
