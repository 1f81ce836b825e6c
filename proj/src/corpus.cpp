#include "slotfill/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "slotfill/text.hpp"
#include <json.hpp>

namespace slotfill {

using nlohmann::json;

const SlotDef* DomainSchema::find_slot(const std::string& name) const {
  for (const auto& s : slots)
    if (s.name == name) return &s;
  return nullptr;
}

IobTag parse_tag(const std::string& tag) {
  if (tag == "O") return IobTag{'O', ""};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return IobTag{tag[0], tag.substr(2)};
  throw DataError("malformed IOB tag '" + tag + "'");
}

std::string format_tag(const IobTag& t) {
  if (t.kind == 'O') return "O";
  return std::string(1, t.kind) + "-" + t.slot;
}

IobResult validate_iob(const std::vector<std::string>& tags, IobMode mode) {
  IobResult res;
  res.tags = tags;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    IobTag t = parse_tag(tags[i]);
    if (t.kind != 'I') continue;
    bool ok = false;
    if (i > 0) {
      IobTag prev = parse_tag(res.tags[i - 1]);
      ok = (prev.kind == 'B' || prev.kind == 'I') && prev.slot == t.slot;
    }
    if (!ok) {
      if (mode == IobMode::Strict)
        throw DataError("IOB violation at position " + std::to_string(i) + ": orphan '" +
                        tags[i] + "'");
      res.tags[i] = "B-" + t.slot;
      res.warnings.push_back("position " + std::to_string(i) + ": orphan '" + tags[i] +
                             "' rewritten to 'B-" + t.slot + "'");
    }
  }
  return res;
}

SlotProjection project_slot(const std::vector<std::string>& tags, const std::string& slot) {
  SlotProjection proj;
  proj.labels.reserve(tags.size());
  for (const auto& tag : tags) {
    IobTag t = parse_tag(tag);
    if (t.kind != 'O' && t.slot == slot) {
      proj.labels.push_back(t.kind == 'B' ? Bio::B : Bio::I);
      proj.positive = true;
    } else {
      proj.labels.push_back(Bio::O);
    }
  }
  return proj;
}

DevSplit split_dev(const std::vector<TaggedUtterance>& samples, double fraction) {
  std::size_t n_dev = (std::size_t)std::floor(fraction * (double)samples.size());
  DevSplit split;
  split.train_part.assign(samples.begin(), samples.end() - (long)n_dev);
  split.dev_part.assign(samples.end() - (long)n_dev, samples.end());
  return split;
}

std::vector<TaggedUtterance> subsample(const std::vector<TaggedUtterance>& train, std::size_t n,
                                       std::size_t run_index, std::size_t total_runs) {
  if (n >= train.size()) return train;
  if (n == 0) return {};
  std::size_t offset =
      (std::size_t)std::llround((double)(run_index * train.size()) / (double)total_runs) %
      train.size();
  std::vector<TaggedUtterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(train[(offset + i) % train.size()]);
  return out;
}

std::vector<TaggedUtterance> subsample_shuffled(const std::vector<TaggedUtterance>& train,
                                                std::size_t n, std::uint64_t seed) {
  if (n >= train.size()) return train;
  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<TaggedUtterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(train[idx[i]]);
  return out;
}

DomainSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("schema: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("schema: " + path + ": " + e.what());
  }
  DomainSchema schema;
  schema.domain = j.at("domain").get<std::string>();
  std::set<std::string> seen;
  for (const auto& js : j.at("slots")) {
    SlotDef s{js.at("name").get<std::string>(), js.at("description").get<std::string>()};
    if (!seen.insert(s.name).second)
      throw DataError("schema: duplicate slot '" + s.name + "' in " + schema.domain);
    if (preprocess(s.description).empty())
      throw DataError("schema: slot '" + s.name + "' has an empty description");
    schema.slots.push_back(std::move(s));
  }
  return schema;
}

void save_schema(const DomainSchema& schema, const std::string& path) {
  json j;
  j["domain"] = schema.domain;
  j["slots"] = json::array();
  for (const auto& s : schema.slots)
    j["slots"].push_back({{"name", s.name}, {"description", s.description}});
  std::ofstream out(path);
  if (!out) throw DataError("schema: cannot write " + path);
  out << j.dump(2) << '\n';
}

SynthGrammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("grammar: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("grammar: " + path + ": " + e.what());
  }
  SynthGrammar g;
  for (const auto& t : j.at("templates")) g.templates.push_back(t.get<std::string>());
  for (const auto& [slot, values] : j.at("lexicons").items()) {
    std::vector<std::string>& lex = g.lexicons[slot];
    for (const auto& v : values) lex.push_back(v.get<std::string>());
  }
  return g;
}

void validate_utterance(const TaggedUtterance& utt, const DomainSchema& schema,
                        std::size_t record_index) {
  if (utt.tokens.size() != utt.tags.size())
    throw DataError("record " + std::to_string(record_index) + ": " +
                    std::to_string(utt.tokens.size()) + " tokens vs " +
                    std::to_string(utt.tags.size()) + " tags");
  for (const auto& tag : utt.tags) {
    IobTag t = parse_tag(tag);
    if (t.kind != 'O' && !schema.find_slot(t.slot))
      throw DataError("record " + std::to_string(record_index) + ": slot '" + t.slot +
                      "' not in schema '" + schema.domain + "'");
  }
  try {
    validate_iob(utt.tags, IobMode::Strict);
  } catch (const DataError& e) {
    throw DataError("record " + std::to_string(record_index) + ": " + e.what());
  }
}

std::vector<TaggedUtterance> parse_dataset(const std::string& path, const DomainSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset: cannot open " + path);
  std::vector<TaggedUtterance> data;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("dataset: record " + std::to_string(index) + ": " + e.what());
    }
    TaggedUtterance utt;
    for (const auto& t : j.at("tokens")) utt.tokens.push_back(t.get<std::string>());
    for (const auto& t : j.at("tags")) utt.tags.push_back(t.get<std::string>());
    validate_utterance(utt, schema, index);
    data.push_back(std::move(utt));
    ++index;
  }
  return data;
}

void save_dataset(const std::vector<TaggedUtterance>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("dataset: cannot write " + path);
  for (const auto& utt : data) {
    json j{{"tokens", utt.tokens}, {"tags", utt.tags}};
    out << j.dump() << '\n';
  }
}

namespace {

struct TemplatePiece {
  bool is_slot = false;
  std::string text;  // literal text or slot name
};

std::vector<TemplatePiece> split_template(const std::string& tmpl) {
  std::vector<TemplatePiece> pieces;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      pieces.push_back({false, tmpl.substr(pos)});
      break;
    }
    if (open > pos) pieces.push_back({false, tmpl.substr(pos, open - pos)});
    std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos)
      throw DataError("grammar: unterminated placeholder in template '" + tmpl + "'");
    pieces.push_back({true, tmpl.substr(open + 1, close - open - 1)});
    pos = close + 1;
  }
  return pieces;
}

}  // namespace

std::vector<TaggedUtterance> synth_generate(const SynthGrammar& grammar,
                                            const DomainSchema& schema, std::uint64_t seed,
                                            std::size_t n) {
  if (grammar.templates.empty()) throw DataError("grammar: no templates");
  // validate up front so errors do not depend on the sampled path
  std::vector<std::vector<TemplatePiece>> parsed;
  for (const auto& t : grammar.templates) {
    auto pieces = split_template(t);
    for (const auto& p : pieces) {
      if (!p.is_slot) continue;
      if (!schema.find_slot(p.text))
        throw DataError("grammar: placeholder '{" + p.text + "}' not in schema '" +
                        schema.domain + "'");
      auto lex = grammar.lexicons.find(p.text);
      if (lex == grammar.lexicons.end() || lex->second.empty())
        throw DataError("grammar: empty lexicon for slot '" + p.text + "'");
    }
    parsed.push_back(std::move(pieces));
  }

  std::mt19937_64 rng(seed);
  std::vector<TaggedUtterance> data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pieces =
        parsed[std::uniform_int_distribution<std::size_t>(0, parsed.size() - 1)(rng)];
    TaggedUtterance utt;
    for (const auto& p : pieces) {
      if (!p.is_slot) {
        for (auto& tok : preprocess(p.text)) {
          utt.tokens.push_back(std::move(tok));
          utt.tags.push_back("O");
        }
      } else {
        const auto& lex = grammar.lexicons.at(p.text);
        const std::string& value =
            lex[std::uniform_int_distribution<std::size_t>(0, lex.size() - 1)(rng)];
        bool first = true;
        for (auto& tok : preprocess(value)) {
          utt.tokens.push_back(std::move(tok));
          utt.tags.push_back((first ? "B-" : "I-") + p.text);
          first = false;
        }
      }
    }
    validate_iob(utt.tags, IobMode::Strict);
    data.push_back(std::move(utt));
  }
  return data;
}

std::vector<std::string> grammar_vocabulary(const SynthGrammar& grammar,
                                            const DomainSchema& schema) {
  std::set<std::string> vocab;
  for (const auto& t : grammar.templates) {
    for (const auto& p : split_template(t))
      if (!p.is_slot)
        for (auto& tok : preprocess(p.text)) vocab.insert(std::move(tok));
  }
  for (const auto& [slot, values] : grammar.lexicons)
    for (const auto& v : values)
      for (auto& tok : preprocess(v)) vocab.insert(std::move(tok));
  for (const auto& s : schema.slots)
    for (auto& tok : preprocess(s.description)) vocab.insert(std::move(tok));
  return {vocab.begin(), vocab.end()};
}

}  // namespace slotfill
