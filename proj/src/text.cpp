#include "slotfill/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace slotfill {

namespace {

// '#' is the digit placeholder and must survive re-tokenization unchanged.
bool is_detachable_punct(unsigned char c) { return c < 128 && std::ispunct(c) && c != '#'; }

std::string normalize(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    if (c < 128 && std::isdigit(c))
      out.push_back('#');
    else if (c < 128)
      out.push_back((char)std::tolower(c));
    else
      out.push_back((char)c);
  }
  return out;
}

}  // namespace

std::vector<std::string> preprocess(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    std::size_t begin = 0, end = word.size();
    std::vector<std::string> leading, trailing;
    while (begin < end && is_detachable_punct((unsigned char)word[begin]))
      leading.push_back(std::string(1, word[begin++]));
    while (end > begin && is_detachable_punct((unsigned char)word[end - 1])) {
      trailing.push_back(std::string(1, word[end - 1]));
      --end;
    }
    for (auto& t : leading) tokens.push_back(normalize(t));
    if (end > begin) tokens.push_back(normalize(word.substr(begin, end - begin)));
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) tokens.push_back(normalize(*it));
  }
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

const std::vector<double>& EmbeddingTable::vector_for(const std::string& token) const {
  auto it = entries.find(token);
  return it == entries.end() ? oov_vector : it->second;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::vector<double> token_vector(const std::string& token, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ fnv1a64(token));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (double& x : v) {
    x = dist(rng);
    norm2 += x * x;
  }
  double norm = std::sqrt(norm2);
  if (norm > 0)
    for (double& x : v) x /= norm;
  return v;
}

constexpr std::uint64_t kOovSeed = 0x00764f5f;  // fixed; independent of table contents

}  // namespace

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("embeddings: cannot open " + path);
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (fields.empty()) continue;
    if (first_content && fields.size() == 2) {
      // "count dim" header
      char* e1 = nullptr;
      char* e2 = nullptr;
      std::strtoull(fields[0].c_str(), &e1, 10);
      std::size_t hdim = std::strtoull(fields[1].c_str(), &e2, 10);
      if (*e1 == '\0' && *e2 == '\0') {
        table.dim = hdim;
        first_content = false;
        continue;
      }
    }
    first_content = false;
    std::string token = fields[0];
    if (fields.size() < 2)
      throw DataError("embeddings: line " + std::to_string(lineno) + ": no values");
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      char* end = nullptr;
      double v = std::strtod(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0')
        throw DataError("embeddings: line " + std::to_string(lineno) + ": bad value '" +
                        fields[i] + "'");
      values.push_back(v);
    }
    if (table.dim == 0) table.dim = values.size();
    if (values.size() != table.dim)
      throw DataError("embeddings: line " + std::to_string(lineno) + ": row width " +
                      std::to_string(values.size()) + ", expected " + std::to_string(table.dim));
    if (!table.entries.emplace(token, std::move(values)).second)
      throw DataError("embeddings: line " + std::to_string(lineno) + ": duplicate token '" +
                      token + "'");
  }
  if (table.entries.empty()) throw DataError("embeddings: empty file " + path);
  auto oov = table.entries.find("_OOV_");
  if (oov != table.entries.end()) {
    table.oov_vector = oov->second;
    table.entries.erase(oov);
  } else {
    table.oov_vector = token_vector("_OOV_", table.dim, kOovSeed);
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("embeddings: cannot write " + path);
  out << std::setprecision(17);
  out << (table.entries.size() + 1) << ' ' << table.dim << '\n';
  auto write_row = [&](const std::string& token, const std::vector<double>& v) {
    out << token;
    for (double x : v) out << ' ' << x;
    out << '\n';
  };
  write_row("_OOV_", table.oov_vector);
  for (const auto& [token, v] : table.entries) write_row(token, v);
}

std::vector<Tensor> lookup(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  if (tokens.empty()) throw DataError("lookup: empty token list");
  std::vector<Tensor> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) out.push_back(Tensor::vec(table.vector_for(tok)));
  return out;
}

EmbeddingTable make_random_table(const std::vector<std::string>& vocab, std::size_t dim,
                                 std::uint64_t seed) {
  EmbeddingTable table;
  table.dim = dim;
  for (const auto& token : vocab) {
    if (token == "_OOV_") continue;
    table.entries.emplace(token, token_vector(token, dim, seed));
  }
  table.oov_vector = token_vector("_OOV_", dim, kOovSeed);
  return table;
}

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("fingerprint: cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= (unsigned char)buf[i];
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace slotfill
