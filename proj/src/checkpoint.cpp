// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (text, one item per line):
//
//   adr-checkpoint <version>
//   seed <u64>
//   config <E> <H> <D> <mean|sum> <gate_biases 0|1> <train_embeddings 0|1>
//   drugs <n>            followed by n names
//   vocab <n>            followed by n tokens
//   matrix <name> <rows> <cols>   followed by rows lines of hex floats
//   ...
//   end
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adr/error.hpp"
#include "adr/training.hpp"

namespace adr {
namespace {

std::string hexfloat(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, ptr);
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::string line(const char* expecting) {
    std::string l;
    if (!std::getline(in_, l)) {
      throw DataError(path_ + ": truncated checkpoint (expected " + expecting + ")");
    }
    ++line_no_;
    return l;
  }

  std::istringstream fields(const char* keyword) {
    std::string l = line(keyword);
    std::istringstream ss(l);
    std::string head;
    ss >> head;
    if (head != keyword) fail(std::string("expected \"") + keyword + "\"");
    return ss;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string path_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw UsageError("cannot write checkpoint: " + path);
    const ModelConfig& c = model.config();
    out << "adr-checkpoint " << kCheckpointVersion << '\n';
    out << "seed " << model.seed() << '\n';
    out << "config " << c.embedding_dim << ' ' << c.hidden_dim << ' ' << c.drug_count << ' '
        << (c.pooling == PoolingMode::kMean ? "mean" : "sum") << ' ' << int{c.gate_biases} << ' '
        << int{c.train_embeddings} << '\n';
    out << "drugs " << model.drug_names().size() << '\n';
    for (const auto& d : model.drug_names()) out << d << '\n';
    out << "vocab " << model.vocab().size() << '\n';
    for (const auto& t : model.vocab().tokens()) out << t << '\n';
    for (const Parameter* p : model.all_parameters()) {
      out << "matrix " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
      for (std::size_t r = 0; r < p->value.rows(); ++r) {
        auto row = p->value.row(r);
        for (std::size_t c2 = 0; c2 < row.size(); ++c2) {
          if (c2) out << ' ';
          out << hexfloat(row[c2]);
        }
        out << '\n';
      }
    }
    out << "end\n";
    if (!out.flush()) throw UsageError("failed writing checkpoint: " + path);
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open checkpoint: " + path);
  Reader reader(in, path);

  int version = 0;
  if (!(reader.fields("adr-checkpoint") >> version)) reader.fail("missing version");
  if (version != kCheckpointVersion) {
    reader.fail("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kCheckpointVersion) + ")");
  }
  std::uint64_t seed = 0;
  if (!(reader.fields("seed") >> seed)) reader.fail("malformed seed");

  ModelConfig config;
  {
    auto ss = reader.fields("config");
    std::string pooling;
    int biases = 0, train_emb = 0;
    if (!(ss >> config.embedding_dim >> config.hidden_dim >> config.drug_count >> pooling >>
          biases >> train_emb) ||
        (pooling != "mean" && pooling != "sum")) {
      reader.fail("malformed config line");
    }
    config.pooling = pooling == "mean" ? PoolingMode::kMean : PoolingMode::kSum;
    config.gate_biases = biases != 0;
    config.train_embeddings = train_emb != 0;
  }
  if (expected) {
    if (expected->embedding_dim != config.embedding_dim || expected->hidden_dim != config.hidden_dim ||
        expected->drug_count != config.drug_count) {
      throw DimensionError(
          "checkpoint " + path + " has shape E=" + std::to_string(config.embedding_dim) +
          " H=" + std::to_string(config.hidden_dim) + " D=" + std::to_string(config.drug_count) +
          " but the configuration expects E=" + std::to_string(expected->embedding_dim) +
          " H=" + std::to_string(expected->hidden_dim) + " D=" +
          std::to_string(expected->drug_count));
    }
  }

  auto read_list = [&](const char* keyword) {
    std::size_t n = 0;
    if (!(reader.fields(keyword) >> n)) reader.fail(std::string("malformed ") + keyword + " count");
    std::vector<std::string> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) items.push_back(reader.line(keyword));
    return items;
  };
  std::vector<std::string> drugs = read_list("drugs");
  Vocabulary vocab = Vocabulary::from_tokens(read_list("vocab"));

  EmbeddingTable placeholder{Matrix(vocab.size(), config.embedding_dim), 0.0};
  Model model(config, std::move(vocab), std::move(placeholder), std::move(drugs), seed);
  for (Parameter* p : model.all_parameters()) {
    auto ss = reader.fields("matrix");
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(ss >> name >> rows >> cols)) reader.fail("malformed matrix header");
    if (name != p->name) reader.fail("expected matrix " + p->name + ", found " + name);
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw DimensionError(path + ": matrix " + name + " has shape (" + std::to_string(rows) +
                           "x" + std::to_string(cols) + "), expected " +
                           p->value.shape_string());
    }
    for (std::size_t r = 0; r < rows; ++r) {
      std::string l = reader.line("matrix row");
      const char* ptr = l.data();
      const char* end = l.data() + l.size();
      for (double& v : p->value.row(r)) {
        while (ptr < end && *ptr == ' ') ++ptr;
        auto [next, ec] = std::from_chars(ptr, end, v, std::chars_format::hex);
        if (ec != std::errc()) reader.fail("bad value in matrix " + name);
        ptr = next;
      }
      while (ptr < end && *ptr == ' ') ++ptr;
      if (ptr != end) reader.fail("too many values in matrix " + name);
    }
  }
  if (reader.line("end") != "end") reader.fail("expected \"end\"");
  return model;
}

}  // namespace adr
