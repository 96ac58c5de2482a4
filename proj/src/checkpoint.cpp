#include "ssr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ssr/errors.hpp"

namespace ssr::train {
namespace {

constexpr char kMagic[8] = {'S', 'S', 'R', 'C', 'K', 'P', 'T', '1'};

void put_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64_le(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64_le(out, bits);
}

double get_f64_le(const unsigned char* p) {
  const uint64_t bits = get_u64_le(p);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

void append_matrix(std::string& out, const std::vector<std::vector<double>>& m) {
  for (const auto& row : m)
    for (double v : row) put_f64_le(out, v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const size_t rows_f = ckpt.params.fwd_logits.size();
  const size_t cols_f = rows_f ? ckpt.params.fwd_logits[0].size() : 0;
  const size_t rows_b = ckpt.params.bwd_logits.size();
  const size_t cols_b = rows_b ? ckpt.params.bwd_logits[0].size() : 0;

  nlohmann::ordered_json header{
      {"format", "ssr-checkpoint"},
      {"version", 1},
      {"step", ckpt.step},
      {"config_hash", ckpt.config_hash},
      {"rng_state", std::to_string(ckpt.params.rng_state)},
      {"lang_a", ckpt.vocab.lang_a},
      {"lang_b", ckpt.vocab.lang_b},
      {"tokens_a", ckpt.vocab.tokens_a},
      {"tokens_b", ckpt.vocab.tokens_b},
      {"dtype", "<f8"},
      {"arrays",
       nlohmann::ordered_json::array(
           {nlohmann::ordered_json{{"name", "fwd_logits"}, {"shape", {rows_f, cols_f}}},
            nlohmann::ordered_json{{"name", "bwd_logits"}, {"shape", {rows_b, cols_b}}},
            nlohmann::ordered_json{{"name", "format_logit"}, {"shape", nlohmann::json::array()}},
            nlohmann::ordered_json{{"name", "quote_logit"}, {"shape", nlohmann::json::array()}}})},
      {"metrics",
       nlohmann::ordered_json{{"step", ckpt.running.step},
                              {"mean_r_all", ckpt.running.mean_r_all},
                              {"mean_r_self", ckpt.running.mean_r_self},
                              {"format_rate", ckpt.running.format_rate},
                              {"mean_answer_tokens", ckpt.running.mean_answer_tokens},
                              {"grad_norm", ckpt.running.grad_norm}}},
  };

  const std::string header_text = header.dump();
  std::string blob;
  blob.reserve(16 + header_text.size() + 8 * (rows_f * cols_f + rows_b * cols_b + 2));
  blob.append(kMagic, sizeof(kMagic));
  put_u64_le(blob, header_text.size());
  blob += header_text;
  append_matrix(blob, ckpt.params.fwd_logits);
  append_matrix(blob, ckpt.params.bwd_logits);
  put_f64_le(blob, ckpt.params.format_logit);
  put_f64_le(blob, ckpt.params.quote_logit);

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0)
    throw InvalidInput("not a checkpoint file: " + path.string());

  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  const uint64_t header_len = get_u64_le(bytes + 8);
  if (16 + header_len > blob.size()) throw InvalidInput("truncated checkpoint header");
  const auto header = nlohmann::json::parse(blob.substr(16, header_len));
  if (header.at("dtype").get<std::string>() != "<f8")
    throw InvalidInput("unsupported checkpoint dtype");

  Checkpoint ckpt;
  ckpt.step = header.at("step").get<int64_t>();
  ckpt.config_hash = header.at("config_hash").get<std::string>();
  ckpt.vocab.lang_a = header.at("lang_a").get<std::string>();
  ckpt.vocab.lang_b = header.at("lang_b").get<std::string>();
  ckpt.vocab.tokens_a = header.at("tokens_a").get<std::vector<std::string>>();
  ckpt.vocab.tokens_b = header.at("tokens_b").get<std::vector<std::string>>();
  ckpt.params.rng_state = std::stoull(header.at("rng_state").get<std::string>());
  const auto& metrics = header.at("metrics");
  ckpt.running.step = metrics.at("step").get<int64_t>();
  ckpt.running.mean_r_all = metrics.at("mean_r_all").get<double>();
  ckpt.running.mean_r_self = metrics.at("mean_r_self").get<double>();
  ckpt.running.format_rate = metrics.at("format_rate").get<double>();
  ckpt.running.mean_answer_tokens = metrics.at("mean_answer_tokens").get<double>();
  ckpt.running.grad_norm = metrics.at("grad_norm").get<double>();

  size_t offset = 16 + header_len;
  auto read_matrix = [&](size_t rows, size_t cols) {
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
    if (offset + 8 * rows * cols > blob.size()) throw InvalidInput("truncated checkpoint arrays");
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < cols; ++j) {
        m[i][j] = get_f64_le(bytes + offset);
        offset += 8;
      }
    return m;
  };

  const auto& arrays = header.at("arrays");
  const auto shape_f = arrays.at(0).at("shape");
  const auto shape_b = arrays.at(1).at("shape");
  ckpt.params.fwd_logits = read_matrix(shape_f.at(0).get<size_t>(), shape_f.at(1).get<size_t>());
  ckpt.params.bwd_logits = read_matrix(shape_b.at(0).get<size_t>(), shape_b.at(1).get<size_t>());
  if (offset + 16 > blob.size()) throw InvalidInput("truncated checkpoint scalars");
  ckpt.params.format_logit = get_f64_le(bytes + offset);
  offset += 8;
  ckpt.params.quote_logit = get_f64_le(bytes + offset);
  return ckpt;
}

}  // namespace ssr::train
