/*
 * Copyright 2026 The reactpref Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "reactpref/core/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "reactpref/core/error.hpp"
#include "reactpref/core/hash.hpp"

namespace reactpref {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr std::uint32_t kVersion = 2;
// Hex SHA-256 of everything before it.
constexpr std::size_t kDigestSize = 64;
constexpr std::string_view kModelMagic = "RPMODEL1";
constexpr std::string_view kJudgeMagic = "RPJUDGE1";

class Writer {
 public:
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(std::string_view s) { out_.append(s); }
  void doubles(std::span<const double> xs) {
    put<std::uint64_t>(xs.size());
    out_.append(reinterpret_cast<const char*>(xs.data()), xs.size() * sizeof(double));
  }
  std::string take() {
    out_ += sha256_hex(out_);
    return std::move(out_);
  }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(verified(in)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    const std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const auto n = get<std::uint64_t>();
    require(n <= (in_.size() - pos_) / sizeof(double), ErrorKind::Parse,
            "checkpoint truncated (array of " + std::to_string(n) + " values)");
    std::vector<double> xs(n);
    std::memcpy(xs.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return xs;
  }
  void finish() const {
    require(pos_ == in_.size(), ErrorKind::Parse, "checkpoint has trailing bytes");
  }

 private:
  static std::string_view verified(std::string_view in) {
    require(in.size() >= kDigestSize, ErrorKind::Parse, "checkpoint truncated");
    const std::string_view body = in.substr(0, in.size() - kDigestSize);
    require(sha256_hex(body) == in.substr(body.size()), ErrorKind::Parse,
            "checkpoint digest mismatch (file corrupted or truncated)");
    return body;
  }
  void need(std::size_t n) const {
    require(in_.size() - pos_ >= n, ErrorKind::Parse, "checkpoint truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_header(Writer& w, std::string_view magic, const VocabSpec& vocab) {
  w.bytes(magic);
  w.put<std::uint32_t>(kVersion);
  const std::string v = write_vocab(vocab);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
  w.bytes(v);
}

VocabSpec read_header(Reader& r, std::string_view magic) {
  require(r.bytes(magic.size()) == magic, ErrorKind::Parse,
          "not a " + std::string(magic) + " checkpoint");
  const auto version = r.get<std::uint32_t>();
  require(version == kVersion, ErrorKind::Parse,
          "unsupported checkpoint version " + std::to_string(version));
  const auto len = r.get<std::uint32_t>();
  return parse_vocab(r.bytes(len));
}

void write_optimizer(Writer& w, const AdamW& opt) {
  w.put<std::int64_t>(opt.steps_taken());
  w.doubles(opt.first_moment());
  w.doubles(opt.second_moment());
}

AdamW read_optimizer(Reader& r, std::size_t n) {
  const auto t = r.get<std::int64_t>();
  std::vector<double> m = r.doubles();
  std::vector<double> v = r.doubles();
  require(m.size() == n && v.size() == n, ErrorKind::Parse,
          "optimizer state does not match the parameter count");
  AdamW opt(n);
  opt.restore(std::move(m), std::move(v), t);
  return opt;
}

void copy_values(std::span<double> dst, const std::vector<double>& src) {
  require(dst.size() == src.size(), ErrorKind::Parse,
          "checkpoint holds " + std::to_string(src.size()) + " values, layout expects " +
              std::to_string(dst.size()));
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

std::string encode_model_checkpoint(const PreferenceTrainingState& state) {
  Writer w;
  write_header(w, kModelMagic, state.params.vocab());
  w.put<std::int32_t>(state.params.dim());
  w.put<std::int64_t>(state.step);
  w.doubles(state.params.values());
  write_optimizer(w, state.optimizer);
  return w.take();
}

PreferenceTrainingState decode_model_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  VocabSpec vocab = read_header(r, kModelMagic);
  const auto dim = r.get<std::int32_t>();
  require(dim >= 1, ErrorKind::Parse, "checkpoint dimension must be >= 1");
  PreferenceTrainingState s;
  s.step = r.get<std::int64_t>();
  s.params = ModelParams(std::move(vocab), dim);
  copy_values(s.params.values(), r.doubles());
  s.optimizer = read_optimizer(r, s.params.values().size());
  r.finish();
  return s;
}

std::string encode_judge_checkpoint(const JudgeTrainingState& state, const JudgeDims& dims) {
  const JudgeWeights& jw = state.params.weights;
  Writer w;
  write_header(w, kJudgeMagic, jw.vocab());
  w.put<std::int32_t>(jw.dim());
  w.put<std::int32_t>(jw.out_dim());
  w.put<double>(dims.init_scale);
  w.put<double>(dims.temperature);
  w.put<std::int64_t>(state.step);
  w.doubles(jw.values());
  write_optimizer(w, state.optimizer);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(state.params.bank.rows()));
  w.doubles({state.params.bank.data(), static_cast<std::size_t>(state.params.bank.size())});
  return w.take();
}

JudgeTrainingState decode_judge_checkpoint(std::string_view bytes, JudgeDims* dims) {
  Reader r(bytes);
  VocabSpec vocab = read_header(r, kJudgeMagic);
  JudgeDims d;
  d.dim = r.get<std::int32_t>();
  d.out_dim = r.get<std::int32_t>();
  d.init_scale = r.get<double>();
  d.temperature = r.get<double>();
  require(d.dim >= 1 && d.out_dim >= 1, ErrorKind::Parse, "checkpoint dimensions must be >= 1");
  JudgeTrainingState s;
  s.step = r.get<std::int64_t>();
  s.params.weights = JudgeWeights(std::move(vocab), d.dim, d.out_dim);
  copy_values(s.params.weights.values(), r.doubles());
  s.optimizer = read_optimizer(r, s.params.weights.values().size());
  const auto rows = r.get<std::uint64_t>();
  const std::vector<double> bank = r.doubles();
  require(bank.size() == rows * static_cast<std::uint64_t>(d.out_dim), ErrorKind::Parse,
          "motion bank size does not match its row count");
  s.params.bank = Eigen::Map<const RowMatrix>(bank.data(), static_cast<Eigen::Index>(rows), d.out_dim);
  r.finish();
  if (dims != nullptr) *dims = d;
  return s;
}

}  // namespace reactpref
