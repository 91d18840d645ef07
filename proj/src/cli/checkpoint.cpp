#include "acsum/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "acsum/error.hpp"

namespace acsum {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'S', 'M'};

std::uint64_t fnv1a(const std::string& bytes, std::size_t begin, std::size_t end) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = begin; i < end; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  /// Payload followed by its checksum.
  void doubles(std::span<const double> values) {
    u64(values.size());
    std::size_t begin = out_.size();
    for (double v : values) f64(v);
    u64(fnv1a(out_, begin, out_.size()));
  }
  void raw(std::string_view s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  void need(std::size_t n, const std::string& what) const {
    if (in_.size() - pos_ < n) throw DataError("checkpoint truncated while reading " + what);
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const std::string& what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const std::string& what) {
    std::uint32_t n = u32(what);
    need(n, what);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> doubles(const std::string& what) {
    std::uint64_t n = u64(what);
    if (n > (in_.size() - pos_) / 8) throw DataError("checkpoint truncated in " + what);
    std::size_t begin = pos_;
    std::vector<double> values(n);
    for (auto& v : values) v = f64(what);
    std::uint64_t expect = fnv1a(std::string(in_.substr(begin, pos_ - begin)), 0, pos_ - begin);
    if (u64(what) != expect) throw DataError("checksum mismatch in " + what);
    return values;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_vocab(Writer& w, const Vocab& v) {
  const auto& toks = v.tokens();
  w.u32(static_cast<std::uint32_t>(toks.size() - Vocab::kReserved));
  for (std::size_t i = Vocab::kReserved; i < toks.size(); ++i) w.str(toks[i]);
}

Vocab read_vocab(Reader& r, const std::string& name) {
  std::uint32_t n = r.u32(name + " vocabulary");
  std::vector<std::string> toks;
  toks.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) toks.push_back(r.str(name + " vocabulary"));
  return Vocab::from_tokens(toks);
}

void write_stats(Writer& w, const StepStats& s) {
  for (double v : {s.nll_sum, s.tokens, s.reward_sum, s.episodes, s.critic_sq_sum, s.critic_steps}) w.f64(v);
}

StepStats read_stats(Reader& r) {
  StepStats s;
  for (double* v : {&s.nll_sum, &s.tokens, &s.reward_sum, &s.episodes, &s.critic_sq_sum, &s.critic_steps}) {
    *v = r.f64("training state");
  }
  return s;
}

}  // namespace

std::string serialize_checkpoint(Checkpoint& ck) {
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);

  auto cfg = ck.config.to_map();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  for (const auto& [k, v] : cfg) {
    w.str(k);
    w.str(v);
  }

  write_vocab(w, ck.vocab.code);
  write_vocab(w, ck.vocab.node);
  write_vocab(w, ck.vocab.comment);

  const TrainingState& st = ck.state;
  w.u64(st.iteration);
  for (bool c : st.completed) w.u8(c ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(st.phase));
  w.u64(st.epoch);
  w.u64(st.batch);
  write_stats(w, st.window);

  auto tensors = ck.params.all();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) w.u64(d);
    w.doubles(t->data());
  }

  const auto& acc = st.optimizer.accumulators();
  w.u32(static_cast<std::uint32_t>(acc.size()));
  for (const auto& [name, values] : acc) {
    w.str(name);
    w.doubles(values);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a checkpoint file");
  Reader r(bytes.substr(4));
  std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint ck;
  std::map<std::string, std::string> cfg;
  std::uint32_t entries = r.u32("config");
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = r.str("config");
    cfg[k] = r.str("config");
  }
  ck.config = RunConfig::from_map(cfg);

  ck.vocab.code = read_vocab(r, "code");
  ck.vocab.node = read_vocab(r, "node");
  ck.vocab.comment = read_vocab(r, "comment");

  TrainingState& st = ck.state;
  st.iteration = r.u64("training state");
  for (auto& c : st.completed) c = r.u8("training state") != 0;
  std::uint32_t phase = r.u32("training state");
  if (phase > 2) throw DataError("checkpoint has invalid phase " + std::to_string(phase));
  st.phase = static_cast<Phase>(phase);
  st.epoch = r.u64("training state");
  st.batch = r.u64("training state");
  st.window = read_stats(r);

  ck.params = ModelParams::zeros(ck.config.model, ck.vocab.sizes());
  std::uint32_t count = r.u32("tensor table");
  auto expected = ck.params.all();
  if (count != expected.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                    std::to_string(expected.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str("tensor name");
    std::string what = "tensor '" + name + "'";
    NamedTensor target{};
    try {
      target = ck.params.find(name);
    } catch (const Error&) {
      throw DataError("checkpoint has unknown " + what);
    }
    std::uint32_t rank = r.u32(what);
    Shape shape(rank);
    for (auto& d : shape) d = r.u64(what);
    if (shape != target.tensor->shape()) {
      throw DataError("shape mismatch in " + what + ": file " + shape_string(shape) + ", model " +
                      shape_string(target.tensor->shape()));
    }
    std::vector<double> values = r.doubles(what);
    if (values.size() != target.tensor->size()) throw DataError("payload size mismatch in " + what);
    std::copy(values.begin(), values.end(), target.tensor->data().begin());
  }

  std::uint32_t accs = r.u32("optimizer state");
  for (std::uint32_t i = 0; i < accs; ++i) {
    std::string name = r.str("optimizer state");
    std::string what = "accumulator '" + name + "'";
    std::vector<double> values = r.doubles(what);
    NamedTensor target{};
    try {
      target = ck.params.find(name);
    } catch (const Error&) {
      throw DataError("checkpoint has " + what + " for an unknown tensor");
    }
    if (values.size() != target.tensor->size()) throw DataError("size mismatch in " + what);
    st.optimizer.accumulators()[name] = std::move(values);
  }
  if (!r.done()) throw DataError("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, Checkpoint& checkpoint) {
  std::string bytes = serialize_checkpoint(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_checkpoint(buf.str());
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace acsum
