#include "dictnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dictnet/error.hpp"

namespace dictnet {

namespace {
constexpr char kMagic[4] = {'D', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw FormatError("cannot open '" + path + "' for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    bytes(m.data(), m.size() * sizeof(double));
  }
  void dvec(const std::vector<double>& v) {
    u64(v.size());
    bytes(v.data(), v.size() * sizeof(double));
  }
  void close() {
    out_.flush();
    if (!out_) throw FormatError("write to '" + path_ + "' failed");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    in.seekg(0, std::ios::end);
    buf_.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0, std::ios::beg);
    in.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!in) throw FormatError("short read from '" + path + "'");
  }
  void bytes(void* p, std::size_t n) {
    if (at_ + n > buf_.size())
      throw FormatError(path_ + ": truncated at byte offset " + std::to_string(at_));
    std::memcpy(p, buf_.data() + at_, n);
    at_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    const std::uint64_t n = u64();
    if (at_ + n > buf_.size())
      throw FormatError(path_ + ": truncated string at byte offset " + std::to_string(at_));
    std::string s(reinterpret_cast<const char*>(buf_.data() + at_), n);
    at_ += n;
    return s;
  }
  Matrix matrix() {
    const std::uint64_t r = u64(), c = u64();
    Matrix m(r, c);
    bytes(m.data(), m.size() * sizeof(double));
    return m;
  }
  std::vector<double> dvec() {
    const std::uint64_t n = u64();
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  std::size_t offset() const { return at_; }
  const std::string& path() const { return path_; }

 private:
  std::vector<unsigned char> buf_;
  std::size_t at_ = 0;
  std::string path_;
};

void write_index_set(Writer& w, const IndexSet& a) {
  w.u8(a.space.kind == WeightSpace::Kind::Flat ? 0 : 1);
  w.u64(a.space.n);
  w.u64(a.space.height);
  w.u64(a.space.width);
  w.u64(a.space.channels);
  w.u64(a.indices.size());
  for (const std::size_t i : a.indices) w.u64(i);
}

IndexSet read_index_set(Reader& r) {
  IndexSet a;
  const std::uint8_t kind = r.u8();
  const std::uint64_t n = r.u64(), h = r.u64(), ww = r.u64(), c = r.u64();
  a.space = kind == 0 ? WeightSpace::flat(n) : WeightSpace::grid2d(h, ww, c);
  a.indices.resize(r.u64());
  for (auto& i : a.indices) i = r.u64();
  a.validate();
  return a;
}

void write_dictionary(Writer& w, const BuiltDictionary& d) {
  w.matrix(d.u);
  w.u8(d.trainable ? 1 : 0);
  write_index_set(w, d.alpha);
  w.str(d.provenance.strategy);
  w.u64(d.provenance.seed);
  w.u64(d.provenance.source_digest);
}

BuiltDictionary read_dictionary(Reader& r) {
  BuiltDictionary d;
  d.u = r.matrix();
  d.trainable = r.u8() != 0;
  d.alpha = read_index_set(r);
  d.provenance.strategy = r.str();
  d.provenance.seed = r.u64();
  d.provenance.source_digest = r.u64();
  return d;
}

void write_layer(Writer& w, const Layer& layer) {
  const std::string kind = layer.kind();
  w.str(kind);
  if (kind == "dense") {
    const auto& l = dynamic_cast<const DenseLayer&>(layer);
    w.matrix(l.w);
    w.dvec(l.bias);
    w.u8(static_cast<std::uint8_t>(l.act));
  } else if (kind == "pdense") {
    const auto& l = dynamic_cast<const PredictedDenseLayer&>(layer);
    w.u32(static_cast<std::uint32_t>(l.columns.size()));
    for (const auto& col : l.columns) {
      write_dictionary(w, col.dict);
      w.matrix(col.w_alpha);
      w.u64(col.units);
    }
    w.dvec(l.bias);
    w.u8(static_cast<std::uint8_t>(l.act));
  } else if (kind == "conv") {
    const auto& l = dynamic_cast<const ConvLayer&>(layer);
    w.matrix(l.bank);
    w.u64(l.fh);
    w.u64(l.fw);
    w.u64(l.cin);
    w.u64(l.stride);
    w.dvec(l.bias);
    w.u8(static_cast<std::uint8_t>(l.act));
  } else if (kind == "pconv") {
    const auto& l = dynamic_cast<const PredictedConvLayer&>(layer);
    write_dictionary(w, l.dict);
    w.matrix(l.w_alpha);
    w.u64(l.stride);
    w.dvec(l.bias);
    w.u8(static_cast<std::uint8_t>(l.act));
  } else if (kind == "maxpool") {
    const auto& l = dynamic_cast<const MaxPoolLayer&>(layer);
    w.u64(l.size);
    w.u64(l.stride);
  } else if (kind == "flatten") {
    // no fields
  } else {
    throw FormatError("checkpoint: unknown layer kind '" + kind + "'");
  }
}

std::unique_ptr<Layer> read_layer(Reader& r) {
  const std::string kind = r.str();
  if (kind == "dense") {
    Matrix w = r.matrix();
    auto bias = r.dvec();
    const auto act = static_cast<Activation>(r.u8());
    return std::make_unique<DenseLayer>(std::move(w), std::move(bias), act);
  }
  if (kind == "pdense") {
    const std::uint32_t n_cols = r.u32();
    std::vector<PredictedColumn> cols(n_cols);
    for (auto& col : cols) {
      col.dict = read_dictionary(r);
      col.w_alpha = r.matrix();
      col.units = r.u64();
    }
    auto bias = r.dvec();
    const auto act = static_cast<Activation>(r.u8());
    return std::make_unique<PredictedDenseLayer>(std::move(cols), std::move(bias), act);
  }
  if (kind == "conv") {
    Matrix bank = r.matrix();
    const std::uint64_t fh = r.u64(), fw = r.u64(), cin = r.u64(), stride = r.u64();
    auto bias = r.dvec();
    const auto act = static_cast<Activation>(r.u8());
    return std::make_unique<ConvLayer>(std::move(bank), fh, fw, cin, stride,
                                       std::move(bias), act);
  }
  if (kind == "pconv") {
    BuiltDictionary dict = read_dictionary(r);
    Matrix w_alpha = r.matrix();
    const std::uint64_t stride = r.u64();
    auto bias = r.dvec();
    const auto act = static_cast<Activation>(r.u8());
    return std::make_unique<PredictedConvLayer>(std::move(dict), std::move(w_alpha), stride,
                                                std::move(bias), act);
  }
  if (kind == "maxpool") {
    const std::uint64_t size = r.u64(), stride = r.u64();
    return std::make_unique<MaxPoolLayer>(size, stride);
  }
  if (kind == "flatten") return std::make_unique<FlattenLayer>();
  throw FormatError(r.path() + ": unknown layer kind '" + kind + "' at byte offset " +
                    std::to_string(r.offset()));
}

void write_header(Writer& w, std::uint8_t payload_kind, const CheckpointMeta& meta) {
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u8(payload_kind);
  w.str(meta.experiment_id);
  w.str(meta.strategy);
  w.f64(meta.fraction);
  w.u64(meta.seed);
}
}  // namespace

void save_network_checkpoint(const std::string& path, const Network& net,
                             const CheckpointMeta& meta) {
  Writer w(path);
  write_header(w, 0, meta);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) write_layer(w, *l);
  w.close();
}

void save_rica_checkpoint(const std::string& path, const RicaModel& model,
                          const CheckpointMeta& meta) {
  Writer w(path);
  write_header(w, 1, meta);
  w.u8(model.predicted ? 1 : 0);
  if (model.predicted) {
    write_dictionary(w, model.dict);
    w.matrix(model.w_alpha);
  } else {
    w.matrix(model.w);
  }
  w.f64(model.sparsity);
  w.f64(model.epsilon);
  w.close();
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path + ": bad magic at byte offset 0");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(version));
  const std::uint8_t payload = r.u8();

  LoadedCheckpoint out;
  out.meta.experiment_id = r.str();
  out.meta.strategy = r.str();
  out.meta.fraction = r.f64();
  out.meta.seed = r.u64();

  if (payload == 0) {
    out.is_network = true;
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) out.network.layers.push_back(read_layer(r));
  } else if (payload == 1) {
    out.rica.predicted = r.u8() != 0;
    if (out.rica.predicted) {
      out.rica.dict = read_dictionary(r);
      out.rica.w_alpha = r.matrix();
    } else {
      out.rica.w = r.matrix();
    }
    out.rica.sparsity = r.f64();
    out.rica.epsilon = r.f64();
  } else {
    throw FormatError(path + ": unknown payload kind " + std::to_string(payload));
  }
  return out;
}

}  // namespace dictnet
