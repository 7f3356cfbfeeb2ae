#include "spkn/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "spkn/errors.hpp"

namespace spkn {

static_assert(std::endian::native == std::endian::little,
              "model files are written with host byte order, which must be little-endian");

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_doubles(const double* p, std::size_t n) {
    const auto* b = reinterpret_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n * sizeof(double));
  }
  void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  void begin(const char (&tag)[5]) {
    buf_.insert(buf_.end(), tag, tag + 4);
    len_at_ = buf_.size();
    put<std::uint64_t>(0);
  }
  void end() {
    const std::uint64_t len = buf_.size() - len_at_ - 8;
    std::memcpy(&buf_[len_at_], &len, 8);
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t len_at_ = 0;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_doubles(double* out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, b_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  // Enters the next section, which must carry `tag`.
  void begin(const char* tag) {
    section_ = tag;
    if (b_.size() - pos_ < 12) throw FormatError("truncated section header", section_);
    if (std::memcmp(b_.data() + pos_, tag, 4) != 0) {
      throw FormatError("expected section " + section_, section_);
    }
    pos_ += 4;
    const auto len = get<std::uint64_t>();
    if (len > b_.size() - pos_) throw FormatError("section length exceeds file", section_);
    end_ = pos_ + len;
  }
  void end() {
    if (pos_ != end_) throw FormatError("section length mismatch", section_);
  }
  void set_section(std::string s) { section_ = std::move(s); }
  const std::string& section() const { return section_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) {
    if (n > b_.size() - pos_) throw FormatError("truncated data", section_);
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  std::string section_ = "header";
};

void write_layer(Writer& w, const char (&tag)[5], const ConvLayerConfig& cfg, std::size_t pool,
                 const PackedBits& bits) {
  w.begin(tag);
  const Shape& s = bits.shape();
  for (std::size_t v : {s[0], s[1], s[2], s[3], cfg.stride, cfg.pad, pool}) {
    w.put(static_cast<std::uint32_t>(v));
  }
  w.put(cfg.threshold);
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  const auto words = bits.words();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(words[i / 8] >> (8 * (i % 8)));
  }
  w.put_bytes(bytes);
  w.end();
}

void read_layer(Reader& r, const char* tag, ConvLayerConfig& cfg, std::size_t& pool,
                PackedBits& bits) {
  r.begin(tag);
  Shape shape(4);
  for (auto& d : shape) d = r.get<std::uint32_t>();
  cfg.out_channels = shape[0];
  cfg.window = shape[2];
  if (shape[2] != shape[3]) throw FormatError("non-square kernel", r.section());
  cfg.stride = r.get<std::uint32_t>();
  cfg.pad = r.get<std::uint32_t>();
  pool = r.get<std::uint32_t>();
  cfg.threshold = r.get<double>();
  const std::size_t nbits = shape_size(shape);
  const auto bytes = r.get_bytes((nbits + 7) / 8);
  std::vector<PackedBits::Word> words((nbits + 63) / 64, 0);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    words[i / 8] |= static_cast<PackedBits::Word>(bytes[i]) << (8 * (i % 8));
  }
  try {
    bits = PackedBits::from_words(shape, std::move(words));
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), r.section());
  }
  r.end();
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const SpikingModel& m) {
  Writer w;
  for (char c : std::string("SPKN")) w.put(c);
  w.put(kModelFormatVersion);

  w.begin("CONF");
  w.put(m.config_digest);
  w.end();

  w.begin("FILT");
  const Frontend& f = m.frontend;
  w.put(static_cast<std::uint8_t>(f.mode));
  w.put(static_cast<std::int32_t>(f.steps));
  w.put(f.cutoff);
  w.put(static_cast<std::uint32_t>(f.bank.sigmas.size()));
  w.put_doubles(f.bank.sigmas.data(), f.bank.sigmas.size());
  w.put(static_cast<std::uint8_t>(f.zca ? 1 : 0));
  if (f.zca) {
    const ZcaModel& z = *f.zca;
    w.put(static_cast<std::uint32_t>(z.shape.size()));
    for (std::size_t d : z.shape) w.put(static_cast<std::uint64_t>(d));
    w.put(static_cast<std::uint32_t>(z.mean.size()));
    w.put(static_cast<std::uint32_t>(z.basis.rows()));
    w.put(z.epsilon);
    w.put_doubles(z.mean.data(), static_cast<std::size_t>(z.mean.size()));
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMat basis = z.basis;
    w.put_doubles(basis.data(), static_cast<std::size_t>(basis.size()));
    w.put_doubles(z.gains.data(), static_cast<std::size_t>(z.gains.size()));
  }
  w.end();

  write_layer(w, "LAY1", m.layer1, m.pool1, m.weights1);
  write_layer(w, "LAY2", m.layer2, m.pool2, m.weights2);

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  w.begin("PCA_");
  w.put(static_cast<std::uint32_t>(m.pca.components.rows()));
  w.put(static_cast<std::uint32_t>(m.pca.components.cols()));
  w.put_doubles(m.pca.mean.data(), static_cast<std::size_t>(m.pca.mean.size()));
  const RowMat comps = m.pca.components;
  w.put_doubles(comps.data(), static_cast<std::size_t>(comps.size()));
  w.put_doubles(m.pca.explained_variance.data(),
                static_cast<std::size_t>(m.pca.explained_variance.size()));
  w.end();

  w.begin("SVM_");
  const LinearModel& c = m.classifier;
  w.put(static_cast<std::uint32_t>(c.weights.rows()));
  w.put(static_cast<std::uint32_t>(c.weights.cols()));
  w.put(c.reg_lambda);
  w.put(static_cast<std::int32_t>(c.epochs));
  w.put(static_cast<std::uint64_t>(c.seed));
  const RowMat weights = c.weights;
  w.put_doubles(weights.data(), static_cast<std::size_t>(weights.size()));
  w.put_doubles(c.bias.data(), static_cast<std::size_t>(c.bias.size()));
  w.put(static_cast<std::uint32_t>(m.rff_dims));
  w.put(m.rff_gamma);
  w.put(static_cast<std::uint64_t>(m.rff_seed));
  w.put(m.input_scale);
  w.end();
  return w.take();
}

SpikingModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 6 || std::memcmp(bytes.data(), "SPKN", 4) != 0) {
    throw FormatError("not a model file (bad magic)", "header");
  }
  r.get_bytes(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version), "header");
  }
  SpikingModel m;
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  r.begin("CONF");
  m.config_digest = r.get<std::uint64_t>();
  r.end();

  r.begin("FILT");
  Frontend& f = m.frontend;
  const auto mode = r.get<std::uint8_t>();
  if (mode > 2) throw FormatError("unknown preprocessing mode", r.section());
  f.mode = static_cast<PreprocessMode>(mode);
  f.steps = r.get<std::int32_t>();
  f.cutoff = r.get<double>();
  std::vector<double> sigmas(r.get<std::uint32_t>());
  r.get_doubles(sigmas.data(), sigmas.size());
  try {
    if (f.steps < 1) throw std::invalid_argument("time steps must be positive");
    if (!sigmas.empty()) f.bank = FilterBank::make(sigmas, f.cutoff);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), r.section());
  }
  if (r.get<std::uint8_t>() != 0) {
    ZcaModel z;
    z.shape.resize(r.get<std::uint32_t>());
    for (auto& d : z.shape) d = r.get<std::uint64_t>();
    const auto d = static_cast<Eigen::Index>(r.get<std::uint32_t>());
    const auto rank = static_cast<Eigen::Index>(r.get<std::uint32_t>());
    if (static_cast<std::size_t>(d) != shape_size(z.shape)) {
      throw FormatError("ZCA dimension does not match its shape", r.section());
    }
    z.epsilon = r.get<double>();
    z.mean.resize(d);
    r.get_doubles(z.mean.data(), static_cast<std::size_t>(d));
    RowMat basis(rank, d);
    r.get_doubles(basis.data(), static_cast<std::size_t>(basis.size()));
    z.basis = basis;
    z.gains.resize(rank);
    r.get_doubles(z.gains.data(), static_cast<std::size_t>(rank));
    f.zca = std::move(z);
  }
  r.end();

  read_layer(r, "LAY1", m.layer1, m.pool1, m.weights1);
  read_layer(r, "LAY2", m.layer2, m.pool2, m.weights2);

  r.begin("PCA_");
  {
    const auto k = static_cast<Eigen::Index>(r.get<std::uint32_t>());
    const auto d = static_cast<Eigen::Index>(r.get<std::uint32_t>());
    m.pca.mean.resize(d);
    r.get_doubles(m.pca.mean.data(), static_cast<std::size_t>(d));
    RowMat comps(k, d);
    r.get_doubles(comps.data(), static_cast<std::size_t>(comps.size()));
    m.pca.components = comps;
    m.pca.explained_variance.resize(k);
    r.get_doubles(m.pca.explained_variance.data(), static_cast<std::size_t>(k));
  }
  r.end();

  r.begin("SVM_");
  {
    LinearModel& c = m.classifier;
    const auto classes = static_cast<Eigen::Index>(r.get<std::uint32_t>());
    const auto dims = static_cast<Eigen::Index>(r.get<std::uint32_t>());
    c.reg_lambda = r.get<double>();
    c.epochs = r.get<std::int32_t>();
    c.seed = r.get<std::uint64_t>();
    RowMat weights(classes, dims);
    r.get_doubles(weights.data(), static_cast<std::size_t>(weights.size()));
    c.weights = weights;
    c.bias.resize(classes);
    r.get_doubles(c.bias.data(), static_cast<std::size_t>(classes));
    m.rff_dims = r.get<std::uint32_t>();
    m.rff_gamma = r.get<double>();
    m.rff_seed = r.get<std::uint64_t>();
    m.input_scale = r.get<double>();
    if (!std::isfinite(m.input_scale)) throw FormatError("non-finite input scale", r.section());
  }
  r.end();
  r.set_section("trailer");
  if (!r.done()) throw FormatError("trailing bytes after the last section", "trailer");
  return m;
}

void save_model(const std::filesystem::path& path, const SpikingModel& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

SpikingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace spkn
