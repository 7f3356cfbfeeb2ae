#include "spkn/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "spkn/errors.hpp"
#include "spkn/preprocess.hpp"

namespace spkn {

namespace fs = std::filesystem;

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return subset(idx);
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.name = name;
  out.split = split;
  out.class_names = class_names;
  out.classes = classes;
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
    if (!instance_ids.empty()) out.instance_ids.push_back(instance_ids.at(i));
  }
  return out;
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("truncated IDX header", off);
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

IdxArray read_idx(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 4) throw FormatError("truncated IDX magic in " + path.string(), bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) {
    throw FormatError("bad IDX magic in " + path.string(), std::size_t{0});
  }
  IdxArray arr;
  arr.type = bytes[2];
  if (arr.type != 0x08) {
    throw FormatError("unsupported IDX element type in " + path.string(), std::size_t{2});
  }
  const std::size_t rank = bytes[3];
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    arr.dims.push_back(read_be32(bytes, 4 + 4 * i));
    count *= arr.dims.back();
  }
  const std::size_t off = 4 + 4 * rank;
  if (bytes.size() != off + count) {
    throw FormatError("IDX payload of " + path.string() + " has " +
                          std::to_string(bytes.size() - std::min(bytes.size(), off)) +
                          " bytes, expected " + std::to_string(count),
                      std::min(bytes.size(), off + count));
  }
  arr.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off), bytes.end());
  return arr;
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  std::vector<std::uint8_t> out{0, 0, array.type, static_cast<std::uint8_t>(array.dims.size())};
  for (std::uint32_t d : array.dims) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(d >> s));
  }
  out.insert(out.end(), array.data.begin(), array.data.end());
  return out;
}

Dataset load_mnist(const fs::path& images, const fs::path& labels) {
  const IdxArray img = read_idx(images);
  const IdxArray lab = read_idx(labels);
  if (img.dims.size() != 3) {
    throw FormatError("MNIST images need magic 2051 (rank 3) in " + images.string(),
                      std::size_t{3});
  }
  if (lab.dims.size() != 1) {
    throw FormatError("MNIST labels need magic 2049 (rank 1) in " + labels.string(),
                      std::size_t{3});
  }
  if (img.dims[0] != lab.dims[0]) {
    throw FormatError("image and label counts differ", std::size_t{4});
  }
  const std::size_t n = img.dims[0], h = img.dims[1], w = img.dims[2];
  Dataset d;
  d.name = "mnist";
  d.classes = 10;
  for (int c = 0; c < 10; ++c) d.class_names.push_back(std::to_string(c));
  d.images.reserve(n);
  d.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> px(h * w);
    for (std::size_t p = 0; p < h * w; ++p) px[p] = img.data[i * h * w + p] / 255.0;
    d.images.emplace_back(Shape{1, h, w}, std::move(px));
    const int label = lab.data[i];
    if (label > 9) {
      throw FormatError("MNIST label " + std::to_string(label) + " out of range", 8 + i);
    }
    d.labels.push_back(label);
  }
  return d;
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(const std::vector<std::uint8_t>& b, std::size_t& pos, const fs::path& path) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw FormatError("truncated PNM header in " + path.string(), pos);
  return tok;
}

std::size_t pnm_number(const std::vector<std::uint8_t>& b, std::size_t& pos, const fs::path& path) {
  const std::size_t start = pos;
  const std::string tok = pnm_token(b, pos, path);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); })) {
    throw FormatError("bad PNM header field '" + tok + "' in " + path.string(), start);
  }
  return std::stoul(tok);
}

}  // namespace

Tensor read_pnm(const fs::path& path) {
  const auto b = read_bytes(path);
  std::size_t pos = 0;
  const std::string magic = pnm_token(b, pos, path);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported image format '" + magic + "' in " + path.string(),
                      std::size_t{0});
  }
  const std::size_t w = pnm_number(b, pos, path);
  const std::size_t h = pnm_number(b, pos, path);
  const std::size_t maxval = pnm_number(b, pos, path);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw FormatError("unsupported PNM geometry or maxval in " + path.string(), pos);
  }
  ++pos;  // single whitespace before the raster
  const std::size_t count = w * h * channels;
  if (b.size() < pos + count) {
    throw FormatError("truncated PNM raster in " + path.string(), b.size());
  }
  Tensor out({channels, h, w});
  for (std::size_t p = 0; p < w * h; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      out[c * w * h + p] = static_cast<double>(b[pos + p * channels + c]) /
                           static_cast<double>(maxval);
    }
  }
  return out;
}

namespace {

void write_pnm(const fs::path& path, const Tensor& img, std::size_t channels, const char* magic) {
  if (img.rank() != 3 || img.dim(0) != channels) {
    throw std::invalid_argument(std::string("write_pnm: expected ") + std::to_string(channels) +
                                "-channel image");
  }
  const std::size_t h = img.dim(1), w = img.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << magic << '\n' << w << ' ' << h << "\n255\n";
  std::vector<char> raster(w * h * channels);
  for (std::size_t p = 0; p < w * h; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = std::clamp(img[c * w * h + p], 0.0, 1.0);
      raster[p * channels + c] = static_cast<char>(static_cast<std::uint8_t>(v * 255.0 + 0.5));
    }
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

std::vector<fs::path> sorted_children(const fs::path& dir, bool dirs) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (dirs ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void write_pgm(const fs::path& path, const Tensor& grey) { write_pnm(path, grey, 1, "P5"); }
void write_ppm(const fs::path& path, const Tensor& rgb) { write_pnm(path, rgb, 3, "P6"); }

Dataset load_image_dir(const fs::path& root, std::size_t side) {
  if (!fs::is_directory(root)) {
    throw std::invalid_argument("image directory " + root.string() + " does not exist");
  }
  Dataset d;
  d.name = root.filename().string();
  int instance = 0;
  for (const fs::path& cat : sorted_children(root, true)) {
    const int label = static_cast<int>(d.class_names.size());
    d.class_names.push_back(cat.filename().string());
    std::size_t found = 0;
    for (const fs::path& inst : sorted_children(cat, true)) {
      for (const fs::path& file : sorted_children(inst, false)) {
        const std::string ext = file.extension().string();
        if (ext != ".pgm" && ext != ".ppm" && ext != ".pnm") {
          throw FormatError("unsupported image file " + file.string(), "file");
        }
        Tensor img = read_pnm(file);
        if (img.dim(0) == 1) {
          std::vector<double> rgb;
          for (int c = 0; c < 3; ++c) rgb.insert(rgb.end(), img.data().begin(), img.data().end());
          img = Tensor({3, img.dim(1), img.dim(2)}, std::move(rgb));
        }
        if (img.dim(1) != side || img.dim(2) != side) img = resize_area(img, side, side);
        d.images.push_back(std::move(img));
        d.labels.push_back(label);
        d.instance_ids.push_back(instance);
        ++found;
      }
      ++instance;
    }
    if (found == 0) {
      throw std::invalid_argument("category " + cat.string() + " holds no images");
    }
  }
  d.classes = static_cast<int>(d.class_names.size());
  if (d.classes == 0) {
    throw std::invalid_argument("image directory " + root.string() + " has no categories");
  }
  return d;
}

std::pair<Dataset, Dataset> split_by_instance(const Dataset& d, std::size_t train_instances,
                                              std::uint64_t seed) {
  if (d.instance_ids.size() != d.size()) {
    throw std::invalid_argument("split_by_instance: dataset has no instance ids");
  }
  std::map<int, std::set<int>> per_class;
  for (std::size_t i = 0; i < d.size(); ++i) per_class[d.labels[i]].insert(d.instance_ids[i]);
  std::mt19937_64 rng(seed);
  std::set<int> chosen;
  for (const auto& [label, ids] : per_class) {
    if (ids.size() <= train_instances) {
      throw std::invalid_argument("class " + std::to_string(label) + " has " +
                                  std::to_string(ids.size()) + " instances, need more than " +
                                  std::to_string(train_instances));
    }
    std::vector<int> pool(ids.begin(), ids.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(train_instances));
  }
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < d.size(); ++i) {
    (chosen.count(d.instance_ids[i]) ? train : test).push_back(i);
  }
  auto a = d.subset(train);
  auto b = d.subset(test);
  a.split = "train";
  b.split = "test";
  return {std::move(a), std::move(b)};
}

}  // namespace spkn
