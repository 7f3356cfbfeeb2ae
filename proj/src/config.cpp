#include "spkn/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace spkn {

namespace fs = std::filesystem;

std::string_view to_string(PreprocessMode mode) {
  switch (mode) {
    case PreprocessMode::LogGrey:
      return "log-grey";
    case PreprocessMode::LogHsv:
      return "log-hsv";
    case PreprocessMode::Zca:
      return "zca";
  }
  return "?";
}

PreprocessMode parse_preprocess_mode(std::string_view text) {
  if (text == "log-grey") return PreprocessMode::LogGrey;
  if (text == "log-hsv") return PreprocessMode::LogHsv;
  if (text == "zca") return PreprocessMode::Zca;
  throw std::invalid_argument("unknown preprocessing mode '" + std::string(text) + "'");
}

PipelineConfig PipelineConfig::mnist() {
  PipelineConfig cfg;
  cfg.dataset_kind = "mnist";
  cfg.mode = PreprocessMode::LogGrey;
  cfg.sigmas = {0.471, 1.099, 2.042};
  cfg.cutoff = 0.01;
  cfg.preset = "small";
  cfg.network = NetworkConfig::preset("small");
  cfg.stdp1 = StdpConfig{};
  cfg.stdp2 = StdpConfig{};
  cfg.passes = 1;
  return cfg;
}

PipelineConfig PipelineConfig::eth80() {
  PipelineConfig cfg;
  cfg.dataset_kind = "image_dir";
  cfg.image_size = 64;
  cfg.mode = PreprocessMode::LogHsv;
  cfg.sigmas = {0.45, 0.5, 0.55, 0.95, 1.0, 1.05, 1.95, 2.0, 2.05};
  cfg.cutoff = 0.0025;
  cfg.preset = "medium";
  cfg.network = NetworkConfig::preset("medium");
  cfg.network.layer1.threshold = 60.0;
  cfg.network.layer2.threshold = 30.0;
  StdpConfig s;
  s.a_plus = 0.005;
  s.a_minus = -0.005;
  s.double_every = 410;
  s.rate_cap = 0.1;
  cfg.stdp1 = s;
  cfg.stdp2 = s;
  cfg.passes = 5;
  return cfg;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config " + key + ": '" + v + "' is not a number");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("config " + key + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config " + key + ": '" + v + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(to_double(key, item.substr(b, e - b + 1)));
  }
  return out;
}

fs::path to_path(const std::string& v, const fs::path& base) {
  fs::path p(v);
  if (p.is_relative() && !p.empty() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

void apply_stdp(StdpConfig& s, const std::string& key, const std::string& name,
                const std::string& v) {
  if (name == "a_plus") {
    s.a_plus = to_double(key, v);
  } else if (name == "a_minus") {
    s.a_minus = to_double(key, v);
  } else if (name == "lower") {
    s.lower = to_double(key, v);
  } else if (name == "upper") {
    s.upper = to_double(key, v);
  } else if (name == "double_every") {
    s.double_every = to_uint(key, v);
  } else if (name == "rate_cap") {
    s.rate_cap = to_double(key, v);
  } else if (name == "quantize_at") {
    s.quantize_at = to_double(key, v);
  } else {
    throw std::invalid_argument("unknown config key " + key);
  }
}

void apply(PipelineConfig& c, const std::string& section, const std::string& name,
           const std::string& v, const fs::path& base) {
  const std::string key = section + "." + name;
  if (section == "dataset") {
    if (name == "kind") {
      if (v != "mnist" && v != "image_dir") {
        throw std::invalid_argument("config dataset.kind must be mnist or image_dir");
      }
      c.dataset_kind = v;
    } else if (name == "dir") {
      const fs::path dir = to_path(v, base);
      c.train_images = dir / "train-images-idx3-ubyte";
      c.train_labels = dir / "train-labels-idx1-ubyte";
      c.test_images = dir / "t10k-images-idx3-ubyte";
      c.test_labels = dir / "t10k-labels-idx1-ubyte";
    } else if (name == "train_images") {
      c.train_images = to_path(v, base);
    } else if (name == "train_labels") {
      c.train_labels = to_path(v, base);
    } else if (name == "test_images") {
      c.test_images = to_path(v, base);
    } else if (name == "test_labels") {
      c.test_labels = to_path(v, base);
    } else if (name == "root") {
      c.image_root = to_path(v, base);
    } else if (name == "image_size") {
      c.image_size = to_uint(key, v);
    } else if (name == "train_limit") {
      c.train_limit = to_uint(key, v);
    } else if (name == "test_limit") {
      c.test_limit = to_uint(key, v);
    } else if (name == "train_instances") {
      c.train_instances = to_uint(key, v);
    } else if (name == "split_seed") {
      c.split_seed = to_uint(key, v);
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  } else if (section == "preprocess") {
    if (name == "mode") {
      c.mode = parse_preprocess_mode(v);
    } else if (name == "sigmas") {
      c.sigmas = to_doubles(key, v);
    } else if (name == "cutoff") {
      c.cutoff = to_double(key, v);
    } else if (name == "zca_epsilon") {
      c.zca_epsilon = to_double(key, v);
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  } else if (section == "network") {
    if (name == "preset") {
      const int steps = c.network.steps;
      c.network = NetworkConfig::preset(v);
      c.network.steps = steps;
      c.preset = v;
    } else if (name == "steps") {
      c.network.steps = static_cast<int>(to_uint(key, v));
    } else if (name == "channels1") {
      c.network.layer1.out_channels = to_uint(key, v);
    } else if (name == "channels2") {
      c.network.layer2.out_channels = to_uint(key, v);
    } else if (name == "threshold1") {
      c.network.layer1.threshold = to_double(key, v);
    } else if (name == "threshold2") {
      c.network.layer2.threshold = to_double(key, v);
    } else if (name == "winners") {
      c.winners = to_uint(key, v);
    } else if (name == "inhibition_radius") {
      c.inhibition_radius = to_uint(key, v);
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  } else if (section == "stdp") {
    apply_stdp(c.stdp1, key, name, v);
    apply_stdp(c.stdp2, key, name, v);
  } else if (section == "stdp1") {
    apply_stdp(c.stdp1, key, name, v);
  } else if (section == "stdp2") {
    apply_stdp(c.stdp2, key, name, v);
  } else if (section == "train") {
    if (name == "passes") {
      c.passes = to_uint(key, v);
    } else if (name == "init_mean") {
      c.init_mean = to_double(key, v);
    } else if (name == "init_sd") {
      c.init_sd = to_double(key, v);
    } else if (name == "early_stop") {
      c.early_stop = to_bool(key, v);
    } else if (name == "stop_epsilon") {
      c.stop_epsilon = to_double(key, v);
    } else if (name == "stop_patience") {
      c.stop_patience = to_uint(key, v);
    } else if (name == "smoothing_window") {
      c.smoothing_window = to_uint(key, v);
    } else if (name == "seed") {
      c.seed = to_uint(key, v);
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  } else if (section == "pca") {
    if (name == "k") {
      c.pca_k = static_cast<Eigen::Index>(to_uint(key, v));
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  } else if (section == "classifier") {
    if (name == "lambda") {
      c.svm.reg_lambda = to_double(key, v);
    } else if (name == "epochs") {
      c.svm.epochs = static_cast<int>(to_uint(key, v));
    } else if (name == "rff_dims") {
      c.rff_dims = static_cast<Eigen::Index>(to_uint(key, v));
    } else if (name == "rff_gamma") {
      c.rff_gamma = to_double(key, v);
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  } else {
    throw std::invalid_argument("unknown config section [" + section + "]");
  }
}

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.message() + " (line " +
                                std::to_string(e.line()) + ")");
  }
  const fs::path base = path.parent_path();
  PipelineConfig cfg;
  // A preset resets every network field, so it goes first.
  if (auto net = tree.get_child_optional("network")) {
    if (auto preset = net->get_optional<std::string>("preset")) {
      apply(cfg, "network", "preset", *preset, base);
    }
  }
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) {
      throw std::invalid_argument("config key '" + section + "' outside any section");
    }
    for (const auto& [name, node] : keys) {
      if (section == "network" && name == "preset") continue;
      apply(cfg, section, name, node.data(), base);
    }
  }
  for (const auto& o : overrides) cfg.set(o, fs::current_path());
  cfg.validate();
  return cfg;
}

void PipelineConfig::set(std::string_view assignment, const fs::path& base) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw std::invalid_argument("override '" + std::string(assignment) +
                                "' must look like section.key=value");
  }
  apply(*this, std::string(assignment.substr(0, dot)),
        std::string(assignment.substr(dot + 1, eq - dot - 1)),
        std::string(assignment.substr(eq + 1)), base);
}

std::string PipelineConfig::to_ini() const {
  std::ostringstream os;
  auto stdp = [&](const char* name, const StdpConfig& s) {
    os << "\n[" << name << "]\n"
       << "a_plus = " << fmt_double(s.a_plus) << "\n"
       << "a_minus = " << fmt_double(s.a_minus) << "\n"
       << "lower = " << fmt_double(s.lower) << "\n"
       << "upper = " << fmt_double(s.upper) << "\n"
       << "double_every = " << s.double_every << "\n"
       << "rate_cap = " << fmt_double(s.rate_cap) << "\n"
       << "quantize_at = " << fmt_double(s.quantize_at) << "\n";
  };
  os << "[dataset]\n"
     << "kind = " << dataset_kind << "\n"
     << "train_images = " << train_images.string() << "\n"
     << "train_labels = " << train_labels.string() << "\n"
     << "test_images = " << test_images.string() << "\n"
     << "test_labels = " << test_labels.string() << "\n"
     << "root = " << image_root.string() << "\n"
     << "image_size = " << image_size << "\n"
     << "train_limit = " << train_limit << "\n"
     << "test_limit = " << test_limit << "\n"
     << "train_instances = " << train_instances << "\n"
     << "split_seed = " << split_seed << "\n";
  os << "\n[preprocess]\n"
     << "mode = " << to_string(mode) << "\n"
     << "sigmas = ";
  for (std::size_t i = 0; i < sigmas.size(); ++i) os << (i ? ", " : "") << fmt_double(sigmas[i]);
  os << "\n"
     << "cutoff = " << fmt_double(cutoff) << "\n"
     << "zca_epsilon = " << fmt_double(zca_epsilon) << "\n";
  os << "\n[network]\n"
     << "preset = " << preset << "\n"
     << "steps = " << network.steps << "\n"
     << "channels1 = " << network.layer1.out_channels << "\n"
     << "channels2 = " << network.layer2.out_channels << "\n"
     << "threshold1 = " << fmt_double(network.layer1.threshold) << "\n"
     << "threshold2 = " << fmt_double(network.layer2.threshold) << "\n"
     << "winners = " << winners << "\n"
     << "inhibition_radius = " << inhibition_radius << "\n";
  stdp("stdp1", stdp1);
  stdp("stdp2", stdp2);
  os << "\n[train]\n"
     << "passes = " << passes << "\n"
     << "init_mean = " << fmt_double(init_mean) << "\n"
     << "init_sd = " << fmt_double(init_sd) << "\n"
     << "early_stop = " << (early_stop ? "true" : "false") << "\n"
     << "stop_epsilon = " << fmt_double(stop_epsilon) << "\n"
     << "stop_patience = " << stop_patience << "\n"
     << "smoothing_window = " << smoothing_window << "\n"
     << "seed = " << seed << "\n";
  os << "\n[pca]\n"
     << "k = " << pca_k << "\n";
  os << "\n[classifier]\n"
     << "lambda = " << fmt_double(svm.reg_lambda) << "\n"
     << "epochs = " << svm.epochs << "\n"
     << "rff_dims = " << rff_dims << "\n"
     << "rff_gamma = " << fmt_double(rff_gamma) << "\n";
  return os.str();
}

std::uint64_t PipelineConfig::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_ini()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

TrainOptions PipelineConfig::train_options(std::size_t layer_index) const {
  TrainOptions o;
  o.passes = passes;
  o.winners = winners;
  o.inhibition_radius = inhibition_radius;
  o.init_mean = init_mean;
  o.init_sd = init_sd;
  o.early_stop = early_stop;
  o.stop_epsilon = stop_epsilon;
  o.stop_patience = stop_patience;
  o.smoothing_window = smoothing_window;
  // Distinct, reproducible stream per layer.
  o.seed = seed * 0x9E3779B97F4A7C15ULL + layer_index + 1;
  return o;
}

void PipelineConfig::validate() const {
  if (dataset_kind == "image_dir" && image_size == 0) {
    throw std::invalid_argument("config dataset.image_size must be positive");
  }
  if (sigmas.empty() && mode != PreprocessMode::Zca) {
    throw std::invalid_argument("config preprocess.sigmas must not be empty");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) throw std::invalid_argument("config preprocess.sigmas must be positive");
  }
  if (!(cutoff >= 0.0)) throw std::invalid_argument("config preprocess.cutoff must be >= 0");
  if (!(zca_epsilon > 0.0)) throw std::invalid_argument("config preprocess.zca_epsilon must be > 0");
  network.validate();
  stdp1.validate();
  stdp2.validate();
  if (passes == 0) throw std::invalid_argument("config train.passes must be positive");
  if (winners == 0) throw std::invalid_argument("config network.winners must be positive");
  if (smoothing_window % 2 == 0) {
    throw std::invalid_argument("config train.smoothing_window must be odd");
  }
  if (pca_k < 1) throw std::invalid_argument("config pca.k must be positive");
  if (!(svm.reg_lambda > 0.0) || svm.epochs < 1) {
    throw std::invalid_argument("config classifier needs lambda > 0 and epochs >= 1");
  }
  if (rff_dims % 2 != 0) throw std::invalid_argument("config classifier.rff_dims must be even");
}

}  // namespace spkn
