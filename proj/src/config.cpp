#include "mmgan/config.hpp"

#include "mmgan/errors.hpp"
#include "mmgan/idx.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mmgan {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(const std::string& key, const Entry& e) : key_(key), e_(e) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(key_, e_.line, msg); }

  double real() const {
    double v = 0;
    const auto* end = e_.value.data() + e_.value.size();
    auto [p, ec] = std::from_chars(e_.value.data(), end, v);
    if (ec != std::errc() || p != end) fail("expected a real number, got '" + e_.value + "'");
    return v;
  }

  long long integer() const {
    long long v = 0;
    const auto* end = e_.value.data() + e_.value.size();
    auto [p, ec] = std::from_chars(e_.value.data(), end, v);
    if (ec != std::errc() || p != end) fail("expected an integer, got '" + e_.value + "'");
    return v;
  }

  bool boolean() const {
    if (e_.value == "true" || e_.value == "1" || e_.value == "yes") return true;
    if (e_.value == "false" || e_.value == "0" || e_.value == "no") return false;
    fail("expected true or false, got '" + e_.value + "'");
  }

  const std::string& text() const { return e_.value; }

  template <typename F>
  auto parsed(F&& f) const {
    try {
      return f(e_.value);
    } catch (const InvalidArgument& err) {
      fail(err.what());
    }
  }

 private:
  const std::string& key_;
  const Entry& e_;
};

std::vector<BlobCenter> parse_centers(const Reader& r) {
  // "x,y:std; x,y:std"
  std::vector<BlobCenter> centers;
  for (const auto& item : split(r.text(), ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) r.fail("blob center '" + item + "' needs the form x,y,...:std");
    BlobCenter c;
    const auto coords = split(item.substr(0, colon), ',');
    c.mean.resize(static_cast<Eigen::Index>(coords.size()));
    try {
      for (std::size_t i = 0; i < coords.size(); ++i)
        c.mean(static_cast<Eigen::Index>(i)) = std::stod(coords[i]);
      c.std = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      r.fail("blob center '" + item + "' is not numeric");
    }
    if (!(c.std >= 0)) r.fail("blob std must be >= 0");
    centers.push_back(std::move(c));
  }
  if (centers.empty()) r.fail("at least one blob center is required");
  return centers;
}

std::string format_hidden(const std::vector<Eigen::Index>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) s += (i ? "," : "") + std::to_string(h[i]);
  return s;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  using Handler = std::function<void(ExperimentConfig&, const Reader&)>;
  auto positive = [](const Reader& r, const char* what) {
    const auto v = r.integer();
    if (v < 1) r.fail(std::string(what) + " must be >= 1");
    return v;
  };
  const std::map<std::string, std::map<std::string, Handler>> schema = {
      {"train",
       {
           {"K", [&](auto& c, auto& r) { c.train.clusters = positive(r, "K"); }},
           {"d", [&](auto& c, auto& r) { c.train.latent_dim = positive(r, "d"); }},
           {"m",
            [](auto& c, auto& r) {
              const auto v = r.integer();
              if (v < 2) r.fail("batch size must satisfy m >= 2");
              c.train.batch_size = v;
            }},
           {"train_iter",
            [](auto& c, auto& r) {
              const auto v = r.integer();
              if (v < 0) r.fail("train_iter must be >= 0");
              c.train.train_iter = v;
            }},
           {"alpha",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v > 0)) r.fail("constraint violated: alpha > 0 (\xCE\xB1 > 0)");
              c.train.alpha = v;
            }},
           {"lr",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v >= 0)) r.fail("lr must be >= 0");
              c.train.lr = v;
            }},
           {"beta1",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v > 0 && v < 1)) r.fail("beta1 must lie in (0, 1)");
              c.train.beta1 = v;
            }},
           {"beta2",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v > 0 && v < 1)) r.fail("beta2 must lie in (0, 1)");
              c.train.beta2 = v;
            }},
           {"sigma_init", [](auto& c, auto& r) { c.train.sigma_init = r.real(); }},
           {"sigma_floor",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v > 0)) r.fail("sigma_floor must be > 0");
              c.train.sigma_floor = v;
            }},
           {"leak",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v > 0)) r.fail("leak must be > 0");
              c.train.leak = v;
            }},
           {"hidden",
            [](auto& c, auto& r) {
              std::vector<Eigen::Index> widths;
              for (const auto& w : split(r.text(), ',')) {
                try {
                  std::size_t used = 0;
                  const long long v = std::stoll(w, &used);
                  if (used != w.size() || v < 1) throw std::invalid_argument(w);
                  widths.push_back(v);
                } catch (const std::exception&) {
                  r.fail("hidden must be a comma-separated list of positive widths");
                }
              }
              if (widths.empty()) r.fail("hidden must list at least one width");
              c.train.hidden = widths;
            }},
           {"loss", [](auto& c, auto& r) { c.train.loss = r.parsed([](auto& s) { return loss_kind_from_string(s); }); }},
           {"pairing", [](auto& c, auto& r) { c.train.pairing = r.parsed([](auto& s) { return pairing_from_string(s); }); }},
           {"encoder_path",
            [](auto& c, auto& r) { c.train.encoder_path = r.parsed([](auto& s) { return encoder_path_from_string(s); }); }},
           {"seed",
            [](auto& c, auto& r) {
              const auto v = r.integer();
              if (v < 0) r.fail("seed must be >= 0");
              c.train.seed = static_cast<std::uint64_t>(v);
            }},
           {"eval_every", [&](auto& c, auto& r) { c.train.eval_every = positive(r, "eval_every"); }},
       }},
      {"data",
       {
           {"generator",
            [](auto& c, auto& r) {
              if (r.text() != "moons" && r.text() != "blobs" && r.text() != "idx")
                r.fail("generator must be one of moons, blobs, idx");
              c.data.generator = r.text();
            }},
           {"n",
            [](auto& c, auto& r) {
              const auto v = r.integer();
              if (v < 2) r.fail("n must be >= 2");
              c.data.n = v;
            }},
           {"noise",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v >= 0)) r.fail("noise must be >= 0");
              c.data.noise = v;
            }},
           {"test_fraction",
            [](auto& c, auto& r) {
              const auto v = r.real();
              if (!(v >= 0 && v < 1)) r.fail("test_fraction must lie in [0, 1)");
              c.data.test_fraction = v;
            }},
           {"seed",
            [](auto& c, auto& r) {
              const auto v = r.integer();
              if (v < 0) r.fail("seed must be >= 0");
              c.data.seed = static_cast<std::uint64_t>(v);
            }},
           {"normalize",
            [](auto& c, auto& r) {
              if (r.text() != "none") r.parsed([](auto& s) { return normalize_mode_from_string(s); });
              c.data.normalize = r.text();
            }},
           {"centers", [](auto& c, auto& r) { c.data.centers = parse_centers(r); }},
           {"images", [](auto& c, auto& r) { c.data.idx_images = r.text(); }},
           {"labels", [](auto& c, auto& r) { c.data.idx_labels = r.text(); }},
           {"limit",
            [](auto& c, auto& r) {
              const auto v = r.integer();
              if (v < 0) r.fail("limit must be >= 0");
              c.data.limit = v;
            }},
           {"downsample", [&](auto& c, auto& r) { c.data.downsample = positive(r, "downsample"); }},
       }},
      {"output",
       {
           {"dir", [](auto& c, auto& r) { c.output.dir = r.text(); }},
           {"plots", [](auto& c, auto& r) { c.output.plots = r.boolean(); }},
           {"repeat", [&](auto& c, auto& r) { c.repeat = static_cast<int>(positive(r, "repeat")); }},
       }},
  };

  ExperimentConfig config;
  std::map<std::string, int> seen;  // "section.key" -> line
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') throw ConfigError(content, line, "malformed section header");
      section = trim(content.substr(1, content.size() - 2));
      if (!schema.contains(section)) throw ConfigError(section, line, "unknown section");
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(content, line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const Entry entry{trim(content.substr(eq + 1)), line};
    if (section.empty()) throw ConfigError(key, line, "key appears before any [section]");
    const auto& keys = schema.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(key, line, "unknown key in [" + section + "]");
    if (!seen.emplace(section + "." + key, line).second)
      throw ConfigError(key, line, "duplicate key in [" + section + "]");
    if (entry.value.empty()) throw ConfigError(key, line, "missing value");
    it->second(config, Reader(key, entry));
  }

  auto line_of = [&](const std::string& k) {
    const auto f = seen.find(k);
    return f == seen.end() ? 0 : f->second;
  };
  const auto& t = config.train;
  if (t.latent_dim < 63 && static_cast<std::uint64_t>(t.clusters) > (std::uint64_t{1} << t.latent_dim))
    throw ConfigError("K", line_of("train.K") ? line_of("train.K") : line_of("train.d"),
                      "capacity constraint violated: K <= 2^d (K=" + std::to_string(t.clusters) +
                          ", d=" + std::to_string(t.latent_dim) + ")");
  if (!(t.sigma_init > t.sigma_floor && t.sigma_init <= 1.0))
    throw ConfigError("sigma_init", line_of("train.sigma_init"), "must lie in (sigma_floor, 1]");
  if (config.data.generator == "blobs" && config.data.centers.empty())
    throw ConfigError("centers", line_of("data.generator"), "blobs generator needs centers");
  if (config.data.generator == "idx" && config.data.idx_images.empty())
    throw ConfigError("images", line_of("data.generator"), "idx generator needs an images path");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train", 0, e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_echo(const ExperimentConfig& c) {
  std::ostringstream o;
  o.precision(17);
  const auto& t = c.train;
  o << "[train]\n"
    << "K = " << t.clusters << "\n"
    << "d = " << t.latent_dim << "\n"
    << "m = " << t.batch_size << "\n"
    << "train_iter = " << t.train_iter << "\n"
    << "alpha = " << t.alpha << "\n"
    << "lr = " << t.lr << "\n"
    << "beta1 = " << t.beta1 << "\n"
    << "beta2 = " << t.beta2 << "\n"
    << "sigma_init = " << t.sigma_init << "\n"
    << "sigma_floor = " << t.sigma_floor << "\n"
    << "leak = " << t.leak << "\n"
    << "hidden = " << format_hidden(t.hidden) << "\n"
    << "loss = " << to_string(t.loss) << "\n"
    << "pairing = " << to_string(t.pairing) << "\n"
    << "encoder_path = " << to_string(t.encoder_path) << "\n"
    << "seed = " << t.seed << "\n"
    << "eval_every = " << t.eval_every << "\n";
  const auto& d = c.data;
  o << "\n[data]\n"
    << "generator = " << d.generator << "\n"
    << "n = " << d.n << "\n"
    << "noise = " << d.noise << "\n"
    << "test_fraction = " << d.test_fraction << "\n"
    << "seed = " << d.seed << "\n"
    << "normalize = " << d.normalize << "\n";
  if (!d.centers.empty()) {
    o << "centers = ";
    for (std::size_t i = 0; i < d.centers.size(); ++i) {
      if (i) o << "; ";
      for (Eigen::Index j = 0; j < d.centers[i].mean.size(); ++j) o << (j ? "," : "") << d.centers[i].mean(j);
      o << ":" << d.centers[i].std;
    }
    o << "\n";
  }
  if (!d.idx_images.empty()) o << "images = " << d.idx_images << "\n";
  if (!d.idx_labels.empty()) o << "labels = " << d.idx_labels << "\n";
  o << "limit = " << d.limit << "\n"
    << "downsample = " << d.downsample << "\n";
  o << "\n[output]\n"
    << "dir = " << c.output.dir << "\n"
    << "plots = " << (c.output.plots ? "true" : "false") << "\n"
    << "repeat = " << c.repeat << "\n";
  return o.str();
}

namespace {

Eigen::MatrixXd downsample_images(const Tensor& images, Eigen::Index factor) {
  if (images.rank() != 3) throw InvalidArgument("image IDX file must be rank 3");
  const auto n = static_cast<Eigen::Index>(images.shape[0]);
  const auto h = static_cast<Eigen::Index>(images.shape[1]);
  const auto w = static_cast<Eigen::Index>(images.shape[2]);
  const Eigen::Index oh = h / factor, ow = w / factor;
  if (oh < 1 || ow < 1) throw InvalidArgument("downsample factor larger than the image");
  Eigen::MatrixXd out(n, oh * ow);
  const double area = static_cast<double>(factor * factor);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index r = 0; r < oh; ++r)
      for (Eigen::Index c = 0; c < ow; ++c) {
        double s = 0;
        for (Eigen::Index dr = 0; dr < factor; ++dr)
          for (Eigen::Index dc = 0; dc < factor; ++dc)
            s += images.values[static_cast<std::size_t>((i * h + r * factor + dr) * w + c * factor + dc)];
        out(i, r * ow + c) = s / area;
      }
  return out;
}

}  // namespace

Dataset build_dataset(const DataConfig& config) {
  Rng rng(config.seed);
  Dataset data;
  std::optional<std::pair<double, double>> range;
  if (config.generator == "moons") {
    data = make_moons(config.n, config.noise, rng, config.test_fraction);
  } else if (config.generator == "blobs") {
    data = make_blobs(config.n, config.centers, rng, config.test_fraction);
  } else if (config.generator == "idx") {
    Tensor images = load_idx_images(config.idx_images);
    data.name = "idx";
    data.samples = downsample_images(images, config.downsample);
    if (!config.idx_labels.empty()) {
      const Tensor labels = load_idx_labels(config.idx_labels);
      if (labels.shape[0] != images.shape[0]) throw InvalidArgument("IDX image and label counts differ");
      Labels l;
      for (double v : labels.values) l.push_back(static_cast<Eigen::Index>(v));
      data.labels = std::move(l);
    }
    if (config.limit > 0 && config.limit < data.size()) {
      data.samples = Eigen::MatrixXd(data.samples.topRows(config.limit));
      if (data.labels) data.labels->resize(static_cast<std::size_t>(config.limit));
    }
    assign_split(data, config.test_fraction, rng);
    range = std::make_pair(0.0, 255.0);
  } else {
    throw InvalidArgument("unknown data generator '" + config.generator + "'");
  }
  if (config.normalize != "none")
    data = normalize(data, normalize_mode_from_string(config.normalize), range).data;
  return data;
}

}  // namespace mmgan
