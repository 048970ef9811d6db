#include "mmgan/checkpoint.hpp"
#include "mmgan/config.hpp"
#include "mmgan/errors.hpp"
#include "mmgan/experiment.hpp"
#include "mmgan/metrics.hpp"
#include "mmgan/svg.hpp"

#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

using namespace mmgan;
using Eigen::Index;
using Eigen::MatrixXd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mmgan_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

const char* kSmallRun = R"(# tiny moon run
[train]
K = 2
d = 2
m = 16
train_iter = 40
hidden = 8,8
eval_every = 20
seed = 3

[data]
generator = moons
n = 200

[output]
plots = true
)";

ExperimentConfig small_config(int repeat = 1) {
  auto c = parse_config(kSmallRun);
  c.repeat = repeat;
  return c;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool well_formed(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error&) {
    return false;
  }
  return tree.count("svg") == 1;
}

// Key/type skeleton of a JSON document; arrays are described by their first element.
nlohmann::json shape_of(const nlohmann::json& j) {
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : j.items()) out[k] = shape_of(v);
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    if (!j.empty()) out.push_back(shape_of(j.front()));
    return out;
  }
  if (j.is_number()) return "number";
  if (j.is_boolean()) return "boolean";
  if (j.is_string()) return "string";
  return "null";
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" MMGAN_CLI_PATH "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal moon config fills defaults") {
  const auto c = parse_config("[train]\nK = 2\nd = 2\n");
  CHECK(c.train.clusters == 2);
  CHECK(c.train.latent_dim == 2);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.lr == 2e-4);
  CHECK(c.train.alpha == 1.0);
  CHECK(c.train.loss == LossKind::kRsgan);
  CHECK(c.train.pairing == Pairing::kPaired);
  CHECK(c.train.train_iter == 2000);
  CHECK(c.data.generator == "moons");
  CHECK(c.repeat == 1);
}

TEST_CASE("config errors name key and line") {
  SUBCASE("negative alpha") {
    const auto msg = error_of("[train]\nK = 2\nalpha = -1\n");
    CHECK(msg.find("\xCE\xB1 > 0") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("'alpha'") != std::string::npos);
  }
  SUBCASE("capacity") {
    try {
      parse_config("[train]\nK = 5\nd = 2\n");
      FAIL("expected a capacity error");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "K");
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("2^d") != std::string::npos);
    }
  }
  SUBCASE("unknown key") {
    const auto msg = error_of("[train]\nK = 2\n\nlearning_rate = 0.1\n");
    CHECK(msg.find("'learning_rate'") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
  }
  SUBCASE("type error") {
    const auto msg = error_of("[data]\nn = lots\n");
    CHECK(msg.find("'n'") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  SUBCASE("unknown section, duplicate key, bad enum") {
    CHECK(error_of("[model]\nK = 2\n").find("unknown section") != std::string::npos);
    CHECK(error_of("[train]\nK = 2\nK = 2\n").find("duplicate") != std::string::npos);
    CHECK(error_of("[train]\nloss = wgan\n").find("'loss'") != std::string::npos);
    CHECK(error_of("K = 2\n").find("before any") != std::string::npos);
  }
}

TEST_CASE("config echo round-trips") {
  auto c = parse_config(kSmallRun);
  c.train.loss = LossKind::kCrasgan;
  c.train.pairing = Pairing::kRandom;
  c.train.lr = 0.1 + 0.2;
  c.data.generator = "blobs";
  c.data.centers = {{Eigen::VectorXd::Constant(2, 1.5), 0.25}, {Eigen::VectorXd::Constant(2, -1.0), 0.5}};
  const auto echo = config_echo(c);
  const auto back = parse_config(echo);
  CHECK(config_echo(back) == echo);
  CHECK(back.train.lr == c.train.lr);
  CHECK(back.train.loss == LossKind::kCrasgan);
  CHECK(back.data.centers.size() == 2);
}

TEST_CASE("scatter svg element counts") {
  MatrixXd pts(3, 2);
  pts << 0, 0, 1, 1, -1, 0.5;
  const Labels one_cluster = {0, 0, 0};
  MatrixXd mean(1, 2);
  mean << 0.1, 0.2;
  const auto with_mean = render_scatter_svg(pts, one_cluster, mean, "a & <b>");
  CHECK(count(with_mean, "class=\"point\"") == 3);
  CHECK(count(with_mean, "class=\"mean\"") == 1);
  CHECK(well_formed(with_mean));

  const auto bare = render_scatter_svg(pts, one_cluster, MatrixXd(0, 2));
  CHECK(count(bare, "class=\"point\"") == 3);
  CHECK(count(bare, "class=\"mean\"") == 0);
  CHECK(well_formed(bare));

  CHECK_THROWS_AS(render_scatter_svg(MatrixXd::Zero(3, 3), one_cluster, MatrixXd(0, 2)), InvalidArgument);
  CHECK_THROWS_AS(render_scatter_svg(pts, Labels{0, 1}, MatrixXd(0, 2)), InvalidArgument);
}

TEST_CASE("scatter svg uses one color per cluster") {
  MatrixXd pts(4, 2);
  pts << 0, 0, 1, 1, 2, 2, 3, 3;
  const auto svg = render_scatter_svg(pts, Labels{0, 1, 0, 1}, MatrixXd(0, 2));
  std::regex fill("class=\"point\"[^>]*fill=\"(#[0-9a-f]{6})\"");
  std::vector<std::string> colors;
  for (std::sregex_iterator it(svg.begin(), svg.end(), fill), end; it != end; ++it) colors.push_back((*it)[1]);
  REQUIRE(colors.size() == 4);
  CHECK(colors[0] == colors[2]);
  CHECK(colors[1] == colors[3]);
  CHECK(colors[0] != colors[1]);
}

TEST_CASE("heatmap svg") {
  const auto cell_fills = [](const std::string& svg) {
    std::regex re("class=\"cell\"[^>]*fill=\"(#[0-9a-f]{6})\"");
    std::vector<std::string> out;
    for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) out.push_back((*it)[1]);
    return out;
  };
  const auto cell_texts = [](const std::string& svg) {
    std::regex re("<text class=\"value\"[^>]*>([^<]*)</text>");
    std::vector<std::string> out;
    for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) out.push_back((*it)[1]);
    return out;
  };

  SUBCASE("identity diagonal shares the max color") {
    const auto svg = render_heatmap_svg(MatrixXd::Identity(3, 3));
    const auto fills = cell_fills(svg);
    REQUIRE(fills.size() == 9);
    CHECK(fills[0] == fills[4]);
    CHECK(fills[4] == fills[8]);
    CHECK(fills[0] != fills[1]);
    CHECK(well_formed(svg));
  }
  SUBCASE("1x1") {
    const auto svg = render_heatmap_svg(MatrixXd::Constant(1, 1, 0.7));
    CHECK(count(svg, "class=\"cell\"") == 1);
    CHECK(well_formed(svg));
  }
  SUBCASE("symmetric values") {
    Rng rng(5);
    MatrixXd a = MatrixXd::Zero(4, 4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
    const auto texts = cell_texts(render_heatmap_svg(a));
    REQUIRE(texts.size() == 16);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(texts[i * 4 + j] == texts[j * 4 + i]);
  }
  SUBCASE("nan cells") {
    MatrixXd m = MatrixXd::Identity(2, 2);
    m(0, 1) = m(1, 0) = std::nan("");
    const auto svg = render_heatmap_svg(m);
    CHECK(count(svg, "n/a") == 2);
    CHECK(well_formed(svg));
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(render_heatmap_svg(MatrixXd::Zero(2, 3)), InvalidArgument);
    CHECK_THROWS_AS(render_heatmap_svg(MatrixXd(0, 0)), InvalidArgument);
  }
}

TEST_CASE("line chart svg") {
  const auto svg = render_line_svg({{"a", {0, 1, 2}, {1, 0.5, 0.25}}, {"b", {0, 1, 2}, {0, 1, 0}}}, "t", "x", "y");
  CHECK(count(svg, "class=\"series\"") == 2);
  CHECK(well_formed(svg));
}

TEST_CASE("csv files re-parse to the logged values") {
  const auto dir = scratch("csv");
  RunLog log;
  Rng rng(11);
  std::normal_distribution<double> n01;
  for (std::int64_t i = 0; i < 50; ++i)
    log.iterations.push_back({i, n01(rng) * 1e-7, std::exp(n01(rng) * 20), 1.0 / 3.0 + n01(rng)});
  log.iterations.push_back({50, 5e-324, -0.0, 1.7976931348623157e308});
  for (std::int64_t i = 0; i < 5; ++i) log.metrics.push_back({i * 10, n01(rng), n01(rng), 0.1 * i, {}});

  write_iterations_csv(dir / "it.csv", log);
  write_metrics_csv(dir / "m.csv", log);
  CHECK(slurp(dir / "it.csv").rfind("iter,d_loss,g_loss,ce_loss\n", 0) == 0);
  CHECK(slurp(dir / "m.csv").rfind("iter,nmi,ari,acc\n", 0) == 0);

  const auto it = read_iterations_csv(dir / "it.csv");
  REQUIRE(it.size() == log.iterations.size());
  for (std::size_t i = 0; i < it.size(); ++i) {
    CHECK(it[i].iter == log.iterations[i].iter);
    CHECK(it[i].d_loss == log.iterations[i].d_loss);
    CHECK(it[i].g_loss == log.iterations[i].g_loss);
    CHECK(it[i].ce_loss == log.iterations[i].ce_loss);
  }
  CHECK(std::signbit(it.back().g_loss));
  const auto m = read_metrics_csv(dir / "m.csv");
  REQUIRE(m.size() == log.metrics.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m[i].iter == log.metrics[i].iter);
    CHECK(m[i].nmi == log.metrics[i].nmi);
    CHECK(m[i].ari == log.metrics[i].ari);
    CHECK(m[i].acc == log.metrics[i].acc);
  }

  MatrixXd x = MatrixXd::Random(7, 3);
  write_samples_csv(dir / "s.csv", x, Labels{0, 1, 2, 0, 1, 2, 0});
  const auto d = read_samples_csv(dir / "s.csv");
  CHECK(d.samples == x);
  REQUIRE(d.labels);
  CHECK(*d.labels == Labels{0, 1, 2, 0, 1, 2, 0});

  std::ofstream(dir / "bad.csv") << "iter,loss\n1,2\n";
  CHECK_THROWS(read_iterations_csv(dir / "bad.csv"));
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(2e-4)) == 2e-4);
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("checkpoint round-trip and exact resume") {
  const auto config = small_config();
  const Dataset data = build_dataset(config.data);

  Trainer straight(config.train, data);
  for (int i = 0; i < 30; ++i) straight.step();

  Trainer first(config.train, data);
  for (int i = 0; i < 12; ++i) first.step();
  const auto text = checkpoint_to_string(Checkpoint::capture(first));
  const auto ckpt = checkpoint_from_string(text);
  CHECK(checkpoint_to_string(ckpt) == text);
  CHECK(ckpt.iteration == 12);

  Trainer resumed(config.train, data);
  ckpt.restore_into(resumed);
  for (int i = 0; i < 18; ++i) resumed.step();

  CHECK(resumed.iteration() == 30);
  CHECK(checkpoint_to_string(Checkpoint::capture(resumed)) == checkpoint_to_string(Checkpoint::capture(straight)));

  const auto dir = scratch("ckpt");
  save_checkpoint(dir / "c.json", ckpt);
  CHECK(slurp(dir / "c.json") == text);
  CHECK(checkpoint_to_string(load_checkpoint(dir / "c.json")) == text);
}

TEST_CASE("checkpoint rejects foreign or versioned documents") {
  const auto config = small_config();
  Trainer t(config.train, build_dataset(config.data));
  auto j = nlohmann::json::parse(checkpoint_to_string(Checkpoint::capture(t)));
  j["version"] = kCheckpointVersion + 1;
  CHECK_THROWS_AS(checkpoint_from_string(j.dump()), InvalidArgument);
  j["version"] = kCheckpointVersion;
  j["format"] = "something-else";
  CHECK_THROWS_AS(checkpoint_from_string(j.dump()), InvalidArgument);
  CHECK_THROWS_AS(checkpoint_from_string("{not json"), InvalidArgument);
}

TEST_CASE("experiment artifacts, summary schema and determinism") {
  const auto out_a = scratch("exp_a");
  const auto out_b = scratch("exp_b");
  const auto config = small_config(2);
  const auto a = run_experiment(config, out_a);
  const auto b = run_experiment(config, out_b);

  REQUIRE_FALSE(a.failed);
  REQUIRE(a.seeds.size() == 2);
  CHECK(a.seeds[0].seed == 3);
  CHECK(a.seeds[1].seed == 4);
  for (const auto& rel : a.artifacts) CHECK_MESSAGE(fs::exists(out_a / rel), rel.string());
  for (const char* f : {"summary.json", "seeds.csv", "test_data.csv", "run_0/iterations.csv", "run_0/metrics.csv",
                        "run_0/checkpoint.json", "run_0/cosine.svg", "run_0/one_minus_cosine.svg",
                        "run_0/clusters.svg", "run_1/latent.svg"})
    CHECK_MESSAGE(fs::exists(out_a / f), f);

  for (const char* f : {"seeds.csv", "test_data.csv", "run_0/iterations.csv", "run_0/metrics.csv",
                        "run_0/latent.csv", "run_0/checkpoint.json", "run_1/iterations.csv", "run_1/checkpoint.json"})
    CHECK_MESSAGE(slurp(out_a / f) == slurp(out_b / f), f);

  const auto log = read_iterations_csv(out_a / "run_0/iterations.csv");
  CHECK(log.size() == 40);

  const auto summary = nlohmann::json::parse(slurp(out_a / "summary.json"));
  CHECK(summary["status"] == "ok");
  CHECK(summary["seeds"].size() == 2);
  CHECK(summary["aggregate"]["acc"].contains("std"));
  CHECK(parse_config(summary["config"].get<std::string>()).repeat == 2);

  const auto golden = nlohmann::json::parse(slurp(fs::path(MMGAN_TEST_DIR) / "golden" / "summary_schema.json"));
  CHECK(shape_of(summary) == golden);
  CHECK(shape_of(nlohmann::json::parse(slurp(out_b / "summary.json"))) == golden);
}

TEST_CASE("single run omits std") {
  const auto out = scratch("single");
  auto config = small_config(1);
  config.output.plots = false;
  const auto s = run_experiment(config, out);
  CHECK_FALSE(s.aggregate(&MetricRecord::acc).std.has_value());
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  for (const char* m : {"nmi", "ari", "acc"}) {
    CHECK(j["aggregate"][m].contains("mean"));
    CHECK_FALSE(j["aggregate"][m].contains("std"));
  }
  CHECK_FALSE(fs::exists(out / "run_0/cosine.svg"));
}

TEST_CASE("aggregate uses sample standard deviation") {
  RunSummary s;
  for (double acc : {0.5, 0.7, 0.9}) {
    SeedResult r;
    r.final_metrics.acc = acc;
    s.seeds.push_back(r);
  }
  SeedResult dead;
  dead.ok = false;
  dead.final_metrics.acc = 100;
  s.seeds.push_back(dead);
  const auto m = s.aggregate(&MetricRecord::acc);
  CHECK(m.mean == doctest::Approx(0.7));
  REQUIRE(m.std);
  CHECK(*m.std == doctest::Approx(0.2));
}

TEST_CASE("aborted training keeps partial artifacts and marks the summary failed") {
  const auto out = scratch("abort");
  auto config = small_config(1);
  config.train.lr = 1e300;
  const auto s = run_experiment(config, out);
  CHECK(s.failed);
  REQUIRE(s.seeds.size() == 1);
  CHECK_FALSE(s.seeds[0].ok);
  CHECK_FALSE(s.seeds[0].error.empty());
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(j["status"] == "failed");
  CHECK(fs::exists(out / "run_0/iterations.csv"));
}

TEST_CASE("output root environment variable") {
  auto config = small_config();
  config.output.dir = "rel/dir";
  ::unsetenv(kOutputRootEnv);
  CHECK(resolve_output_dir(config) == fs::path("rel/dir"));
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  CHECK(resolve_output_dir(config) == fs::path("/tmp/root/rel/dir"));
  config.output.dir = "/abs/dir";
  CHECK(resolve_output_dir(config) == fs::path("/abs/dir"));
  ::unsetenv(kOutputRootEnv);
}

TEST_CASE("cli exit status") {
  const auto dir = scratch("cli");
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  std::string ok_text = kSmallRun;
  ok_text += "dir = out_ok\n";
  const auto ok = write("ok.ini", ok_text);
  const auto invalid = write("invalid.ini", "[train]\nalpha = -1\n");
  const auto unknown = write("unknown.ini", "[train]\nwidth = 3\n");
  const auto abort = write("abort.ini", std::regex_replace(ok_text, std::regex("seed = 3"), "seed = 3\nlr = 1e300"));

  const std::string env = "MMGAN_OUTPUT_ROOT=\"" + dir.string() + "\"";
  CHECK(run_cli("run \"" + ok + "\"", env) == 0);
  CHECK(fs::exists(dir / "out_ok" / "summary.json"));
  CHECK(run_cli("run \"" + invalid + "\"", env) != 0);
  CHECK(run_cli("run \"" + unknown + "\"", env) != 0);
  CHECK(run_cli("run \"" + abort + "\" --out \"" + (dir / "out_abort").string() + "\"") != 0);
  CHECK(fs::exists(dir / "out_abort" / "summary.json"));
  CHECK(run_cli("run \"" + (dir / "missing.ini").string() + "\"") != 0);

  CHECK(run_cli("eval \"" + (dir / "out_ok/run_0/checkpoint.json").string() + "\" \"" +
                (dir / "out_ok/test_data.csv").string() + "\"") == 0);
  CHECK(run_cli("plot \"" + (dir / "out_ok/run_0").string() + "\"") == 0);
  CHECK(fs::exists(dir / "out_ok/run_0/d_loss.svg"));
  CHECK(run_cli("annulus-check 20 3 1000") == 0);
  CHECK(run_cli("frobnicate") != 0);
}

TEST_CASE("shipped configs parse") {
  for (const auto& entry : fs::directory_iterator(fs::path(MMGAN_TEST_DIR).parent_path() / "configs")) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}
