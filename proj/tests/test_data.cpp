#include "mmgan/data.hpp"
#include "mmgan/errors.hpp"
#include "mmgan/idx.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace mmgan;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mmgan_test_data";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("noise-free moons lie on their circles") {
  Rng rng(0);
  const auto d = make_moons(1000, 0.0, rng);
  REQUIRE(d.labels);
  std::size_t zeros = 0;
  for (Index i = 0; i < d.size(); ++i) {
    const double x = d.samples(i, 0), y = d.samples(i, 1);
    if ((*d.labels)[static_cast<std::size_t>(i)] == 0) {
      ++zeros;
      CHECK(std::abs(x * x + y * y - 1) < 1e-12);
      CHECK(y >= -1e-12);
    } else {
      CHECK(std::abs((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5) - 1) < 1e-12);
      CHECK(y <= 0.5 + 1e-12);
    }
  }
  CHECK(zeros == 500);
  CHECK(d.test_indices.size() == 200);
  CHECK(d.train_indices.size() == 800);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("moons balance and determinism") {
  Rng r1(4), r2(4);
  const auto a = make_moons(1001, 0.1, r1);
  const auto b = make_moons(1001, 0.1, r2);
  CHECK(a.samples == b.samples);
  CHECK(*a.labels == *b.labels);
  CHECK(a.test_indices == b.test_indices);
  const auto ones = std::count(a.labels->begin(), a.labels->end(), Index{1});
  CHECK(std::abs(static_cast<double>(ones) - 500.5) <= 0.5);
  Rng r3(0);
  CHECK_THROWS_AS(make_moons(1, 0.1, r3), InvalidArgument);
  CHECK_THROWS_AS(make_moons(10, -0.1, r3), InvalidArgument);
}

TEST_CASE("split is disjoint and covering") {
  Rng rng(1);
  auto d = make_moons(50, 0.1, rng);
  std::set<Index> all(d.train_indices.begin(), d.train_indices.end());
  for (auto i : d.test_indices) CHECK(all.insert(i).second);
  CHECK(all.size() == 50);
  d.test_indices.push_back(d.train_indices.front());
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("blobs: counts, mean and separation") {
  Rng rng(2);
  std::vector<BlobCenter> three = {{Eigen::Vector2d(0, 0), 1}, {Eigen::Vector2d(5, 0), 1}, {Eigen::Vector2d(0, 5), 1}};
  const auto nine = make_blobs(9, three, rng, 0.0);
  std::vector<int> counts(3, 0);
  for (auto l : *nine.labels) ++counts[static_cast<std::size_t>(l)];
  CHECK(counts == std::vector<int>{3, 3, 3});

  const Index n = 20000;
  const auto one = make_blobs(n, {{Eigen::Vector2d(0, 0), 1}}, rng);
  const Eigen::RowVectorXd mean = one.samples.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 4 / std::sqrt(static_cast<double>(n)));

  const auto far = make_blobs(400, {{Eigen::Vector2d(0, 0), 0.1}, {Eigen::Vector2d(10, 0), 0.1}}, rng);
  for (Index i = 0; i < far.size(); ++i) {
    const double d0 = far.samples.row(i).norm();
    const double d1 = (far.samples.row(i) - Eigen::RowVector2d(10, 0)).norm();
    CHECK((d0 < d1 ? 0 : 1) == (*far.labels)[static_cast<std::size_t>(i)]);
  }
  CHECK_THROWS_AS(make_blobs(10, {}, rng), InvalidArgument);
}

TEST_CASE("normalization modes") {
  MatrixXd px(3, 2);
  px << 0, 255, 128, 0, 255, 64;
  const auto z1 = fit_normalization(px, NormalizeMode::kZero1);
  const MatrixXd y = z1.apply(px);
  CHECK(y.minCoeff() == 0.0);
  CHECK(y.maxCoeff() == 1.0);

  Rng rng(3);
  const MatrixXd x = 3 * standard_normal<double>(100, 4, rng).array() + 2;
  const auto m = fit_normalization(x, NormalizeMode::kMinus1To1);
  const MatrixXd ym = m.apply(x);
  CHECK(ym.colwise().minCoeff().isApproxToConstant(-1.0, 1e-12));
  CHECK(ym.colwise().maxCoeff().isApproxToConstant(1.0, 1e-12));
  CHECK((m.invert(ym) - x).cwiseAbs().maxCoeff() < 1e-12);

  const auto s = fit_normalization(x, NormalizeMode::kStandardize);
  const MatrixXd ys = s.apply(x);
  const Eigen::RowVectorXd mean = ys.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-9);
  for (Index j = 0; j < 4; ++j) {
    const double var = (ys.col(j).array() - mean(j)).square().sum() / static_cast<double>(ys.rows());  // population variance
    CHECK(std::abs(std::sqrt(var) - 1) < 1e-9);
  }
}

TEST_CASE("zero-range features map to zero and are flagged") {
  MatrixXd x(3, 2);
  x << 1, 7, 2, 7, 3, 7;
  const auto n = fit_normalization(x, NormalizeMode::kMinus1To1);
  CHECK(n.flagged == std::vector<Index>{1});
  CHECK(n.apply(x).col(1).isZero());
  CHECK(n.apply(x).col(0).maxCoeff() == 1.0);
}

TEST_CASE("fixed range and dataset normalization") {
  MatrixXd px(2, 2);
  px << 0, 51, 102, 255;
  const auto n = fit_normalization(px, NormalizeMode::kMinus1To1, std::make_pair(0.0, 255.0));
  CHECK(n.apply(px)(0, 0) == -1.0);
  CHECK(n.apply(px)(1, 1) == 1.0);
  Rng rng(0);
  const auto d = make_moons(40, 0.1, rng);
  const auto nd = normalize(d, NormalizeMode::kZero1);
  CHECK(nd.data.samples.minCoeff() >= 0.0);
  CHECK(nd.data.samples.maxCoeff() <= 1.0);
  CHECK(*nd.data.labels == *d.labels);
  CHECK(nd.data.test_indices == d.test_indices);
  for (auto mode : {NormalizeMode::kMinus1To1, NormalizeMode::kZero1, NormalizeMode::kStandardize})
    CHECK(normalize_mode_from_string(to_string(mode)) == mode);
}

TEST_CASE("idx: handcrafted image file") {
  const auto path = temp_file("image.idx");
  write_bytes(path, {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 128, 255, 64});
  const Tensor t = load_idx_images(path);
  CHECK(t.shape == std::vector<std::size_t>{1, 2, 2});
  CHECK(t.values == std::vector<double>{0, 128, 255, 64});
  CHECK_THROWS_AS(load_idx_labels(path), FormatError);
}

TEST_CASE("idx: format errors carry byte offsets") {
  const std::vector<std::uint8_t> header_only = {0, 0, 8};
  try {
    parse_idx(header_only);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() <= 3);
  }
  const std::vector<std::uint8_t> bad_type = {0, 0, 9, 1, 0, 0, 0, 1, 5};
  CHECK_THROWS_AS(parse_idx(bad_type), FormatError);
  const std::vector<std::uint8_t> short_payload = {0, 0, 8, 1, 0, 0, 0, 4, 1, 2};
  try {
    parse_idx(short_payload);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 10);  // first missing payload byte
  }
  const std::vector<std::uint8_t> labels = {0, 0, 8, 1, 0, 0, 0, 2, 3, 7};
  CHECK(parse_idx(labels, kIdxLabelMagic).values == std::vector<double>{3, 7});
  CHECK_THROWS_AS(parse_idx(labels, kIdxImageMagic), FormatError);
  CHECK_THROWS_AS(load_idx(temp_file("does_not_exist.idx")), std::exception);
}

TEST_CASE("idx: writer round-trip on random tensors") {
  Rng rng(8);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> extent(1, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rank = 1 + static_cast<std::size_t>(trial % 3);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = extent(rng);
    Tensor t(shape, std::vector<double>(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>())));
    for (auto& v : t.values) v = byte(rng);
    const auto path = temp_file("round_" + std::to_string(trial) + ".idx");
    write_idx(path, t);
    const Tensor back = load_idx(path);
    CHECK(back.shape == t.shape);
    CHECK(back.values == t.values);
  }
  CHECK_THROWS_AS(encode_idx(Tensor({1}, {256.0})), InvalidArgument);
  CHECK_THROWS_AS(encode_idx(Tensor({1}, {1.5})), InvalidArgument);
}
