#include <doctest.h>

#include <fstream>
#include <random>

#include "urbanforge/error.hpp"
#include "urbanforge/metrics.hpp"

#include "support/fixtures.hpp"
#include "support/metric_checks.hpp"
#include "support/oracles.hpp"

using namespace urbanforge;

namespace {

FeatureVector fv(std::vector<double> v, std::string id = "t") { return {std::move(v), std::move(id)}; }

std::vector<std::vector<double>> raw(const std::vector<FeatureVector>& f) {
  std::vector<std::vector<double>> out;
  for (const auto& x : f) out.push_back(x.values);
  return out;
}

RgbImage random_image(std::mt19937_64& rng, int w, int h) {
  RgbImage img(w, h, 3);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

RgbImage rotate90(const RgbImage& img) {
  RgbImage out(img.height, img.width, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
  return out;
}

double norm(const FeatureVector& f) {
  double s = 0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s);
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("default_descriptor: solid color gives one bin per channel") {
  const FeatureVector f = default_descriptor(RgbImage(16, 16, 3, 200));
  CHECK(f.extractor_id == kHistExtractorId);
  REQUIRE(f.values.size() == static_cast<std::size_t>(kHistDim));
  for (int c = 0; c < 3; ++c) {
    int nonzero = 0;
    for (int b = 0; b < 8; ++b) nonzero += f.values[c * 8 + b] != 0.0;
    CHECK(nonzero == 1);
    CHECK(f.values[c * 8 + 200 / 32] > 0);
  }
  for (int b = 24; b < 32; ++b) CHECK(f.values[b] == 0.0);
  CHECK(norm(f) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("default_descriptor: rotation keeps color histograms, output is unit length") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const RgbImage img = random_image(rng, 10 + t, 7 + t);
    const FeatureVector a = default_descriptor(img), b = default_descriptor(rotate90(img));
    for (int k = 0; k < 24; ++k) CHECK(a.values[k] == doctest::Approx(b.values[k]).epsilon(1e-12));
    CHECK(std::abs(norm(a) - 1.0) <= 1e-9);
  }
  CHECK_THROWS_AS(default_descriptor(RgbImage()), Error);
}

TEST_CASE("homogeneity_index examples") {
  std::mt19937_64 rng(1);
  const RgbImage img = random_image(rng, 12, 12);
  const std::vector<RgbImage> same(3, img);
  CHECK(std::abs(homogeneity_index(same, HistogramExtractor{}) - 1.0) <= 1e-9);
  const std::vector<FeatureVector> ortho = {fv({1, 0}), fv({0, 1})};
  CHECK(homogeneity_index(ortho) == doctest::Approx(0.0));
  const std::vector<FeatureVector> three = {fv({1, 0}), fv({1, 0}), fv({0, 1})};
  CHECK(homogeneity_index(three) == doctest::Approx(1.0 / 3.0));
  CHECK(code_of([] { homogeneity_index(std::vector<FeatureVector>{fv({1})}); }) == ErrorCode::InsufficientSamples);
  CHECK(code_of([] { homogeneity_index(std::vector<FeatureVector>{fv({1}), fv({1}, "u")}); }) == ErrorCode::ExtractorMismatch);
}

TEST_CASE("homogeneity_index lies in [-1, 1]; duplicating the list follows the pair-count relation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + t % 7;
    std::vector<FeatureVector> f;
    for (std::size_t i = 0; i < n; ++i) f.push_back(fv({z(rng), z(rng), z(rng)}));
    const double hi = homogeneity_index(f);
    CHECK(hi >= -1.0 - 1e-12);
    CHECK(hi <= 1.0 + 1e-12);
    // With S the sum of pairwise cosines, the doubled list has pair sum 4S + n over n(2n - 1) pairs.
    const double S = hi * n * (n - 1) / 2.0;
    std::vector<FeatureVector> twice = f;
    twice.insert(twice.end(), f.begin(), f.end());
    CHECK(homogeneity_index(twice) == doctest::Approx((4 * S + n) / (n * (2.0 * n - 1))).epsilon(1e-12));
  }
}

TEST_CASE("fid: identity, symmetry and non-negativity") {
  const auto a = checks::gaussian_features(1, 200, {0, 0, 0, 0}, {1, 2, 0.5, 1});
  const auto b = checks::gaussian_features(2, 150, {1, 0, -1, 0}, {1, 1, 1, 3});
  CHECK(fid(a, a) <= 1e-6);
  CHECK(fid(a, b) >= 0);
  CHECK(std::abs(fid(a, b) - fid(b, a)) <= 1e-6);
}

TEST_CASE("fid: synthetic Gaussians match the closed form within 5%") {
  const std::vector<double> zero(4, 0.0), ones(4, 1.0);
  const std::vector<double> mu = {1.0, 2.0, 0.5, 1.0};
  const double v = fid(checks::gaussian_features(11, 10000, zero, ones), checks::gaussian_features(12, 10000, mu, ones));
  CHECK(std::abs(v - 6.25) <= 0.05 * 6.25);

  const std::vector<double> sd1 = {1, 2, 0.5, 1}, sd2 = {2, 1, 1, 0.5};
  const double expect = oracle::frechet_diagonal(Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(1, 4, 0.25, 1),
                                                 Eigen::Vector4d(1, 2, 0.5, 1), Eigen::Vector4d(4, 1, 1, 0.25));
  const double got = fid(checks::gaussian_features(13, 10000, zero, sd1), checks::gaussian_features(14, 10000, mu, sd2));
  CHECK(std::abs(got - expect) <= 0.05 * expect);
}

TEST_CASE("fid and kid: incompatible inputs") {
  const std::vector<FeatureVector> a = {fv({1, 2}), fv({2, 1})};
  const std::vector<FeatureVector> other_id = {fv({1, 2}, "x"), fv({2, 1}, "x")};
  const std::vector<FeatureVector> other_dim = {fv({1, 2, 3}), fv({2, 1, 3})};
  CHECK(code_of([&] { fid(a, other_id); }) == ErrorCode::ExtractorMismatch);
  CHECK(code_of([&] { kid(a, other_dim); }) == ErrorCode::ExtractorMismatch);
  CHECK(code_of([&] { fid(a, std::vector<FeatureVector>{fv({1, 1})}); }) == ErrorCode::InsufficientSamples);
}

TEST_CASE("kid matches an independent loop implementation and is symmetric") {
  const auto a = checks::gaussian_features(21, 300, {0, 0, 0, 0}, {1, 1, 1, 1});
  const auto b = checks::gaussian_features(22, 250, {0.5, 0, 0, 0.5}, {1, 1, 1, 1});
  const double expect = oracle::mmd2_loops(raw(a), raw(b));
  CHECK(kid_raw(a, b) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(kid_raw(a, b) == doctest::Approx(kid_raw(b, a)).epsilon(1e-12));
  CHECK(kid(a, b) == doctest::Approx(kid(b, a)).epsilon(1e-12));
}

TEST_CASE("kid: identical sets give a non-positive raw estimate, reported as zero") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = checks::gaussian_features(seed, 100 + 50 * seed, {0, 1, 0, 1}, {1, 1, 2, 1});
    CHECK(kid_raw(a, a) <= 1e-6);
    CHECK(kid(a, a) == 0.0);
    CHECK(kid_raw(a, a) == doctest::Approx(oracle::mmd2_loops(raw(a), raw(a))).epsilon(1e-9));
  }
}

TEST_CASE("kid: shifted Gaussians at 10k samples are separated") {
  const auto a = checks::gaussian_features(31, 10000, {0, 0, 0, 0}, {1, 1, 1, 1});
  const auto b = checks::gaussian_features(32, 10000, {3, 3, 3, 3}, {1, 1, 1, 1});
  CHECK(kid(a, b) > 0);
}

TEST_CASE("depth_error examples") {
  const DepthFrame t{2, 1, {0, 1}}, p{2, 1, {1, 0}};
  CHECK(depth_error(std::vector<DepthFrame>{t}, std::vector<DepthFrame>{t}) == 0.0);
  CHECK(depth_error(std::vector<DepthFrame>{p}, std::vector<DepthFrame>{t}) == doctest::Approx(1.0));
  CHECK(kDefaultEvalFrames == 100);
  CHECK(kDefaultReferenceImages == 1000);
}

TEST_CASE("depth_error errors") {
  const DepthFrame a{2, 1, {0, 1}}, b{1, 2, {0, 1}}, bg{2, 1, {INFINITY, NAN}};
  CHECK(code_of([&] { depth_error(std::vector<DepthFrame>{a}, std::vector<DepthFrame>{b}); }) == ErrorCode::Shape);
  CHECK(code_of([&] { depth_error(std::vector<DepthFrame>{a, a}, std::vector<DepthFrame>{a}); }) == ErrorCode::Shape);
  CHECK(code_of([&] { depth_error(std::vector<DepthFrame>{bg}, std::vector<DepthFrame>{a}); }) == ErrorCode::DegenerateFrame);
}

TEST_CASE("depth_error is invariant under common affine rescaling") {
  CHECK(checks::depth_affine_deviation(5, 100) <= 1e-9);
}

TEST_CASE("preference score: mean, clamp and mock") {
  CHECK(mean_clamped_score(std::vector<double>{10, 4}) == doctest::Approx(7.0));
  CHECK(mean_clamped_score(std::vector<double>{12, 0}) == doctest::Approx(5.5));
  const std::vector<RgbImage> snaps(4, RgbImage(8, 8, 3));
  CHECK(preference_score(snaps, DesignerConfig{}) == doctest::Approx(7.0));
  CHECK(code_of([] { preference_score(std::vector<RgbImage>{}, DesignerConfig{}); }) == ErrorCode::InsufficientSamples);
}

TEST_CASE("feature files round trip and reject malformed lines") {
  const auto dir = fixture::scratch("features");
  const std::vector<FeatureVector> f = {fv({0.125, -2, 3e-7}, "ext"), fv({1, 2, 3}, "ext")};
  write_feature_file(dir / "f.txt", f);
  const auto back = read_feature_file(dir / "f.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].extractor_id == "ext");
  CHECK(back[0].values == f[0].values);
  std::ofstream(dir / "bad.txt") << "ext 3\n1 2 3\n1 2\n";
  try {
    read_feature_file(dir / "bad.txt");
    FAIL("expected Parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(code_of([&] { read_feature_file(dir / "missing.txt"); }) == ErrorCode::Io);
}

TEST_CASE("reports_to_json carries every field") {
  MetricReport r{"FID", 1.5, {{"generated", 3}, {"reference", 4}}, kHistExtractorId, {{"source", "png"}}};
  const std::string j = reports_to_json(std::span(&r, 1));
  for (const char* s : {"\"FID\"", "1.5", "\"generated\"", "hist32-v1", "\"source\""}) CHECK(j.find(s) != std::string::npos);
}
