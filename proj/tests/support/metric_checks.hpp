#pragma once

// Metric fixtures shared by the metrics unit tests and the acceptance suite.

#include <random>

#include "urbanforge/metrics.hpp"

namespace checks {

using namespace urbanforge;

/// n samples of N(mu, diag(sd^2)) tagged with a synthetic extractor id.
inline std::vector<FeatureVector> gaussian_features(std::uint64_t seed, std::size_t n, const std::vector<double>& mu,
                                                    const std::vector<double>& sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<FeatureVector> out(n);
  for (auto& f : out) {
    f.extractor_id = "gauss";
    for (std::size_t d = 0; d < mu.size(); ++d) f.values.push_back(mu[d] + sd[d] * z(rng));
  }
  return out;
}

/// Random frame with a background border and per-texel depths in [1, 50].
inline DepthFrame random_depth(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> d(1.0, 50.0);
  DepthFrame f{w, h, {}};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.values.push_back(x == 0 || y == 0 ? INFINITY : d(rng));
  return f;
}

/// Largest |DE(a*p+b, a*t+b) - DE(p, t)| over `trials` random positive affine maps applied to
/// both inputs.
inline double depth_affine_deviation(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-500.0, 500.0);
  std::vector<DepthFrame> pred, truth;
  for (int k = 0; k < 4; ++k) {
    pred.push_back(random_depth(rng, 12, 9));
    truth.push_back(random_depth(rng, 12, 9));
  }
  const double base = depth_error(pred, truth);
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const double a = scale(rng), b = shift(rng);
    auto map = [&](std::vector<DepthFrame> fs) {
      for (auto& f : fs)
        for (auto& v : f.values) v = a * v + b;
      return fs;
    };
    worst = std::max(worst, std::abs(depth_error(map(pred), map(truth)) - base));
  }
  return worst;
}

}  // namespace checks
