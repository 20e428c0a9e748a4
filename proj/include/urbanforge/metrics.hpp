#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "urbanforge/design.hpp"
#include "urbanforge/image.hpp"

namespace urbanforge {

inline constexpr const char* kHistExtractorId = "hist32-v1";
inline constexpr int kHistDim = 32;
inline constexpr int kDefaultEvalFrames = 100;
inline constexpr int kDefaultReferenceImages = 1000;

struct FeatureVector {
  std::vector<double> values;
  std::string extractor_id;
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual FeatureVector extract(const RgbImage& image) const = 0;
};

/// 8-bin histogram per RGB channel plus an 8-bin magnitude-weighted gradient-orientation
/// histogram of luminance, L2-normalized.
FeatureVector default_descriptor(const RgbImage& image);

class HistogramExtractor final : public FeatureExtractor {
 public:
  std::string id() const override { return kHistExtractorId; }
  FeatureVector extract(const RgbImage& image) const override { return default_descriptor(image); }
};

/// Feature file: a header line "<extractor_id> <dim>" then one space-separated vector per line.
std::vector<FeatureVector> read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, std::span<const FeatureVector> features);

/// Depth frame in any unit; non-finite values are background.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

/// Mean over frames of the RMSE between per-frame min-max normalized depths over the
/// intersection of foregrounds.
double depth_error(std::span<const DepthFrame> pred, std::span<const DepthFrame> truth);

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);
/// Mean pairwise cosine similarity.
double homogeneity_index(std::span<const FeatureVector> features);
double homogeneity_index(std::span<const RgbImage> images, const FeatureExtractor& extractor);

/// Frechet distance between Gaussian fits of the two sets.
double fid(std::span<const FeatureVector> a, std::span<const FeatureVector> b);
/// Unbiased full-batch MMD^2 with kernel (x.y / d + 1)^3, before clamping.
double kid_raw(std::span<const FeatureVector> a, std::span<const FeatureVector> b);
/// kid_raw clamped at 0.
double kid(std::span<const FeatureVector> a, std::span<const FeatureVector> b);

/// Mean of critic scores clamped to [1, 10].
double preference_score(std::span<const RgbImage> snapshots, const DesignerConfig& critic);
double mean_clamped_score(std::span<const double> scores);

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::map<std::string, std::size_t> counts;
  std::string extractor_id;
  std::map<std::string, std::string> parameters;
};

std::string reports_to_json(std::span<const MetricReport> reports);

/// Stacks feature vectors as rows, checking a shared extractor and dimension.
Eigen::MatrixXd feature_matrix(std::span<const FeatureVector> features);

}  // namespace urbanforge
