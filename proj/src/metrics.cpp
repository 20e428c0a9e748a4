#include "urbanforge/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "urbanforge/error.hpp"

namespace urbanforge {

namespace {

void check_compatible(std::span<const FeatureVector> a, std::span<const FeatureVector> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::InsufficientSamples, "each feature set needs >= 2 vectors");
  const std::string& id = a.front().extractor_id;
  const std::size_t dim = a.front().values.size();
  for (auto set : {a, b}) {
    for (const auto& f : set) {
      if (f.extractor_id != id || f.values.size() != dim)
        throw Error(ErrorCode::ExtractorMismatch, "feature sets differ in extractor or dimension");
    }
  }
}

// Symmetric PSD square root with negative eigenvalues clamped at zero.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

double normalize_frame(const DepthFrame& f, std::vector<double>& out) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : f.values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) throw Error(ErrorCode::DegenerateFrame, "depth frame has no foreground");
  out.assign(f.values.size(), NAN);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (std::isfinite(f.values[i])) out[i] = hi > lo ? (f.values[i] - lo) / (hi - lo) : 0.0;
  }
  return hi - lo;
}

}  // namespace

FeatureVector default_descriptor(const RgbImage& image) {
  if (image.empty() || image.channels != 3) throw Error(ErrorCode::Shape, "descriptor needs a non-empty RGB image");
  FeatureVector f;
  f.extractor_id = kHistExtractorId;
  f.values.assign(kHistDim, 0.0);
  const int w = image.width, h = image.height;
  const double n = static_cast<double>(image.pixel_count());
  std::vector<double> lum(image.pixel_count());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const auto* p = &image.data[i * 3];
    for (int c = 0; c < 3; ++c) f.values[c * 8 + (p[c] >> 5)] += 1.0 / n;
    lum[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  std::array<double, 8> orient{};
  double total = 0;
  auto L = [&](int x, int y) { return lum[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (L(x + 1, y) - L(x - 1, y));
      const double gy = 0.5 * (L(x, y + 1) - L(x, y - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0) continue;
      const double a = std::atan2(gy, gx) + std::numbers::pi;
      const int bin = std::min(7, static_cast<int>(a / (2 * std::numbers::pi) * 8));
      orient[bin] += mag;
      total += mag;
    }
  }
  if (total > 0) {
    for (int b = 0; b < 8; ++b) f.values[24 + b] = orient[b] / total;
  }
  double norm = 0;
  for (double v : f.values) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : f.values) v /= norm;
  return f;
}

std::vector<FeatureVector> read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open feature file " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string id;
  std::size_t dim = 0;
  if (!(hs >> id >> dim) || dim == 0) throw Error(ErrorCode::Parse, path.string() + ": header must be '<extractor_id> <dim>'");
  std::vector<FeatureVector> out;
  int lineno = 1;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    FeatureVector f;
    f.extractor_id = id;
    for (double v; ls >> v;) f.values.push_back(v);
    if (!ls.eof() || f.values.size() != dim)
      throw Error(ErrorCode::Parse, path.string() + " line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(dim) + " numbers");
    for (double v : f.values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::Parse, path.string() + " line " + std::to_string(lineno) + ": non-finite value");
    }
    out.push_back(std::move(f));
  }
  return out;
}

void write_feature_file(const std::filesystem::path& path, std::span<const FeatureVector> features) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << (features.empty() ? std::string(kHistExtractorId) : features.front().extractor_id) << " "
      << (features.empty() ? 0 : features.front().values.size()) << "\n";
  out.precision(17);
  for (const auto& f : features) {
    for (std::size_t i = 0; i < f.values.size(); ++i) out << (i ? " " : "") << f.values[i];
    out << "\n";
  }
}

double depth_error(std::span<const DepthFrame> pred, std::span<const DepthFrame> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::Shape, "prediction and truth frame counts differ");
  if (pred.empty()) throw Error(ErrorCode::InsufficientSamples, "no depth frames");
  double sum = 0;
  std::vector<double> a, b;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].width != truth[k].width || pred[k].height != truth[k].height ||
        pred[k].values.size() != truth[k].values.size())
      throw Error(ErrorCode::Shape, "depth frame " + std::to_string(k) + " dimensions differ");
    normalize_frame(pred[k], a);
    normalize_frame(truth[k], b);
    double se = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::isnan(a[i]) || std::isnan(b[i])) continue;
      se += (a[i] - b[i]) * (a[i] - b[i]);
      ++n;
    }
    if (n == 0) throw Error(ErrorCode::DegenerateFrame, "depth frame " + std::to_string(k) + " foregrounds do not overlap");
    sum += std::sqrt(se / static_cast<double>(n));
  }
  return sum / static_cast<double>(pred.size());
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.values.size() != b.values.size() || a.extractor_id != b.extractor_id)
    throw Error(ErrorCode::ExtractorMismatch, "features differ in extractor or dimension");
  const Eigen::Map<const Eigen::VectorXd> x(a.values.data(), a.values.size());
  const Eigen::Map<const Eigen::VectorXd> y(b.values.data(), b.values.size());
  const double denom = x.norm() * y.norm();
  return denom > 0 ? x.dot(y) / denom : 0.0;
}

double homogeneity_index(std::span<const FeatureVector> features) {
  if (features.size() < 2) throw Error(ErrorCode::InsufficientSamples, "homogeneity index needs >= 2 images");
  double sum = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = i + 1; j < features.size(); ++j) {
      sum += cosine_similarity(features[i], features[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double homogeneity_index(std::span<const RgbImage> images, const FeatureExtractor& extractor) {
  std::vector<FeatureVector> f;
  f.reserve(images.size());
  for (const auto& img : images) f.push_back(extractor.extract(img));
  return homogeneity_index(f);
}

Eigen::MatrixXd feature_matrix(std::span<const FeatureVector> features) {
  if (features.empty()) return {};
  const std::size_t dim = features.front().values.size();
  Eigen::MatrixXd m(features.size(), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].values.size() != dim || features[i].extractor_id != features.front().extractor_id)
      throw Error(ErrorCode::ExtractorMismatch, "features differ in extractor or dimension");
    m.row(i) = Eigen::Map<const Eigen::RowVectorXd>(features[i].values.data(), dim);
  }
  return m;
}

double fid(std::span<const FeatureVector> a, std::span<const FeatureVector> b) {
  check_compatible(a, b);
  auto stats = [](const Eigen::MatrixXd& x) {
    const Eigen::RowVectorXd mu = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mu;
    return std::pair<Eigen::VectorXd, Eigen::MatrixXd>(mu.transpose(), c.transpose() * c / double(x.rows() - 1));
  };
  const auto [mu_a, cov_a] = stats(feature_matrix(a));
  const auto [mu_b, cov_b] = stats(feature_matrix(b));
  const Eigen::MatrixXd sa = sqrt_psd(cov_a);
  const Eigen::MatrixXd prod = sa * cov_b * sa;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (prod + prod.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, value);
}

double kid_raw(std::span<const FeatureVector> a, std::span<const FeatureVector> b) {
  check_compatible(a, b);
  const Eigen::MatrixXd x = feature_matrix(a);
  const Eigen::MatrixXd y = feature_matrix(b);
  const double d = static_cast<double>(x.cols());
  // Kernel sums accumulated over row blocks so memory stays O(block * n).
  auto kernel_sum = [d](const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    constexpr Eigen::Index kBlock = 256;
    double total = 0;
    for (Eigen::Index r = 0; r < p.rows(); r += kBlock) {
      const Eigen::Index rows = std::min(kBlock, p.rows() - r);
      total += ((p.middleRows(r, rows) * q.transpose()).array() / d + 1.0).cube().sum();
    }
    return total;
  };
  auto diag_sum = [d](const Eigen::MatrixXd& p) { return (p.rowwise().squaredNorm().array() / d + 1.0).cube().sum(); };
  const double m = static_cast<double>(x.rows()), n = static_cast<double>(y.rows());
  const double sxx = (kernel_sum(x, x) - diag_sum(x)) / (m * (m - 1));
  const double syy = (kernel_sum(y, y) - diag_sum(y)) / (n * (n - 1));
  return sxx + syy - 2.0 * kernel_sum(x, y) / (m * n);
}

double kid(std::span<const FeatureVector> a, std::span<const FeatureVector> b) { return std::max(0.0, kid_raw(a, b)); }

double mean_clamped_score(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::InsufficientSamples, "preference score needs >= 1 snapshot");
  double sum = 0;
  for (double s : scores) sum += std::clamp(s, 1.0, 10.0);
  return sum / static_cast<double>(scores.size());
}

double preference_score(std::span<const RgbImage> snapshots, const DesignerConfig& critic) {
  if (snapshots.empty()) throw Error(ErrorCode::InsufficientSamples, "preference score needs >= 1 snapshot");
  const auto scores = score_snapshots(snapshots, critic);
  return mean_clamped_score(scores);
}

std::string reports_to_json(std::span<const MetricReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    arr.push_back({{"metric", r.metric},
                   {"value", r.value},
                   {"counts", r.counts},
                   {"extractor_id", r.extractor_id},
                   {"parameters", r.parameters}});
  }
  return nlohmann::json{{"schema_version", 1}, {"reports", arr}}.dump(2) + "\n";
}

}  // namespace urbanforge
