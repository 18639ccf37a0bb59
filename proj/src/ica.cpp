#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "geeg/artifact.hpp"
#include "geeg/error.hpp"
#include "geeg/filter.hpp"

namespace geeg {
namespace {

using Matrix4Xd = Eigen::Matrix<double, 4, Eigen::Dynamic>;

// W <- (W W^T)^{-1/2} W
Eigen::Matrix4d symmetric_decorrelate(const Eigen::Matrix4d& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(w * w.transpose());
  const Eigen::Vector4d inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

double excess_kurtosis(const Eigen::RowVectorXd& s) {
  const double mean = s.mean();
  const Eigen::RowVectorXd d = s.array() - mean;
  const double m2 = d.array().square().mean();
  const double m4 = d.array().square().square().mean();
  return m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
}

double abs_correlation(const Eigen::RowVectorXd& a, const std::vector<double>& b) {
  const Eigen::Map<const Eigen::RowVectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::RowVectorXd da = a.array() - a.mean();
  const Eigen::RowVectorXd db = bv.array() - bv.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  return den > 0.0 ? std::abs(da.dot(db)) / den : 0.0;
}

// accel_mag with gaps filled from the nearest preceding sample (leading gaps
// take the first available value). Empty when no frame carries accel.
std::vector<double> filled_accel(const Segment& seg) {
  std::vector<double> out(seg.size());
  std::optional<double> last;
  for (const auto& f : seg.frames) {
    if (f.accel_mag) {
      last = f.accel_mag;
      break;
    }
  }
  if (!last) return {};
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg.frames[i].accel_mag) last = seg.frames[i].accel_mag;
    out[i] = *last;
  }
  return out;
}

}  // namespace

Matrix4Xd IcaResult::reconstruct() const {
  Matrix4Xd kept = sources;
  for (auto k : removed) kept.row(static_cast<Eigen::Index>(k)).setZero();
  Matrix4Xd x = mixing * kept;
  x.colwise() += mean;
  return x;
}

IcaResult run_ica(const Segment& seg, const IcaOptions& options) {
  const auto n = static_cast<Eigen::Index>(seg.size());
  if (seg.size() < options.min_samples) {
    throw Error(ErrorCode::TooShortInput,
                "ICA needs >= " + std::to_string(options.min_samples) +
                    " samples, got " + std::to_string(seg.size()));
  }

  Matrix4Xd x(4, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      x(c, i) = seg.frames[static_cast<std::size_t>(i)].eeg[static_cast<std::size_t>(c)];
    }
  }
  IcaResult result;
  result.mean = x.rowwise().mean();
  const Matrix4Xd centered = x.colwise() - result.mean;

  const Eigen::Matrix4d cov = centered * centered.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(cov);
  const Eigen::Vector4d eig = es.eigenvalues();
  if (!(eig.minCoeff() > 1e-12 * std::max(eig.maxCoeff(), 1e-300))) {
    throw Error(ErrorCode::DegenerateInput, "channel covariance is rank deficient");
  }
  const Eigen::Matrix4d whitening =
      eig.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const Matrix4Xd z = whitening * centered;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix4d w;
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) w(r, c) = normal(rng);
  }
  w = symmetric_decorrelate(w);

  bool converged = false;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Matrix4Xd g = (w * z).array().tanh().matrix();
    const Eigen::Vector4d g_prime_mean =
        (1.0 - g.array().square()).matrix().rowwise().mean();
    Eigen::Matrix4d next = g * z.transpose() * inv_n - g_prime_mean.asDiagonal() * w;
    next = symmetric_decorrelate(next);
    const double change =
        ((next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = next;
    result.iterations = it;
    if (change < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::IcaNotConverged,
                "FastICA did not converge in " + std::to_string(options.max_iterations) +
                    " iterations");
  }

  result.unmixing = w * whitening;
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(result.unmixing);
  const auto sv = svd.singularValues();
  if (!(sv(3) > 0.0) || sv(0) / sv(3) >= 1e8) {
    throw Error(ErrorCode::DegenerateInput, "unmixing matrix is ill-conditioned");
  }
  result.mixing = result.unmixing.inverse();
  result.sources = result.unmixing * centered;

  const auto accel = filled_accel(seg);
  const auto lowpass = design_lowpass(options.low_freq_hz, 4, seg.sample_rate);
  const auto tp9 = index(Channel::TP9), af7 = index(Channel::AF7);
  const auto af8 = index(Channel::AF8), tp10 = index(Channel::TP10);

  for (std::size_t k = 0; k < 4; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const Eigen::RowVectorXd s = result.sources.row(row);
    ComponentAssessment a;
    a.index = k;
    a.kurtosis = excess_kurtosis(s);
    if (!accel.empty()) a.accel_correlation = abs_correlation(s, accel);

    const std::vector<double> sv_data(s.data(), s.data() + s.size());
    const auto low = apply_zero_phase(lowpass, sv_data);
    double low_power = 0.0, total_power = 0.0;
    for (std::size_t i = 0; i < sv_data.size(); ++i) {
      low_power += low[i] * low[i];
      total_power += sv_data[i] * sv_data[i];
    }
    a.low_freq_fraction = total_power > 0.0 ? low_power / total_power : 0.0;

    const auto col = result.mixing.col(row).cwiseAbs();
    const double frontal = std::min(col(static_cast<Eigen::Index>(af7)),
                                    col(static_cast<Eigen::Index>(af8)));
    const double temporal = std::max(col(static_cast<Eigen::Index>(tp9)),
                                     col(static_cast<Eigen::Index>(tp10)));
    a.frontal_ratio = temporal > 0.0 ? frontal / temporal : HUGE_VAL;

    const bool heavy_tailed = std::abs(a.kurtosis) > options.kurtosis_threshold;
    const bool motion = a.accel_correlation &&
                        *a.accel_correlation > options.accel_correlation_threshold;
    const bool blink = a.low_freq_fraction > options.low_freq_fraction &&
                       a.frontal_ratio > options.frontal_ratio;
    if (heavy_tailed && (motion || blink)) {
      a.removed = true;
      a.criterion = motion ? "motion" : "blink";
      result.removed.push_back(k);
    }
    result.assessments.push_back(std::move(a));
  }
  return result;
}

Segment apply_ica(const Segment& seg, const IcaResult& result) {
  const auto x = result.reconstruct();
  if (static_cast<std::size_t>(x.cols()) != seg.size()) {
    throw Error(ErrorCode::ShapeMismatch, "ICA result does not match segment length");
  }
  Segment out = seg;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      out.frames[i].eeg[c] = x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

}  // namespace geeg
