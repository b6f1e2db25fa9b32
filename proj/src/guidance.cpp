#include "synguide/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace synguide {

std::string to_string(DistanceMetric m) {
  return m == DistanceMetric::kCosine ? "cosine" : "euclidean";
}

std::string to_string(Similarity s) { return s == Similarity::kL1 ? "l1" : "kl"; }

DistanceMetric parse_metric(const std::string& text) {
  if (text == "cosine") return DistanceMetric::kCosine;
  if (text == "euclidean") return DistanceMetric::kEuclidean;
  throw std::invalid_argument("unknown distance metric '" + text +
                              "' (expected cosine or euclidean)");
}

Similarity parse_similarity(const std::string& text) {
  if (text == "l1" || text == "L1") return Similarity::kL1;
  if (text == "kl" || text == "KL") return Similarity::kKL;
  throw std::invalid_argument("unknown similarity '" + text + "' (expected l1 or kl)");
}

void PgConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("pg temperature must be positive");
  if (!(lambda3 >= 0.0)) throw std::invalid_argument("pg lambda3 must be nonnegative");
}

void RgConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw std::invalid_argument("rg lambda1 and lambda2 must be nonnegative");
  }
  if (lambda1 == 0.0 && lambda2 == 0.0) {
    throw std::invalid_argument("rg lambda1 and lambda2 cannot both be zero");
  }
}

namespace {

constexpr double kMinCosineNorm = 1e-12;

std::vector<double> row_norms(const Matrix& f) {
  std::vector<double> out(f.rows());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    double s = 0.0;
    for (double v : f.row(i)) s += v * v;
    out[i] = std::sqrt(s);
  }
  return out;
}

// Log-probabilities over the off-diagonal entries of row i of softmax(-D / t).
// The diagonal slot is left at 0 and never read.
std::vector<double> offdiag_log_softmax(const Matrix& d, std::size_t i, double t) {
  const std::size_t n = d.cols();
  std::vector<double> out(n, 0.0);
  double mx = -INFINITY;
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) mx = std::max(mx, -d(i, j) / t);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) total += std::exp(-d(i, j) / t - mx);
  const double log_total = mx + std::log(total);
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) out[j] = -d(i, j) / t - log_total;
  return out;
}

}  // namespace

DistanceMatrix pairwise_distance(const Matrix& features, DistanceMetric metric) {
  const std::size_t n = features.rows();
  if (n < 2) {
    throw std::invalid_argument("pairwise_distance needs at least 2 rows, got " +
                                std::to_string(n));
  }
  DistanceMatrix out{Matrix(n, n)};
  const std::vector<double> norms =
      metric == DistanceMetric::kCosine ? row_norms(features) : std::vector<double>{};
  if (metric == DistanceMetric::kCosine) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(norms[i] > kMinCosineNorm)) {
        throw std::invalid_argument("pairwise_distance: row " + std::to_string(i) +
                                    " has zero norm under the cosine metric");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto fi = features.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto fj = features.row(j);
      double d = 0.0;
      if (metric == DistanceMetric::kCosine) {
        double ip = 0.0;
        for (std::size_t k = 0; k < fi.size(); ++k) ip += fi[k] * fj[k];
        d = std::clamp(1.0 - ip / (norms[i] * norms[j]), 0.0, 2.0);
      } else {
        double s = 0.0;
        for (std::size_t k = 0; k < fi.size(); ++k) {
          const double diff = fi[k] - fj[k];
          s += diff * diff;
        }
        d = std::sqrt(s);
      }
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  }
  return out;
}

PgLoss pg_loss(const DistanceMatrix& dp, const DistanceMatrix& du, Similarity similarity,
               double temperature) {
  const std::size_t n = du.n();
  if (dp.n() != n || dp.values.cols() != n || du.values.cols() != n) {
    throw std::invalid_argument("pg_loss: distance matrices " + dp.values.shape_string() +
                                " and " + du.values.shape_string() + " do not match");
  }
  PgLoss out{0.0, Matrix(n, n)};
  if (similarity == Similarity::kL1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double diff = du.values(i, j) - dp.values(i, j);
        out.loss += std::abs(diff);
        out.dloss_dDu(i, j) = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      }
    }
    return out;
  }

  if (n < 3) {
    throw std::invalid_argument(
        "pg_loss: KL over a single off-diagonal entry is identically zero; need n >= 3");
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("pg_loss: temperature must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    const auto log_q = offdiag_log_softmax(du.values, i, temperature);
    const auto log_p = offdiag_log_softmax(dp.values, i, temperature);
    double kl = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) kl += std::exp(log_q[j]) * (log_q[j] - log_p[j]);
    out.loss += kl;
    // d KL / d z_j = q_j (log q_j - log p_j - KL) with z = -Du / t.
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dz = std::exp(log_q[j]) * (log_q[j] - log_p[j] - kl);
      out.dloss_dDu(i, j) = -dz / temperature;
    }
  }
  return out;
}

Matrix distance_backward(const Matrix& features, const DistanceMatrix& dist,
                         const Matrix& dloss_dD, DistanceMetric metric) {
  const std::size_t n = features.rows();
  const std::size_t width = features.cols();
  Matrix grad(n, width);
  const std::vector<double> norms =
      metric == DistanceMetric::kCosine ? row_norms(features) : std::vector<double>{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto fi = features.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      // D is symmetric, so both ordered entries flow through the same pair.
      const double g = dloss_dD(i, j) + dloss_dD(j, i);
      if (g == 0.0) continue;
      const auto fj = features.row(j);
      auto gi = grad.row(i);
      auto gj = grad.row(j);
      if (metric == DistanceMetric::kEuclidean) {
        const double d = dist.values(i, j);
        if (d == 0.0) continue;
        for (std::size_t k = 0; k < width; ++k) {
          const double u = g * (fi[k] - fj[k]) / d;
          gi[k] += u;
          gj[k] -= u;
        }
      } else {
        const double ni = norms[i];
        const double nj = norms[j];
        const double cos = 1.0 - dist.values(i, j);
        // dD/df_i = -(f_j / (ni nj) - cos f_i / ni^2), symmetric for f_j.
        for (std::size_t k = 0; k < width; ++k) {
          gi[k] -= g * (fj[k] / (ni * nj) - cos * fi[k] / (ni * ni));
          gj[k] -= g * (fi[k] / (ni * nj) - cos * fj[k] / (nj * nj));
        }
      }
    }
  }
  return grad;
}

PgFeatureGrad pg_feature_grad(const Matrix& f_p, const Matrix& f_u, const PgConfig& config) {
  config.validate();
  if (f_p.rows() != f_u.rows()) {
    throw std::invalid_argument("pg_feature_grad: f_p has " + std::to_string(f_p.rows()) +
                                " rows, f_u has " + std::to_string(f_u.rows()));
  }
  if (config.lambda3 == 0.0) return {0.0, Matrix(f_u.rows(), f_u.cols())};
  const DistanceMatrix dp = pairwise_distance(f_p, config.metric);
  const DistanceMatrix du = pairwise_distance(f_u, config.metric);
  const PgLoss pg = pg_loss(dp, du, config.similarity, config.temperature);
  Matrix grad = distance_backward(f_u, du, pg.dloss_dDu, config.metric);
  for (double& v : grad.values()) v *= config.lambda3;
  return {config.lambda3 * pg.loss, std::move(grad)};
}

GradientVector project_gradient(const GradientVector& g_f, const GradientVector& g_r) {
  if (g_f.empty() || g_r.empty()) {
    throw std::invalid_argument("project_gradient: zero-length gradient");
  }
  const double overlap = dot(g_f, g_r);
  if (!(overlap < 0.0)) return g_f;
  const double scale = overlap / dot(g_r, g_r);
  GradientVector out = g_f;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= scale * g_r.values[i];
  return out;
}

GradientVector combine_gradients(const GradientVector& g_r, const GradientVector& g_f_new,
                                 const RgConfig& config) {
  config.validate();
  if (g_r.size() != g_f_new.size()) {
    throw std::invalid_argument("combine_gradients: lengths " + std::to_string(g_r.size()) +
                                " and " + std::to_string(g_f_new.size()) + " differ");
  }
  GradientVector out;
  out.values.resize(g_r.size());
  for (std::size_t i = 0; i < g_r.size(); ++i) {
    out.values[i] = config.lambda1 * g_r.values[i] + config.lambda2 * g_f_new.values[i];
  }
  return out;
}

}  // namespace synguide
