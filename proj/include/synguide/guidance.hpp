#ifndef SYNGUIDE_GUIDANCE_HPP
#define SYNGUIDE_GUIDANCE_HPP

#include <cstddef>
#include <string>

#include "synguide/matrix.hpp"
#include "synguide/model.hpp"

namespace synguide {

// Pretrained Guidance: a frozen model's pairwise feature-distance structure
// on a batch is matched by the trainee's.
//
// Real Guidance: the synthetic-batch gradient is projected so that it is at
// most perpendicular to the concurrent real-batch gradient, then mixed with it.

enum class DistanceMetric { kCosine, kEuclidean };
enum class Similarity { kL1, kKL };

std::string to_string(DistanceMetric m);
std::string to_string(Similarity s);
DistanceMetric parse_metric(const std::string& text);
Similarity parse_similarity(const std::string& text);

// n x n pairwise distances with an exactly zero diagonal.
struct DistanceMatrix {
  Matrix values;

  std::size_t n() const { return values.rows(); }
};

struct PgConfig {
  DistanceMetric metric = DistanceMetric::kCosine;
  Similarity similarity = Similarity::kKL;
  double temperature = 0.1;  // KL only
  double lambda3 = 0.1;

  void validate() const;
};

struct RgConfig {
  double lambda1 = 0.0;
  double lambda2 = 1.0;
  // Disabling the projection leaves g_update = lambda1 * g_r + lambda2 * g_f.
  bool project = true;

  void validate() const;
};

// Cosine distance is 1 - cos(f_i, f_j), clamped to [0, 2]; Euclidean is ||f_i - f_j||.
// Requires N >= 2; under cosine every row must have norm > 1e-12.
DistanceMatrix pairwise_distance(const Matrix& features, DistanceMetric metric);

struct PgLoss {
  double loss = 0.0;
  Matrix dloss_dDu;  // n x n, zero diagonal
};

// L1: sum over off-diagonal |Dp - Du|, subgradient 0 at equality.
// KL: per row, distributions over the n - 1 off-diagonal entries from
// softmax(-D / temperature); loss = sum_i KL(q_i || p_i) with q from Du and p from Dp.
PgLoss pg_loss(const DistanceMatrix& dp, const DistanceMatrix& du, Similarity similarity,
               double temperature);

struct PgFeatureGrad {
  double loss = 0.0;  // lambda3 * pg_loss
  Matrix grad_fu;     // N x F_u
};

// f_p is treated as a constant; f_p and f_u may have different widths.
PgFeatureGrad pg_feature_grad(const Matrix& f_p, const Matrix& f_u, const PgConfig& config);

// Chain rule through pairwise_distance: dL/df given dL/dD.
Matrix distance_backward(const Matrix& features, const DistanceMatrix& dist,
                         const Matrix& dloss_dD, DistanceMetric metric);

// g_f - (g_f.g_r / g_r.g_r) g_r when g_f.g_r < 0, otherwise g_f unchanged.
GradientVector project_gradient(const GradientVector& g_f, const GradientVector& g_r);

// lambda1 * g_r + lambda2 * g_f_new
GradientVector combine_gradients(const GradientVector& g_r, const GradientVector& g_f_new,
                                 const RgConfig& config);

}  // namespace synguide

#endif  // SYNGUIDE_GUIDANCE_HPP
