#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace artikit {

// Dense row-major matrix of per-voxel features; rows follow the companion
// grid's cell order.
struct FeatureMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    std::span<double> row(size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const FeatureMatrix& o) const = default;
};

FeatureMatrix matmul(const FeatureMatrix& a, const FeatureMatrix& b);

// Single-head projection weights; supplied by the caller, never learned here.
struct AttentionWeights {
    FeatureMatrix w_q;  // C_art x d
    FeatureMatrix w_k;  // C_geo x d
    FeatureMatrix w_v;  // C_geo x d
    FeatureMatrix w_o;  // d x C_art

    size_t head_dim() const { return w_q.cols; }
};

// Part-wise cross attention with residual: queries from the articulation
// features, keys/values from the geometric features, the softmax masked to
// rows sharing the query's part id. Row-max subtraction keeps the softmax
// stable for large logits. Output has v_art's shape.
FeatureMatrix partwise_attention(const FeatureMatrix& v_art, const FeatureMatrix& v_geo,
                                 const std::vector<int>& part_ids, const AttentionWeights& w);

// Channel-wise concat [v_geo | f_art]; rows must align.
FeatureMatrix fuse_concat(const FeatureMatrix& v_geo, const FeatureMatrix& f_art);

inline constexpr double kDefaultLambda1 = 1.0;  // articulation term weight
inline constexpr double kDefaultLambda2 = 0.5;  // KL term weight

struct VaeLossTerms {
    double total = 0.0;
    double geo = 0.0;  // occupancy reconstruction (mean BCE)
    double art = 0.0;  // articulation channels (MSE over movable-part cells)
    double kl = 0.0;   // posterior regularization
};

// total = geo + lambda1 * art + lambda2 * kl. `movable` flags the rows of
// art_pred/art_true that belong to movable (non-root) parts; root cells are
// excluded from the articulation term. Log arguments are clamped at 1e-7, so
// perfect predictions give exactly zero. Reductions are sequential in row
// order for bit reproducibility.
VaeLossTerms vae_loss(const std::vector<double>& occ_pred, const std::vector<uint8_t>& occ_true,
                      const FeatureMatrix& art_pred, const FeatureMatrix& art_true,
                      const std::vector<uint8_t>& movable, const std::vector<double>& mu,
                      const std::vector<double>& sigma, double lambda1 = kDefaultLambda1,
                      double lambda2 = kDefaultLambda2);

// Straight-path interpolation (1-t) z0 + t z1; endpoints reproduce the
// inputs bitwise. t must lie in [0,1].
std::vector<double> flow_interpolate(const std::vector<double>& z0, const std::vector<double>& z1,
                                     double t);

// Mean squared error between the predicted velocity and the straight-path
// target z1 - z0.
double flow_matching_loss(const std::vector<double>& v_pred, const std::vector<double>& z0,
                          const std::vector<double>& z1);

enum class OdeMethod { Euler, Heun, HeunAdaptive };

using VelocityField = std::function<std::vector<double>(const std::vector<double>&, double)>;

// Integrates dz/dt = field(z, t) from t = 0 to t = 1. Euler and Heun use
// `steps` fixed steps; HeunAdaptive starts from 1/steps and doubles/halves
// by step-doubling error control at 1e-6 absolute tolerance per component,
// failing below step size 1e-9.
std::vector<double> integrate_flow(const VelocityField& field, const std::vector<double>& z0,
                                   int steps, OdeMethod method);

}  // namespace artikit
