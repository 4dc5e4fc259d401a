#include "artikit/fusion_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace artikit {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " is not finite");
}

}  // namespace

FeatureMatrix matmul(const FeatureMatrix& a, const FeatureMatrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions differ");
    FeatureMatrix out(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t k = 0; k < a.cols; ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
        }
    return out;
}

FeatureMatrix partwise_attention(const FeatureMatrix& v_art, const FeatureMatrix& v_geo,
                                 const std::vector<int>& part_ids, const AttentionWeights& w) {
    require(v_art.rows == v_geo.rows, "attention: feature row counts differ");
    require(part_ids.size() == v_art.rows, "attention: one part id per row required");
    require(w.w_q.rows == v_art.cols, "attention: W_Q rows must match C_art");
    require(w.w_k.rows == v_geo.cols, "attention: W_K rows must match C_geo");
    require(w.w_v.rows == v_geo.cols, "attention: W_V rows must match C_geo");
    const size_t d = w.head_dim();
    require(d > 0 && w.w_k.cols == d && w.w_v.cols == d && w.w_o.rows == d,
            "attention: head widths differ");
    require(w.w_o.cols == v_art.cols, "attention: W_O cols must match C_art");

    FeatureMatrix q = matmul(v_art, w.w_q);
    FeatureMatrix k = matmul(v_geo, w.w_k);
    FeatureMatrix v = matmul(v_geo, w.w_v);

    std::map<int, std::vector<size_t>> part_rows;
    for (size_t r = 0; r < part_ids.size(); ++r) part_rows[part_ids[r]].push_back(r);

    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));
    FeatureMatrix out(v_art.rows, v_art.cols);
    std::vector<double> scores;
    std::vector<double> pooled(d);
    for (size_t i = 0; i < v_art.rows; ++i) {
        const std::vector<size_t>& keys = part_rows[part_ids[i]];
        // keys always contains row i itself since queries and keys share rows

        scores.resize(keys.size());
        double row_max = -std::numeric_limits<double>::infinity();
        for (size_t n = 0; n < keys.size(); ++n) {
            double s = 0.0;
            for (size_t c = 0; c < d; ++c) s += q.at(i, c) * k.at(keys[n], c);
            scores[n] = s * inv_sqrt_d;
            row_max = std::max(row_max, scores[n]);
        }
        double denom = 0.0;
        for (double& s : scores) {
            s = std::exp(s - row_max);
            denom += s;
        }

        std::fill(pooled.begin(), pooled.end(), 0.0);
        for (size_t n = 0; n < keys.size(); ++n) {
            double weight = scores[n] / denom;
            for (size_t c = 0; c < d; ++c) pooled[c] += weight * v.at(keys[n], c);
        }
        for (size_t c = 0; c < v_art.cols; ++c) {
            double s = 0.0;
            for (size_t h = 0; h < d; ++h) s += pooled[h] * w.w_o.at(h, c);
            out.at(i, c) = s + v_art.at(i, c);  // residual
        }
    }
    return out;
}

FeatureMatrix fuse_concat(const FeatureMatrix& v_geo, const FeatureMatrix& f_art) {
    require(v_geo.rows == f_art.rows, "fuse_concat: row counts differ");
    FeatureMatrix out(v_geo.rows, v_geo.cols + f_art.cols);
    for (size_t r = 0; r < out.rows; ++r) {
        std::copy(v_geo.row(r).begin(), v_geo.row(r).end(), out.row(r).begin());
        std::copy(f_art.row(r).begin(), f_art.row(r).end(),
                  out.row(r).begin() + std::ptrdiff_t(v_geo.cols));
    }
    return out;
}

VaeLossTerms vae_loss(const std::vector<double>& occ_pred, const std::vector<uint8_t>& occ_true,
                      const FeatureMatrix& art_pred, const FeatureMatrix& art_true,
                      const std::vector<uint8_t>& movable, const std::vector<double>& mu,
                      const std::vector<double>& sigma, double lambda1, double lambda2) {
    require(occ_pred.size() == occ_true.size() && !occ_pred.empty(),
            "vae_loss: occupancy shapes differ");
    require(art_pred.rows == art_true.rows && art_pred.cols == art_true.cols,
            "vae_loss: articulation shapes differ");
    require(movable.size() == art_pred.rows, "vae_loss: one movable flag per articulation row");
    require(mu.size() == sigma.size() && !mu.empty(), "vae_loss: posterior shapes differ");
    require_finite(occ_pred, "vae_loss: occ_pred");
    require_finite(art_pred.data, "vae_loss: art_pred");
    require_finite(art_true.data, "vae_loss: art_true");
    require_finite(mu, "vae_loss: mu");
    require_finite(sigma, "vae_loss: sigma");
    for (double s : sigma) require(s > 0.0, "vae_loss: sigma must be positive");

    constexpr double kLogClamp = 1e-7;
    VaeLossTerms out;

    double geo = 0.0;
    for (size_t n = 0; n < occ_pred.size(); ++n) {
        double p = occ_pred[n];
        double y = occ_true[n] ? 1.0 : 0.0;
        geo -= y * std::log(std::max(p, kLogClamp)) +
               (1.0 - y) * std::log(std::max(1.0 - p, kLogClamp));
    }
    out.geo = geo / double(occ_pred.size());

    double art = 0.0;
    size_t movable_rows = 0;
    for (size_t r = 0; r < art_pred.rows; ++r) {
        if (!movable[r]) continue;
        ++movable_rows;
        for (size_t c = 0; c < art_pred.cols; ++c) {
            double e = art_pred.at(r, c) - art_true.at(r, c);
            art += e * e;
        }
    }
    out.art = movable_rows == 0 ? 0.0 : art / double(movable_rows * art_pred.cols);

    double kl = 0.0;
    for (size_t n = 0; n < mu.size(); ++n) {
        double s2 = sigma[n] * sigma[n];
        kl += 0.5 * (mu[n] * mu[n] + s2 - std::log(s2) - 1.0);
    }
    out.kl = kl / double(mu.size());

    out.total = out.geo + lambda1 * out.art + lambda2 * out.kl;
    return out;
}

std::vector<double> flow_interpolate(const std::vector<double>& z0, const std::vector<double>& z1,
                                     double t) {
    require(z0.size() == z1.size(), "flow_interpolate: shapes differ");
    require(t >= 0.0 && t <= 1.0, "flow_interpolate: t must lie in [0,1]");
    if (t == 0.0) return z0;
    if (t == 1.0) return z1;
    std::vector<double> out(z0.size());
    for (size_t n = 0; n < z0.size(); ++n) out[n] = (1.0 - t) * z0[n] + t * z1[n];
    return out;
}

double flow_matching_loss(const std::vector<double>& v_pred, const std::vector<double>& z0,
                          const std::vector<double>& z1) {
    require(v_pred.size() == z0.size() && z0.size() == z1.size() && !z0.empty(),
            "flow_matching_loss: shapes differ");
    double sum = 0.0;
    for (size_t n = 0; n < v_pred.size(); ++n) {
        double e = v_pred[n] - (z1[n] - z0[n]);
        sum += e * e;
    }
    return sum / double(v_pred.size());
}

namespace {

std::vector<double> eval_field(const VelocityField& field, const std::vector<double>& z,
                               double t) {
    std::vector<double> v = field(z, t);
    if (v.size() != z.size())
        throw std::runtime_error("integrate_flow: field changed the state dimension");
    for (double x : v)
        if (!std::isfinite(x)) throw std::runtime_error("integrate_flow: field output not finite");
    return v;
}

std::vector<double> heun_step(const VelocityField& field, const std::vector<double>& z, double t,
                              double h) {
    std::vector<double> k1 = eval_field(field, z, t);
    std::vector<double> zp(z.size());
    for (size_t n = 0; n < z.size(); ++n) zp[n] = z[n] + h * k1[n];
    std::vector<double> k2 = eval_field(field, zp, t + h);
    std::vector<double> out(z.size());
    for (size_t n = 0; n < z.size(); ++n) out[n] = z[n] + 0.5 * h * (k1[n] + k2[n]);
    return out;
}

}  // namespace

std::vector<double> integrate_flow(const VelocityField& field, const std::vector<double>& z0,
                                   int steps, OdeMethod method) {
    require(steps >= 1, "integrate_flow: steps must be >= 1");
    require_finite(z0, "integrate_flow: z0");

    std::vector<double> z = z0;
    if (method == OdeMethod::Euler) {
        const double h = 1.0 / double(steps);
        for (int n = 0; n < steps; ++n) {
            double t = double(n) / double(steps);
            std::vector<double> k = eval_field(field, z, t);
            for (size_t c = 0; c < z.size(); ++c) z[c] += h * k[c];
        }
        return z;
    }
    if (method == OdeMethod::Heun) {
        const double h = 1.0 / double(steps);
        for (int n = 0; n < steps; ++n) z = heun_step(field, z, double(n) / double(steps), h);
        return z;
    }

    // Step doubling: one full step against two half steps, absolute
    // per-component tolerance.
    constexpr double kTol = 1e-6;
    constexpr double kMinStep = 1e-9;
    double t = 0.0;
    double h = 1.0 / double(steps);
    while (t < 1.0 - 1e-15) {
        h = std::min(h, 1.0 - t);
        if (h < kMinStep) throw std::runtime_error("integrate_flow: adaptive step underflow");

        std::vector<double> full = heun_step(field, z, t, h);
        std::vector<double> half = heun_step(field, z, t, 0.5 * h);
        half = heun_step(field, half, t + 0.5 * h, 0.5 * h);

        double err = 0.0;
        for (size_t c = 0; c < z.size(); ++c) err = std::max(err, std::abs(full[c] - half[c]));

        if (err <= kTol) {
            z = std::move(half);
            t += h;
            double grow = err == 0.0 ? 2.0 : std::min(2.0, 0.9 * std::cbrt(kTol / err));
            h *= std::max(1.0, grow);
        } else {
            h *= std::max(0.1, 0.9 * std::cbrt(kTol / err));
        }
    }
    return z;
}

}  // namespace artikit
