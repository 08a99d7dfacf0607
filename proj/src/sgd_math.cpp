#include "recrobust/sgd_math.hpp"

#include <cmath>

namespace recrobust::sgd {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sq_norm(std::span<const double> a) { return dot(a, a); }

double bpr_margin(const BprTriple& t) {
    return (t.bias_pos + dot(t.user, t.item_pos)) - (t.bias_neg + dot(t.user, t.item_neg));
}

}  // namespace

double bpr_triple_loss(const BprTriple& t, double l2) {
    const double x = bpr_margin(t);
    return softplus(-x) + 0.5 * l2 *
                              (sq_norm(t.user) + sq_norm(t.item_pos) + sq_norm(t.item_neg) +
                               t.bias_pos * t.bias_pos + t.bias_neg * t.bias_neg);
}

BprTripleGrad bpr_triple_grad(const BprTriple& t, double l2) {
    const std::size_t f = t.user.size();
    const double x = bpr_margin(t);
    const double g = -sigmoid(-x);  // d softplus(-x) / dx

    BprTripleGrad grad;
    grad.user.resize(f);
    grad.item_pos.resize(f);
    grad.item_neg.resize(f);
    for (std::size_t d = 0; d < f; ++d) {
        grad.user[d] = g * (t.item_pos[d] - t.item_neg[d]) + l2 * t.user[d];
        grad.item_pos[d] = g * t.user[d] + l2 * t.item_pos[d];
        grad.item_neg[d] = -g * t.user[d] + l2 * t.item_neg[d];
    }
    grad.bias_pos = g + l2 * t.bias_pos;
    grad.bias_neg = -g + l2 * t.bias_neg;
    return grad;
}

double logloss(double z, double y) { return softplus(-z) + (1.0 - y) * z; }

double lr_raw_score(double w0, std::span<const double> w,
                    std::span<const ActiveFeature> x) {
    double z = w0;
    for (const auto& a : x) z += w[a.index] * a.value;
    return z;
}

double fm_pairwise_term(std::span<const double> v, int factors,
                        std::span<const ActiveFeature> x) {
    double total = 0.0;
    for (int f = 0; f < factors; ++f) {
        double s = 0.0, sq = 0.0;
        for (const auto& a : x) {
            const double t = v[a.index * static_cast<std::size_t>(factors) + f] * a.value;
            s += t;
            sq += t * t;
        }
        total += s * s - sq;
    }
    return 0.5 * total;
}

double fm_raw_score(double w0, std::span<const double> w,
                    std::span<const double> v, int factors,
                    std::span<const ActiveFeature> x) {
    return lr_raw_score(w0, w, x) + fm_pairwise_term(v, factors, x);
}

namespace {

double active_l2(std::span<const double> w, std::span<const ActiveFeature> x) {
    double s = 0.0;
    for (const auto& a : x) s += w[a.index] * w[a.index];
    return s;
}

}  // namespace

double lr_example_loss(double w0, std::span<const double> w,
                       std::span<const ActiveFeature> x, double y, double l2) {
    const double z = lr_raw_score(w0, w, x);
    return logloss(z, y) + 0.5 * l2 * (w0 * w0 + active_l2(w, x));
}

double fm_example_loss(double w0, std::span<const double> w,
                       std::span<const double> v, int factors,
                       std::span<const ActiveFeature> x, double y, double l2) {
    const double z = fm_raw_score(w0, w, v, factors, x);
    double v_l2 = 0.0;
    for (const auto& a : x)
        for (int f = 0; f < factors; ++f) {
            const double t = v[a.index * static_cast<std::size_t>(factors) + f];
            v_l2 += t * t;
        }
    return logloss(z, y) + 0.5 * l2 * (w0 * w0 + active_l2(w, x) + v_l2);
}

LinearExampleGrad lr_example_grad(double w0, std::span<const double> w,
                                  std::span<const ActiveFeature> x, double y,
                                  double l2) {
    const double z = lr_raw_score(w0, w, x);
    const double e = sigmoid(z) - y;  // d logloss / dz
    LinearExampleGrad grad;
    grad.w0 = e + l2 * w0;
    grad.w.resize(x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
        grad.w[a] = e * x[a].value + l2 * w[x[a].index];
    return grad;
}

LinearExampleGrad fm_example_grad(double w0, std::span<const double> w,
                                  std::span<const double> v, int factors,
                                  std::span<const ActiveFeature> x, double y,
                                  double l2) {
    const double z = fm_raw_score(w0, w, v, factors, x);
    const double e = sigmoid(z) - y;

    LinearExampleGrad grad;
    grad.w0 = e + l2 * w0;
    grad.w.resize(x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
        grad.w[a] = e * x[a].value + l2 * w[x[a].index];

    grad.v.resize(x.size() * static_cast<std::size_t>(factors));
    for (int f = 0; f < factors; ++f) {
        double s = 0.0;
        for (const auto& a : x) s += v[a.index * static_cast<std::size_t>(factors) + f] * a.value;
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double vdf = v[x[a].index * static_cast<std::size_t>(factors) + f];
            grad.v[a * static_cast<std::size_t>(factors) + f] =
                e * x[a].value * (s - vdf * x[a].value) + l2 * vdf;
        }
    }
    return grad;
}

}  // namespace recrobust::sgd
