#pragma once

#include <span>
#include <vector>

#include "recrobust/encoder.hpp"

// Loss and gradient math shared between the SGD loops and the
// finite-difference tests. Training applies exactly these gradients, so a
// finite-difference check of these functions checks the training step.
namespace recrobust::sgd {

double sigmoid(double x);

// log(1 + exp(x)) without overflow.
double softplus(double x);

// ---- BPR (pairwise ranking over a positive item i and a negative j) ----

struct BprTriple {
    std::span<const double> user;       // p_u
    std::span<const double> item_pos;   // q_i
    std::span<const double> item_neg;   // q_j
    double bias_pos = 0.0;              // b_i
    double bias_neg = 0.0;              // b_j
};

struct BprTripleGrad {
    std::vector<double> user;
    std::vector<double> item_pos;
    std::vector<double> item_neg;
    double bias_pos = 0.0;
    double bias_neg = 0.0;
};

// -ln sigma(x_uij) + (l2/2)(|p_u|^2 + |q_i|^2 + |q_j|^2 + b_i^2 + b_j^2)
// with x_uij = (b_i + p_u.q_i) - (b_j + p_u.q_j).
double bpr_triple_loss(const BprTriple& t, double l2);
BprTripleGrad bpr_triple_grad(const BprTriple& t, double l2);

// ---- Logistic regression / factorization machine examples ----

// Binary cross-entropy of sigmoid(z) against label y, stable form.
double logloss(double z, double y);

double lr_raw_score(double w0, std::span<const double> w,
                    std::span<const ActiveFeature> x);

// Linear-time FM interaction term:
// 0.5 * sum_f [ (sum_d v_{d,f} x_d)^2 - sum_d v_{d,f}^2 x_d^2 ].
// v is dim x factors, row-major by dimension.
double fm_pairwise_term(std::span<const double> v, int factors,
                        std::span<const ActiveFeature> x);

double fm_raw_score(double w0, std::span<const double> w,
                    std::span<const double> v, int factors,
                    std::span<const ActiveFeature> x);

// Per-example loss with L2 on the touched parameters (w0, active w_d, and
// for the FM the active v rows), matching what the SGD step regularizes.
double lr_example_loss(double w0, std::span<const double> w,
                       std::span<const ActiveFeature> x, double y, double l2);
double fm_example_loss(double w0, std::span<const double> w,
                       std::span<const double> v, int factors,
                       std::span<const ActiveFeature> x, double y, double l2);

// Gradients aligned with the active features: w[a] is d/dw_{x[a].index},
// v[a * factors + f] is d/dv_{x[a].index, f}.
struct LinearExampleGrad {
    double w0 = 0.0;
    std::vector<double> w;
    std::vector<double> v;
};

LinearExampleGrad lr_example_grad(double w0, std::span<const double> w,
                                  std::span<const ActiveFeature> x, double y,
                                  double l2);
LinearExampleGrad fm_example_grad(double w0, std::span<const double> w,
                                  std::span<const double> v, int factors,
                                  std::span<const ActiveFeature> x, double y,
                                  double l2);

}  // namespace recrobust::sgd
