#pragma once

#include <cstdint>
#include <vector>

#include "flowshap/dataset.hpp"
#include "flowshap/tree.hpp"

namespace flowshap {

struct GbtConfig {
  int n_rounds = 100;
  double eta = 0.1;
  int max_depth = 6;
  double lambda = 1.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  double base_score = 0.5;

  void validate() const;
  bool operator==(const GbtConfig&) const = default;
};

double sigmoid(double x);
double logit(double p);

// max(0, |g| - alpha) with the sign of g.
double soft_threshold(double g, double alpha);

// Optimal leaf output for second-order logistic boosting:
// -soft_threshold(G, alpha) / (H + lambda). The learning rate is applied
// by the trainer when the value is stored.
double gbt_leaf_weight(double grad_sum, double hess_sum, double lambda, double alpha);

// Gain of splitting a node with totals (GL+GR, HL+HR) into (GL,HL)|(GR,HR):
// 0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)) - gamma.
double gbt_split_gain(double gl, double hl, double gr, double hr, double lambda,
                      double gamma);

// Mean logistic loss log(1 + exp(m)) - y*m, computed in the stable branch
// form.
double logistic_loss(double margin, int label);

struct GbtTrainResult {
  Ensemble ensemble;
  // losses[0] is the loss at the base score, losses[r] after round r.
  std::vector<double> losses;
};

// Exact greedy second-order boosting with logistic loss. Candidate
// thresholds are midpoints of consecutive distinct sorted values; a split is
// accepted only with strictly positive gain and both children at or above
// min_child_weight hessian mass. Ties in gain resolve to the lowest feature
// index, then the lowest threshold. Node cover is the hessian sum.
GbtTrainResult train_gbt(const Dataset& ds, const GbtConfig& cfg);

double predict_gbt_proba(const Ensemble& ens, std::span<const double> x);

}  // namespace flowshap
