#pragma once

#include <functional>
#include <span>
#include <vector>

#include "preq/distribution.hpp"

namespace preq {

// One expert: a positive weight and a conditional pmf over a finite alphabet
// given the observed prefix.  Weights need not sum to one.
struct Expert {
    double weight = 1.0;
    std::function<std::vector<double>(std::span<const int> prefix)> conditional_pmf;
};

Expert iid_expert(double weight, std::vector<double> pmf);
Expert bernoulli_expert(double weight, double theta);  // alphabet {0,1}

// Normalized maximum weighted likelihood over all strings of one horizon:
// q(y^n) = sup_theta w(theta) p(y^n|theta) / normalizer.
struct ShtarkovTable {
    int alphabet = 0;
    int horizon = 0;
    std::vector<double> probs;   // indexed by base-alphabet encoding of y^n
    double log_normalizer = 0.0; // the minimax regret

    double prob(std::span<const int> string) const;
};

std::size_t string_index(std::span<const int> string, int alphabet);

/// Enumerates alphabet^horizon strings (capped at 10^6).
ShtarkovTable shtarkov_joint(const std::vector<Expert>& experts, int alphabet, int horizon);

/// Conditional next-symbol law of the horizon-(n+1) joint given the prefix.
/// Computed at a single fixed horizon: Shtarkov joints are not
/// prefix-consistent across horizons.
DistPtr shtarkov_predict(const std::vector<Expert>& experts, int alphabet, std::span<const int> prefix);

/// log sup_theta w(theta) p(y^n|theta) for one string.
double log_best_expert(const std::vector<Expert>& experts, int alphabet, std::span<const int> string);

/// Regret of a joint law q at y^n: log sup_theta w p(y^n|theta) - log q(y^n).
double regret(const std::vector<Expert>& experts, int alphabet, std::span<const int> string, double q_prob);

/// Worst-case regret of an arbitrary joint table over all strings.
double max_regret(const std::vector<Expert>& experts, int alphabet, int horizon,
                  std::span<const double> joint);

}  // namespace preq
