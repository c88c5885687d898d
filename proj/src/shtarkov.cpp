#include "preq/shtarkov.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace preq {

namespace {

constexpr std::size_t kEnumerationCap = 1000000;

void check_instance(const std::vector<Expert>& experts, int alphabet, int horizon) {
    if (experts.empty()) throw std::invalid_argument("shtarkov: need at least one expert");
    if (alphabet < 2) throw std::invalid_argument("shtarkov: alphabet size must be >= 2");
    if (horizon < 1) throw std::invalid_argument("shtarkov: horizon must be >= 1");
    for (const auto& e : experts)
        if (!(e.weight > 0.0)) throw std::invalid_argument("shtarkov: expert weights must be positive");
    double strings = 1.0;
    for (int t = 0; t < horizon; ++t) {
        strings *= alphabet;
        if (strings > static_cast<double>(kEnumerationCap))
            throw std::invalid_argument("shtarkov: alphabet^horizon exceeds the enumeration cap of 10^6");
    }
}

void decode(std::size_t index, int alphabet, int horizon, std::vector<int>& out) {
    out.resize(static_cast<std::size_t>(horizon));
    for (int t = horizon - 1; t >= 0; --t) {
        out[static_cast<std::size_t>(t)] = static_cast<int>(index % static_cast<std::size_t>(alphabet));
        index /= static_cast<std::size_t>(alphabet);
    }
}

double joint_prob(const Expert& expert, int alphabet, std::span<const int> string) {
    double p = 1.0;
    for (std::size_t t = 0; t < string.size(); ++t) {
        const auto pmf = expert.conditional_pmf(string.subspan(0, t));
        if (pmf.size() != static_cast<std::size_t>(alphabet))
            throw std::invalid_argument("shtarkov: expert pmf size does not match the alphabet");
        p *= pmf[static_cast<std::size_t>(string[t])];
    }
    return p;
}

}  // namespace

Expert iid_expert(double weight, std::vector<double> pmf) {
    double total = 0.0;
    for (const double p : pmf) {
        if (!(p >= 0.0)) throw std::invalid_argument("iid_expert: pmf entries must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("iid_expert: pmf must sum to 1");
    return {weight, [pmf = std::move(pmf)](std::span<const int>) { return pmf; }};
}

Expert bernoulli_expert(double weight, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("bernoulli_expert: theta must lie in [0,1]");
    return iid_expert(weight, {1.0 - theta, theta});
}

std::size_t string_index(std::span<const int> string, int alphabet) {
    std::size_t index = 0;
    for (const int s : string) {
        if (s < 0 || s >= alphabet) throw std::invalid_argument("string_index: symbol outside the alphabet");
        index = index * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(s);
    }
    return index;
}

double ShtarkovTable::prob(std::span<const int> string) const {
    if (string.size() != static_cast<std::size_t>(horizon))
        throw std::invalid_argument("ShtarkovTable::prob: string length must equal the horizon");
    return probs[string_index(string, alphabet)];
}

double log_best_expert(const std::vector<Expert>& experts, int alphabet, std::span<const int> string) {
    double best = 0.0;
    bool first = true;
    for (const auto& e : experts) {
        const double v = e.weight * joint_prob(e, alphabet, string);
        if (first || v > best) {
            best = v;
            first = false;
        }
    }
    return std::log(best);
}

ShtarkovTable shtarkov_joint(const std::vector<Expert>& experts, int alphabet, int horizon) {
    check_instance(experts, alphabet, horizon);
    std::size_t count = 1;
    for (int t = 0; t < horizon; ++t) count *= static_cast<std::size_t>(alphabet);

    ShtarkovTable table;
    table.alphabet = alphabet;
    table.horizon = horizon;
    table.probs.resize(count);

    std::vector<int> string;
    double normalizer = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        decode(i, alphabet, horizon, string);
        double best = 0.0;
        for (const auto& e : experts) best = std::max(best, e.weight * joint_prob(e, alphabet, string));
        table.probs[i] = best;
        normalizer += best;
    }
    if (!(normalizer > 0.0)) throw std::runtime_error("shtarkov_joint: all strings have zero weighted likelihood");
    for (auto& p : table.probs) p /= normalizer;
    table.log_normalizer = std::log(normalizer);
    return table;
}

DistPtr shtarkov_predict(const std::vector<Expert>& experts, int alphabet, std::span<const int> prefix) {
    const int horizon = static_cast<int>(prefix.size()) + 1;
    const ShtarkovTable table = shtarkov_joint(experts, alphabet, horizon);

    std::vector<int> string(prefix.begin(), prefix.end());
    string.push_back(0);
    std::vector<double> masses(static_cast<std::size_t>(alphabet));
    double total = 0.0;
    for (int a = 0; a < alphabet; ++a) {
        string.back() = a;
        masses[static_cast<std::size_t>(a)] = table.prob(string);
        total += masses[static_cast<std::size_t>(a)];
    }
    if (!(total > 0.0)) throw std::runtime_error("shtarkov_predict: observed prefix has zero joint mass");

    std::vector<double> points(static_cast<std::size_t>(alphabet));
    for (int a = 0; a < alphabet; ++a) points[static_cast<std::size_t>(a)] = a;
    return std::make_shared<DiscreteDistribution>(std::move(points), std::move(masses));
}

double regret(const std::vector<Expert>& experts, int alphabet, std::span<const int> string, double q_prob) {
    if (!(q_prob > 0.0)) return std::numeric_limits<double>::infinity();
    return log_best_expert(experts, alphabet, string) - std::log(q_prob);
}

double max_regret(const std::vector<Expert>& experts, int alphabet, int horizon,
                  std::span<const double> joint) {
    check_instance(experts, alphabet, horizon);
    std::size_t count = 1;
    for (int t = 0; t < horizon; ++t) count *= static_cast<std::size_t>(alphabet);
    if (joint.size() != count) throw std::invalid_argument("max_regret: joint table size mismatch");

    double worst = -std::numeric_limits<double>::infinity();
    std::vector<int> string;
    for (std::size_t i = 0; i < count; ++i) {
        decode(i, alphabet, horizon, string);
        worst = std::max(worst, regret(experts, alphabet, string, joint[i]));
    }
    return worst;
}

}  // namespace preq
