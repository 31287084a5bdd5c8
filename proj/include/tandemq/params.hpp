#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandemq/rational.hpp"

namespace tandemq {

// Arrival/service rates of a d-station tandem network, normalized so that the
// rates are the jump probabilities of the embedded walk (lambda + sum mu = 1).
// Stability is enforced as lambda < min_i mu_i, the condition under which
// every utilization rho_i is strictly below one.
template <class T>
struct network_params {
    int d = 0;
    T lambda{0};
    std::vector<T> mu; // mu[i-1] holds the rate of station i

    T rho(int i) const { return lambda / mu[i - 1]; } // i in 1..d
    T rho_max() const {
        T r = rho(1);
        for (int i = 2; i <= d; ++i) r = std::max(r, rho(i));
        return r;
    }
    T mu_min() const { return *std::min_element(mu.begin(), mu.end()); }
    T mu_max() const { return *std::max_element(mu.begin(), mu.end()); }

    // Smallest pairwise |mu_i - mu_j|; the closed-form solution needs the
    // rates pairwise distinct, and near-ties are numerically delicate.
    T mu_min_gap() const {
        std::vector<T> s = mu;
        std::sort(s.begin(), s.end());
        T gap = abs_val(T(s[1] - s[0]));
        for (size_t i = 2; i < s.size(); ++i) gap = std::min(gap, abs_val(T(s[i] - s[i - 1])));
        return gap;
    }
    bool mu_distinct() const { return d < 2 || mu_min_gap() > T(0); }
    bool mu_all_equal() const {
        for (int i = 1; i < d; ++i)
            if (mu[i] != mu[0]) return false;
        return true;
    }

    void validate() const {
        if (d < 1) throw validation_error("dimension must be >= 1");
        if ((int)mu.size() != d) throw validation_error("mu must have exactly d entries");
        if (!(lambda > T(0))) throw validation_error("lambda must be positive");
        for (int i = 0; i < d; ++i)
            if (!(mu[i] > T(0))) throw validation_error("mu[" + std::to_string(i + 1) + "] must be positive");
        T total = lambda;
        for (const T& m : mu) total += m;
        if constexpr (is_rational_v<T>) {
            if (total != T(1))
                throw validation_error("rates must sum to 1 exactly (got " + rat_to_string(total) +
                                       "); rescale or pass --normalize");
        } else {
            if (std::abs(to_double(total) - 1.0) > 1e-12)
                throw validation_error("rates must sum to 1 (got " + std::to_string(to_double(total)) +
                                       "); rescale or pass --normalize");
        }
        if (!(lambda < mu_min())) {
            std::string msg = "unstable rates: lambda must be below every service rate";
            if (lambda < mu_max())
                msg += " (lambda is below max mu but not below min mu; such sets are rejected)";
            throw validation_error(msg);
        }
    }

    void normalize() {
        T total = lambda;
        for (const T& m : mu) total += m;
        if (!(total > T(0))) throw validation_error("rates must be positive");
        lambda /= total;
        for (T& m : mu) m /= total;
    }
};

template <class T>
T parse_rate(const nlohmann::json& j) {
    if (j.is_string()) {
        rat r = parse_rat(j.get<std::string>());
        if constexpr (is_rational_v<T>)
            return r;
        else
            return to_double(r);
    }
    if (j.is_number()) {
        if constexpr (is_rational_v<T>)
            return rat(j.get<double>()); // exact value of the binary float
        else
            return j.get<double>();
    }
    throw validation_error("rate entries must be numbers or \"p/q\" strings");
}

template <class T>
network_params<T> params_from_json(const nlohmann::json& j, bool do_normalize = false) {
    if (!j.contains("lambda") || !j.contains("mu"))
        throw validation_error("params JSON needs \"lambda\" and \"mu\"");
    network_params<T> p;
    p.lambda = parse_rate<T>(j.at("lambda"));
    for (const auto& m : j.at("mu")) p.mu.push_back(parse_rate<T>(m));
    p.d = (int)p.mu.size();
    if (do_normalize) p.normalize();
    p.validate();
    return p;
}

inline nlohmann::json params_to_json(const network_params<double>& p) {
    nlohmann::json j;
    j["lambda"] = p.lambda;
    j["mu"] = p.mu;
    return j;
}

inline nlohmann::json params_to_json(const network_params<rat>& p) {
    nlohmann::json j;
    j["lambda"] = rat_to_string(p.lambda);
    auto arr = nlohmann::json::array();
    for (const auto& m : p.mu) arr.push_back(rat_to_string(m));
    j["mu"] = arr;
    return j;
}

inline network_params<double> to_double_params(const network_params<rat>& p) {
    network_params<double> q;
    q.d = p.d;
    q.lambda = to_double(p.lambda);
    for (const auto& m : p.mu) q.mu.push_back(to_double(m));
    return q;
}

} // namespace tandemq
