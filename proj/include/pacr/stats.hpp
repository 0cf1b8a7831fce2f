#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace pacr::stats {

enum class BudgetMode { LemmaOnly, BottomUp, TopDown };

inline const char* mode_name(BudgetMode m) {
    switch (m) {
        case BudgetMode::LemmaOnly: return "lemma";
        case BudgetMode::BottomUp: return "bottom-up";
        case BudgetMode::TopDown: return "top-down";
    }
    return "?";
}

namespace detail {

inline void check_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error(std::string(what) + " must lie in (0, 1)");
}

inline void check_positive_epsilon(double eps) {
    // Degenerate eps >= 1 is admitted so that closed-form spot checks such
    // as ln(e)/1 = 1 stay expressible; eps <= 0 has no finite bound.
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::domain_error("epsilon must be positive");
}

// ceil() that forgives floating-point noise: a value within 1e-9 (relative)
// above an integer rounds down to that integer.
inline std::uint64_t ceil_count(double v) {
    if (!std::isfinite(v) || v > 9.0e18) throw std::domain_error("sample count overflows");
    if (v <= 0.0) return 0;
    const double fl = std::floor(v);
    if (v - fl <= 1e-9 * std::max(1.0, v)) return static_cast<std::uint64_t>(fl);
    return static_cast<std::uint64_t>(fl) + 1;
}

}  // namespace detail

/// m = ceil(ln(|P| / delta) / epsilon): enough i.i.d. samples that, with
/// probability >= 1 - delta, every proposal passing all of them has failure
/// probability <= epsilon.
inline std::uint64_t sample_complexity_lemma(std::uint64_t class_size, double epsilon, double delta) {
    if (class_size < 1) throw std::domain_error("class size must be at least 1");
    detail::check_positive_epsilon(epsilon);
    detail::check_probability(delta, "delta");
    return detail::ceil_count(std::log(static_cast<double>(class_size) / delta) / epsilon);
}

/// m = ceil(ln(|P| k_max / delta) * 2 k_max / epsilon).
inline std::uint64_t sample_complexity_bottomup(std::uint64_t class_size, std::uint64_t k_max, double epsilon,
                                                double delta) {
    if (class_size < 1) throw std::domain_error("class size must be at least 1");
    if (k_max < 1) throw std::domain_error("k_max must be at least 1");
    detail::check_positive_epsilon(epsilon);
    detail::check_probability(delta, "delta");
    const double k = static_cast<double>(k_max);
    return detail::ceil_count(std::log(static_cast<double>(class_size) * k / delta) * 2.0 * k / epsilon);
}

/// m = ceil(ln(|P| k_max / delta) * k_max / epsilon).
inline std::uint64_t sample_complexity_topdown(std::uint64_t class_size, std::uint64_t k_max, double epsilon,
                                               double delta) {
    if (class_size < 1) throw std::domain_error("class size must be at least 1");
    if (k_max < 1) throw std::domain_error("k_max must be at least 1");
    detail::check_positive_epsilon(epsilon);
    detail::check_probability(delta, "delta");
    const double k = static_cast<double>(k_max);
    return detail::ceil_count(std::log(static_cast<double>(class_size) * k / delta) * k / epsilon);
}

/// The precision parameters that drive every critic in a run.
struct PrecisionBudget {
    double epsilon = 0.1;
    double delta = 0.05;
    std::uint64_t k_max = 1;
    std::uint64_t class_size = 1;
    std::uint64_t m = 0;
    double per_vertex_epsilon = 0.0;
    double per_vertex_delta = 0.0;
    BudgetMode mode = BudgetMode::LemmaOnly;
};

/// Builds a budget whose m is exactly the governing formula for `mode`.
/// Per-step budgets follow the theorems: eps/(2 k_max) bottom-up,
/// eps/k_max top-down, delta/k_max in both.
inline PrecisionBudget make_budget(BudgetMode mode, std::uint64_t class_size, double epsilon, double delta,
                                   std::uint64_t k_max = 1) {
    detail::check_probability(epsilon, "epsilon");
    PrecisionBudget b;
    b.epsilon = epsilon;
    b.delta = delta;
    b.k_max = k_max;
    b.class_size = class_size;
    b.mode = mode;
    switch (mode) {
        case BudgetMode::LemmaOnly:
            b.m = sample_complexity_lemma(class_size, epsilon, delta);
            b.per_vertex_epsilon = epsilon;
            b.per_vertex_delta = delta;
            break;
        case BudgetMode::BottomUp:
            b.m = sample_complexity_bottomup(class_size, k_max, epsilon, delta);
            b.per_vertex_epsilon = epsilon / (2.0 * static_cast<double>(k_max));
            b.per_vertex_delta = delta / static_cast<double>(k_max);
            break;
        case BudgetMode::TopDown:
            b.m = sample_complexity_topdown(class_size, k_max, epsilon, delta);
            b.per_vertex_epsilon = epsilon / static_cast<double>(k_max);
            b.per_vertex_delta = delta / static_cast<double>(k_max);
            break;
    }
    return b;
}

struct ChainSuccess {
    double exact = 1.0;   // prod (1 - eps_i)
    double approx = 1.0;  // exp(-sum eps_i)
};

/// Success probability of a chain whose steps fail independently with the
/// given probabilities.
inline ChainSuccess chain_success(std::span<const double> step_errors) {
    ChainSuccess r;
    double sum = 0.0;
    for (double e : step_errors) {
        if (!(e >= 0.0 && e < 1.0)) throw std::domain_error("step error must lie in [0, 1)");
        r.exact *= 1.0 - e;
        sum += e;
    }
    r.approx = std::exp(-sum);
    return r;
}

/// Half-width of the 3-sigma binomial acceptance band around p for n trials.
inline double three_sigma(double p, std::uint64_t n) {
    if (n == 0) throw std::domain_error("n must be positive");
    return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace pacr::stats
