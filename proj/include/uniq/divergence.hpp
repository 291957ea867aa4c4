#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uniq/errors.hpp"
#include "uniq/rng.hpp"

namespace uniq {

template <class S>
concept SampleSet = requires(const S& s, std::size_t i) {
    { s.size() } -> std::convertible_to<std::size_t>;
    { s[i] } -> std::convertible_to<std::span<const double>>;
};

// Adapter so plain vectors of vectors can feed the estimator.
class VecSamples {
public:
    explicit VecSamples(const std::vector<std::vector<double>>& v) : v_(&v) {}
    std::size_t size() const { return v_->size(); }
    std::span<const double> operator[](std::size_t i) const { return (*v_)[i]; }

private:
    const std::vector<std::vector<double>>* v_;
};

struct EstimatorParams {
    std::size_t r = 1;           // subset size
    std::size_t n = 1;           // repetition count
    std::uint64_t seed = 0;
    double epsilon = 1e-12;      // distance floor, keeps log ratios finite
};

struct DivergenceValue {
    double value = 0.0;  // nats
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;
    EstimatorParams params_used;
    std::size_t floored_terms = 0;
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Mean Euclidean distance from s to the members of S, excluding the record
// at `self` when s itself belongs to S. Exclusion is by record identity:
// another record holding an equal vector still counts (twins).
template <SampleSet S>
double mean_norm(std::span<const double> s, const S& set, std::ptrdiff_t self = -1) {
    const std::size_t n = set.size();
    const std::size_t effective = n - (self >= 0 ? 1 : 0);
    if (effective == 0) throw EligibilityError("degenerate genuine set");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<std::ptrdiff_t>(i) == self) continue;
        acc += euclidean(s, set[i]);
    }
    return acc / static_cast<double>(effective);
}

// r = min(|G|-1, |I|), n = ceil(100/r).
inline EstimatorParams default_params(std::size_t g_size, std::size_t i_size,
                                      std::uint64_t seed, double epsilon = 1e-12) {
    if (g_size < 2) throw EligibilityError("genuine set needs at least 2 samples");
    if (i_size < 1) throw EligibilityError("impostor set must be non-empty");
    EstimatorParams p;
    p.r = std::min(g_size - 1, i_size);
    p.n = (100 + p.r - 1) / p.r;
    p.seed = seed;
    p.epsilon = epsilon;
    return p;
}

// Average-norm KL-divergence estimate between the genuine set G and the
// impostor set I, in nats:
//   (1/|G|) sum_g log(delta_g(I) / delta_g(G)) + log(|I| / (|G|-1))
// Both delta terms are floored at epsilon; floored evaluations are counted.
template <SampleSet GS, SampleSet IS>
DivergenceValue kl_avg_norm(const GS& genuine, const IS& impostor, double epsilon = 1e-12) {
    const std::size_t g_n = genuine.size();
    const std::size_t i_n = impostor.size();
    if (g_n < 2) throw EligibilityError("genuine set needs at least 2 samples");
    if (i_n < 1) throw EligibilityError("impostor set must be non-empty");
    if (epsilon <= 0) throw EligibilityError("epsilon must be positive");

    DivergenceValue out;
    out.genuine_count = g_n;
    out.impostor_count = i_n;
    out.params_used = {g_n - 1, 1, 0, epsilon};

    double acc = 0.0;
    for (std::size_t gi = 0; gi < g_n; ++gi) {
        const auto g = std::span<const double>(genuine[gi]);
        double dg = mean_norm(g, genuine, static_cast<std::ptrdiff_t>(gi));
        double di = mean_norm(g, impostor);
        if (dg < epsilon) { dg = epsilon; ++out.floored_terms; }
        if (di < epsilon) { di = epsilon; ++out.floored_terms; }
        acc += std::log(di / dg);
    }
    out.value = acc / static_cast<double>(g_n) +
                std::log(static_cast<double>(i_n) / static_cast<double>(g_n - 1));
    return out;
}

namespace detail {

// One subsampled iteration: mean over g in G' of log(delta_g(I')/delta_g(G')).
template <SampleSet GS, SampleSet IS>
double subsample_iteration(const GS& genuine, const IS& impostor,
                           const std::vector<std::size_t>& g_idx,
                           const std::vector<std::size_t>& i_idx, double epsilon,
                           std::size_t& floored) {
    double acc = 0.0;
    for (std::size_t a = 0; a < g_idx.size(); ++a) {
        const auto g = std::span<const double>(genuine[g_idx[a]]);
        double dg = 0.0;
        for (std::size_t b = 0; b < g_idx.size(); ++b) {
            if (b == a) continue;
            dg += euclidean(g, genuine[g_idx[b]]);
        }
        dg /= static_cast<double>(g_idx.size() - 1);
        double di = 0.0;
        for (std::size_t b = 0; b < i_idx.size(); ++b) di += euclidean(g, impostor[i_idx[b]]);
        di /= static_cast<double>(i_idx.size());
        if (dg < epsilon) { dg = epsilon; ++floored; }
        if (di < epsilon) { di = epsilon; ++floored; }
        acc += std::log(di / dg);
    }
    return acc / static_cast<double>(g_idx.size());
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace detail

// Monte-Carlo subsampled estimator: averages n iterations, each drawing
// G'_k of size r+1 from G and I'_k of size r from I uniformly without
// replacement. The iteration-k RNG stream is derived from (seed, k), so
// the value is a pure function of (G, I, params).
template <SampleSet GS, SampleSet IS>
DivergenceValue kl_subsampled(const GS& genuine, const IS& impostor,
                              const EstimatorParams& params) {
    const std::size_t g_n = genuine.size();
    const std::size_t i_n = impostor.size();
    if (params.r < 1 || params.n < 1) throw EligibilityError("r and n must be >= 1");
    if (params.epsilon <= 0) throw EligibilityError("epsilon must be positive");
    if (params.r + 1 > g_n)
        throw EligibilityError("genuine set too small: need r+1 <= |G| (r=" +
                               std::to_string(params.r) + ", |G|=" + std::to_string(g_n) + ")");
    if (params.r > i_n)
        throw EligibilityError("impostor set too small: need r <= |I| (r=" +
                               std::to_string(params.r) + ", |I|=" + std::to_string(i_n) + ")");

    DivergenceValue out;
    out.genuine_count = g_n;
    out.impostor_count = i_n;
    out.params_used = params;

    // Subsets forced to the full sets: every iteration is identical.
    if (params.r + 1 == g_n && params.r == i_n) {
        const auto g_idx = detail::iota_indices(g_n);
        const auto i_idx = detail::iota_indices(i_n);
        std::size_t floored = 0;
        out.value =
            detail::subsample_iteration(genuine, impostor, g_idx, i_idx, params.epsilon, floored);
        out.floored_terms = floored * params.n;
        return out;
    }

    double acc = 0.0;
    for (std::size_t k = 0; k < params.n; ++k) {
        rng::Stream stream(rng::derive(params.seed, k));
        const auto g_idx = rng::sample_without_replacement(stream, g_n, params.r + 1);
        const auto i_idx = rng::sample_without_replacement(stream, i_n, params.r);
        acc += detail::subsample_iteration(genuine, impostor, g_idx, i_idx, params.epsilon,
                                           out.floored_terms);
    }
    out.value = acc / static_cast<double>(params.n);
    return out;
}

// Pairwise estimator used by the minimum-divergence variant: subsamples the
// genuine side to r+1 but keeps the full impostor set, with the matching
// count-correction term log(|I|/r). For an exact-twin pair the zero
// self-distance inside delta_g(I) is cancelled by the correction, so the
// value sits at 0 rather than being biased negative.
template <SampleSet GS, SampleSet IS>
DivergenceValue kl_genuine_subsampled(const GS& genuine, const IS& impostor,
                                      const EstimatorParams& params) {
    const std::size_t g_n = genuine.size();
    const std::size_t i_n = impostor.size();
    if (params.r < 1 || params.n < 1) throw EligibilityError("r and n must be >= 1");
    if (params.epsilon <= 0) throw EligibilityError("epsilon must be positive");
    if (params.r + 1 > g_n)
        throw EligibilityError("genuine set too small: need r+1 <= |G|");

    DivergenceValue out;
    out.genuine_count = g_n;
    out.impostor_count = i_n;
    out.params_used = params;

    const auto i_idx = detail::iota_indices(i_n);
    const double correction =
        std::log(static_cast<double>(i_n) / static_cast<double>(params.r));
    const std::size_t iters = (params.r + 1 == g_n) ? 1 : params.n;

    double acc = 0.0;
    std::size_t floored = 0;
    for (std::size_t k = 0; k < iters; ++k) {
        std::vector<std::size_t> g_idx;
        if (params.r + 1 == g_n) {
            g_idx = detail::iota_indices(g_n);
        } else {
            rng::Stream stream(rng::derive(params.seed, k));
            g_idx = rng::sample_without_replacement(stream, g_n, params.r + 1);
        }
        acc += detail::subsample_iteration(genuine, impostor, g_idx, i_idx, params.epsilon,
                                           floored) +
               correction;
    }
    out.value = acc / static_cast<double>(iters);
    out.floored_terms = (params.r + 1 == g_n) ? floored * params.n : floored;
    return out;
}

inline double sigmoid(double d) { return 1.0 / (1.0 + std::exp(-d)); }

}  // namespace uniq
