#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uniq/dataset.hpp"
#include "uniq/divergence.hpp"
#include "uniq/parallel.hpp"

namespace uniq {

struct SubjectDivergence {
    std::uint32_t subject_id = 0;
    double divergence = 0.0;  // nats
    std::size_t genuine_size = 0;
    std::size_t impostor_size = 0;
    EstimatorParams params_used;
    std::size_t floored_terms = 0;
    // Filled only by the minimum-divergence variant.
    std::optional<std::uint32_t> min_impostor_id;
    std::optional<double> min_divergence;
};

struct UniquenessReport {
    std::vector<SubjectDivergence> per_subject;  // eligible subjects, ascending id
    double d_bar = 0.0;
    double u = 0.0;
    std::optional<double> d_bar_min;
    std::optional<double> u_min;
    std::vector<std::uint32_t> skipped_subjects;  // fewer than 2 samples
    std::uint64_t seed = 0;
    double epsilon = 1e-12;
    std::size_t subject_count = 0;
    std::size_t sample_count = 0;
    std::size_t dimension = 0;
};

struct ScoreOptions {
    std::optional<std::size_t> r_override;  // clamped per subject to min(r, |S_p|-1, |I|)
    std::optional<std::size_t> n_override;
    double epsilon = 1e-12;
    std::size_t threads = 0;  // 0 = hardware concurrency
    // Truncates each subject's impostor pool to the first r samples in
    // dataset order. Testing hook: with r forced to |S_p|-1 this removes all
    // subset randomness.
    bool trim_impostors_to_r = false;
};

namespace detail {

constexpr std::uint64_t kSubjectStreamTag = 0xa11ce;
constexpr std::uint64_t kPairStreamTag = 0xb0b;

inline EstimatorParams resolve_params(std::size_t g_size, std::size_t i_size,
                                      std::uint64_t stream_seed, const ScoreOptions& opts) {
    EstimatorParams p = default_params(g_size, i_size, stream_seed, opts.epsilon);
    if (opts.r_override) {
        p.r = std::min({*opts.r_override, g_size - 1, i_size});
        if (p.r < 1) p.r = 1;
        p.n = (100 + p.r - 1) / p.r;
    }
    if (opts.n_override) p.n = std::max<std::size_t>(1, *opts.n_override);
    return p;
}

}  // namespace detail

// Divergence of one subject's samples against the whole remainder of the
// dataset. The subject's RNG stream is derived from the global seed and the
// subject's ordinal, so per-subject scoring parallelizes deterministically.
inline SubjectDivergence subject_divergence(const Dataset& ds, std::uint32_t subject_id,
                                            std::uint64_t seed,
                                            const ScoreOptions& opts = {}) {
    const Dataset::Subject* subj = ds.find_subject(subject_id);
    if (!subj) throw EligibilityError("unknown subject " + std::to_string(subject_id));
    if (subj->count < 2)
        throw EligibilityError("subject " + std::to_string(subject_id) +
                               " has fewer than 2 samples");
    if (ds.subject_count() < 2) throw EligibilityError("dataset needs at least 2 subjects");

    const std::size_t ordinal = static_cast<std::size_t>(subj - ds.subjects().data());
    const std::uint64_t stream_seed = rng::derive(seed, detail::kSubjectStreamTag, ordinal);

    SubjectSamples genuine(ds, *subj);
    ComplementSamples full_impostors(ds, *subj);
    EstimatorParams params =
        detail::resolve_params(genuine.size(), full_impostors.size(), stream_seed, opts);

    DivergenceValue dv;
    if (opts.trim_impostors_to_r) {
        ComplementSamples trimmed(ds, *subj, params.r);
        dv = kl_subsampled(genuine, trimmed, params);
    } else {
        dv = kl_subsampled(genuine, full_impostors, params);
    }

    SubjectDivergence out;
    out.subject_id = subject_id;
    out.divergence = dv.value;
    out.genuine_size = dv.genuine_count;
    out.impostor_size = dv.impostor_count;
    out.params_used = dv.params_used;
    out.floored_terms = dv.floored_terms;
    return out;
}

// Mean per-subject divergence and its sigmoid normalization. Subjects with
// fewer than 2 samples are skipped from the genuine role but their samples
// stay in every impostor pool.
inline UniquenessReport dataset_uniqueness(const Dataset& ds, std::uint64_t seed,
                                           const ScoreOptions& opts = {}) {
    UniquenessReport report;
    report.seed = seed;
    report.epsilon = opts.epsilon;
    report.subject_count = ds.subject_count();
    report.sample_count = ds.sample_count();
    report.dimension = ds.dimension();

    std::vector<std::uint32_t> eligible;
    for (const auto& subj : ds.subjects()) {
        if (subj.count >= 2) eligible.push_back(subj.id);
        else report.skipped_subjects.push_back(subj.id);
    }
    if (eligible.size() < 2) throw EligibilityError("insufficient eligible subjects");

    report.per_subject.resize(eligible.size());
    parallel_for(eligible.size(), opts.threads, [&](std::size_t i) {
        report.per_subject[i] = subject_divergence(ds, eligible[i], seed, opts);
    });

    double acc = 0.0;
    for (const auto& sd : report.per_subject) acc += sd.divergence;
    report.d_bar = acc / static_cast<double>(report.per_subject.size());
    report.u = sigmoid(report.d_bar);
    return report;
}

// Minimum-divergence variant: each subject is scored against its closest
// rival subject only. Ties break toward the smaller rival id. Also fills
// the regular per-subject divergences so one report carries both scores.
inline UniquenessReport dataset_uniqueness_min(const Dataset& ds, std::uint64_t seed,
                                               const ScoreOptions& opts = {}) {
    UniquenessReport report = dataset_uniqueness(ds, seed, opts);

    const auto& subjects = ds.subjects();
    parallel_for(report.per_subject.size(), opts.threads, [&](std::size_t i) {
        SubjectDivergence& sd = report.per_subject[i];
        const Dataset::Subject* p = ds.find_subject(sd.subject_id);
        const std::size_t p_ord = static_cast<std::size_t>(p - subjects.data());
        SubjectSamples genuine(ds, *p);

        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_id = 0;
        for (std::size_t q_ord = 0; q_ord < subjects.size(); ++q_ord) {
            if (q_ord == p_ord) continue;
            const auto& q = subjects[q_ord];
            if (q.count < 1) continue;
            SubjectSamples rival(ds, q);

            EstimatorParams params;
            params.epsilon = opts.epsilon;
            params.r = std::min(p->count - 1, q.count);
            if (opts.r_override) params.r = std::min(params.r, *opts.r_override);
            params.n = (100 + params.r - 1) / params.r;
            if (opts.n_override) params.n = std::max<std::size_t>(1, *opts.n_override);
            params.seed = rng::derive(rng::derive(seed, detail::kPairStreamTag, p_ord),
                                      detail::kPairStreamTag, q_ord);

            const DivergenceValue dv = kl_genuine_subsampled(genuine, rival, params);
            if (dv.value < best) {  // strict: earlier (smaller) q wins ties
                best = dv.value;
                best_id = q.id;
            }
        }
        sd.min_divergence = best;
        sd.min_impostor_id = best_id;
    });

    double acc = 0.0;
    for (const auto& sd : report.per_subject) acc += *sd.min_divergence;
    report.d_bar_min = acc / static_cast<double>(report.per_subject.size());
    report.u_min = sigmoid(*report.d_bar_min);
    return report;
}

}  // namespace uniq
