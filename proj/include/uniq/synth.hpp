#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uniq/dataset.hpp"
#include "uniq/rng.hpp"
#include "uniq/uniqueness.hpp"

namespace uniq {

struct SynthSpec {
    std::size_t subjects = 2;            // c
    std::size_t samples_per_subject = 2; // m
    std::size_t dimension = 1;
    double between_spread = 1.0;  // per-axis spread of subject means
    double within_spread = 0.1;   // per-axis spread of samples around their mean
    double twin_fraction = 0.0;   // in [0,1)
    double twin_noise = 0.0;      // 0 = identical twin means
    std::uint64_t seed = 0;

    void validate() const {
        if (subjects < 2) throw EligibilityError("subjects must be >= 2");
        if (samples_per_subject < 2) throw EligibilityError("samples must be >= 2");
        if (dimension < 1) throw EligibilityError("dim must be >= 1");
        if (!(between_spread > 0)) throw EligibilityError("between spread must be > 0");
        if (!(within_spread > 0)) throw EligibilityError("within spread must be > 0");
        if (twin_fraction < 0 || twin_fraction >= 1)
            throw EligibilityError("twin-frac must be in [0,1)");
        if (twin_noise < 0) throw EligibilityError("twin-noise must be >= 0");
    }
};

namespace synth_detail {

constexpr std::uint64_t kMeanTag = 0x11a;
constexpr std::uint64_t kTwinTag = 0x22b;
constexpr std::uint64_t kSampleTag = 0x33c;
constexpr std::uint64_t kInjectTag = 0x44d;

}  // namespace synth_detail

// Gaussian subject clusters: base subject means drawn from a centered
// isotropic Gaussian, twin subjects copy a base mean (round-robin) with
// optional perturbation, samples drawn isotropically around each mean.
// Every draw comes from a stream derived from spec.seed, split per subject,
// so generation is a pure function of the spec.
inline Dataset generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t c = spec.subjects;
    const std::size_t twins = static_cast<std::size_t>(spec.twin_fraction * c);
    const std::size_t bases = c - twins;
    const std::size_t d = spec.dimension;

    std::vector<std::vector<double>> means(c, std::vector<double>(d));
    for (std::size_t s = 0; s < bases; ++s) {
        rng::Stream st(rng::derive(spec.seed, synth_detail::kMeanTag, s));
        for (std::size_t k = 0; k < d; ++k) means[s][k] = spec.between_spread * st.next_normal();
    }
    for (std::size_t t = 0; t < twins; ++t) {
        const std::size_t donor = t % bases;
        rng::Stream st(rng::derive(spec.seed, synth_detail::kTwinTag, t));
        for (std::size_t k = 0; k < d; ++k)
            means[bases + t][k] = means[donor][k] + spec.twin_noise * st.next_normal();
    }

    std::vector<EmbeddingRecord> recs;
    recs.reserve(c * spec.samples_per_subject);
    std::map<std::uint32_t, SubjectMeta> meta;
    for (std::size_t s = 0; s < c; ++s) {
        rng::Stream st(rng::derive(spec.seed, synth_detail::kSampleTag, s));
        for (std::size_t j = 0; j < spec.samples_per_subject; ++j) {
            EmbeddingRecord r;
            r.subject_id = static_cast<std::uint32_t>(s);
            r.sample_id = static_cast<std::uint32_t>(j);
            r.vector.resize(d);
            for (std::size_t k = 0; k < d; ++k)
                r.vector[k] = means[s][k] + spec.within_spread * st.next_normal();
            recs.push_back(std::move(r));
        }
        SubjectMeta m;
        m.subject_id = static_cast<std::uint32_t>(s);
        m.gender = (s % 2 == 0) ? Gender::F : Gender::M;
        m.age = static_cast<int>(20 + s % 60);
        meta.emplace(m.subject_id, m);
    }
    return Dataset(d, std::move(recs), std::move(meta));
}

// Replaces floor(fraction * c) subjects (highest ids) with twins of the
// survivors: each injected subject copies a surviving subject's samples
// (round-robin donors) perturbed per-coordinate with spread twin_noise.
// Total subject count is unchanged; injected subjects get fresh ids.
inline Dataset inject_twins(const Dataset& ds, double fraction, double twin_noise,
                            std::uint64_t seed) {
    if (fraction <= 0 || fraction >= 1) throw EligibilityError("fraction must be in (0,1)");
    const std::size_t c = ds.subject_count();
    const std::size_t k = static_cast<std::size_t>(fraction * c);
    if (k == 0) return ds;
    if (c - k < 2) throw EligibilityError("fraction leaves fewer than 2 survivors");

    const auto& subjects = ds.subjects();
    const std::size_t survivors = c - k;
    const std::uint32_t max_id = subjects.back().id;

    std::vector<EmbeddingRecord> recs;
    std::map<std::uint32_t, SubjectMeta> meta;
    for (std::size_t s = 0; s < survivors; ++s) {
        const auto& subj = subjects[s];
        for (std::size_t j = 0; j < subj.count; ++j) {
            const std::size_t idx = subj.first + j;
            auto v = ds.sample(idx);
            recs.push_back({subj.id, ds.sample_id(idx), {v.begin(), v.end()}});
        }
        auto it = ds.metadata().find(subj.id);
        if (it != ds.metadata().end()) meta.emplace(subj.id, it->second);
    }
    for (std::size_t t = 0; t < k; ++t) {
        const auto& donor = subjects[t % survivors];
        const std::uint32_t new_id = max_id + 1 + static_cast<std::uint32_t>(t);
        rng::Stream st(rng::derive(seed, synth_detail::kInjectTag, t));
        for (std::size_t j = 0; j < donor.count; ++j) {
            const std::size_t idx = donor.first + j;
            auto v = ds.sample(idx);
            EmbeddingRecord r{new_id, ds.sample_id(idx), {v.begin(), v.end()}};
            if (twin_noise > 0)
                for (double& x : r.vector) x += twin_noise * st.next_normal();
            recs.push_back(std::move(r));
        }
        auto it = ds.metadata().find(donor.id);
        if (it != ds.metadata().end()) {
            SubjectMeta m = it->second;
            m.subject_id = new_id;
            meta.emplace(new_id, m);
        }
    }
    return Dataset(ds.dimension(), std::move(recs), std::move(meta));
}

struct TwinDilution {
    double u_before = 0.0;
    double u_after = 0.0;
    double u_min_before = 0.0;
    double u_min_after = 0.0;
};

// Scores a dataset before and after exact-twin injection. The mean-based
// score barely moves while the minimum-based score collapses toward 0.5.
inline TwinDilution twin_dilution_check(const Dataset& ds, double twin_fraction,
                                        std::uint64_t seed, const ScoreOptions& opts = {}) {
    if (twin_fraction <= 0 || twin_fraction >= 1)
        throw EligibilityError("twin_fraction must be in (0,1)");
    TwinDilution out;
    const UniquenessReport before = dataset_uniqueness_min(ds, seed, opts);
    out.u_before = before.u;
    out.u_min_before = *before.u_min;
    const Dataset twinned =
        inject_twins(ds, twin_fraction, 0.0, rng::derive(seed, synth_detail::kInjectTag, 0));
    const UniquenessReport after = dataset_uniqueness_min(twinned, seed, opts);
    out.u_after = after.u;
    out.u_min_after = *after.u_min;
    return out;
}

}  // namespace uniq
