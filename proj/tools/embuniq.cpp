// embuniq: uniqueness analytics for embedding datasets.
//
// Subcommands: simulate, score, score-min, group, entropy.
// Exit codes: 0 success, 1 I/O or parse failure, 2 eligibility or
// precondition failure, 3 refused quadratic-cost run.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uniq/dataset.hpp"
#include "uniq/divergence.hpp"
#include "uniq/entropy.hpp"
#include "uniq/report_io.hpp"
#include "uniq/synth.hpp"
#include "uniq/uniqueness.hpp"

namespace {

struct Refusal : std::runtime_error {
    explicit Refusal(const std::string& msg) : std::runtime_error(msg) {}
};

bool looks_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::string(magic, 4) == "UEMB";
}

uniq::Dataset load_embeddings(const std::string& path) {
    return looks_binary(path) ? uniq::Dataset::load_binary(path) : uniq::Dataset::load_csv(path);
}

struct ScoreArgs {
    std::string input;
    std::string meta;
    std::string out;
    std::uint64_t seed = 42;
    std::optional<std::size_t> r_override;
    std::optional<std::size_t> n_override;
    double epsilon = 1e-12;
    std::size_t threads = 0;
    bool force = false;
    std::size_t pair_threshold = 2000;
};

void add_common_score_flags(CLI::App* cmd, ScoreArgs& args) {
    cmd->add_option("--input,-i", args.input, "embeddings file (CSV or UEMB)")->required();
    cmd->add_option("--meta", args.meta, "metadata CSV (subject_id,gender,age)");
    cmd->add_option("--out,-o", args.out, "output prefix for .json/.tsv (default: input path)");
    cmd->add_option("--seed", args.seed, "RNG seed")->envname("UNIQ_SEED");
    cmd->add_option("--r", args.r_override, "subset size override (clamped per subject)");
    cmd->add_option("--n", args.n_override, "repetition count override");
    cmd->add_option("--epsilon", args.epsilon, "distance floor");
    cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)");
}

uniq::ScoreOptions to_options(const ScoreArgs& args) {
    uniq::ScoreOptions opts;
    opts.r_override = args.r_override;
    opts.n_override = args.n_override;
    opts.epsilon = args.epsilon;
    opts.threads = args.threads;
    return opts;
}

std::string out_prefix(const ScoreArgs& args) {
    return args.out.empty() ? args.input + ".report" : args.out;
}

uniq::Dataset load_scored_dataset(const ScoreArgs& args) {
    uniq::Dataset ds = load_embeddings(args.input);
    if (!args.meta.empty()) {
        std::size_t skipped = 0;
        ds = uniq::load_metadata(args.meta, ds, &skipped);
        if (skipped > 0)
            std::cerr << "warning: " << skipped << " metadata rows named unknown subjects\n";
    }
    return ds;
}

void write_report(const uniq::UniquenessReport& report, const std::string& prefix) {
    uniq::write_text_file(prefix + ".json", uniq::report_to_json(report));
    uniq::write_text_file(prefix + ".tsv", uniq::report_to_tsv(report));
}

void print_summary(const uniq::UniquenessReport& report, double elapsed_s) {
    std::printf("subjects=%zu samples=%zu eligible=%zu skipped=%zu d_bar=%.6f u=%.6f",
                report.subject_count, report.sample_count, report.per_subject.size(),
                report.skipped_subjects.size(), report.d_bar, report.u);
    if (report.u_min) std::printf(" d_bar_min=%.6f u_min=%.6f", *report.d_bar_min, *report.u_min);
    std::printf(" elapsed=%.2fs\n", elapsed_s);
}

int cmd_score(const ScoreArgs& args, bool min_variant) {
    const auto t0 = std::chrono::steady_clock::now();
    uniq::Dataset ds = load_scored_dataset(args);

    uniq::UniquenessReport report;
    if (min_variant) {
        std::size_t eligible = 0;
        for (const auto& s : ds.subjects())
            if (s.count >= 2) ++eligible;
        if (eligible > args.pair_threshold && !args.force) {
            const unsigned long long pairs =
                static_cast<unsigned long long>(eligible) * (ds.subject_count() - 1);
            throw Refusal("refusing quadratic run: " + std::to_string(eligible) +
                          " eligible subjects imply ~" + std::to_string(pairs) +
                          " pair runs; pass --force to proceed");
        }
        report = uniq::dataset_uniqueness_min(ds, args.seed, to_options(args));
    } else {
        report = uniq::dataset_uniqueness(ds, args.seed, to_options(args));
    }

    write_report(report, out_prefix(args));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_summary(report, elapsed);
    return 0;
}

int cmd_group(const ScoreArgs& args, const std::string& by) {
    const auto t0 = std::chrono::steady_clock::now();
    uniq::Dataset ds = load_scored_dataset(args);
    if (ds.metadata().empty()) throw uniq::EligibilityError("group split requires --meta");
    const uniq::GroupKind kind =
        (by == "gender") ? uniq::GroupKind::gender : uniq::GroupKind::age_decade;

    const uniq::UniquenessReport full = uniq::dataset_uniqueness(ds, args.seed, to_options(args));
    write_report(full, out_prefix(args) + ".full");
    std::printf("full: subjects=%zu u=%.6f\n", full.subject_count, full.u);

    auto buckets = uniq::split_by_group(ds, kind);
    for (const auto& bucket : buckets) {
        std::size_t eligible = 0;
        for (const auto& s : bucket.data.subjects())
            if (s.count >= 2) ++eligible;
        if (!bucket.usable || eligible < 2) {
            std::printf("%s: subjects=%zu (flagged: too few subjects to score)\n",
                        bucket.key.value.c_str(), bucket.data.subject_count());
            continue;
        }
        const uniq::UniquenessReport rep =
            uniq::dataset_uniqueness(bucket.data, args.seed, to_options(args));
        write_report(rep, out_prefix(args) + "." + bucket.key.value);
        std::printf("%s: subjects=%zu u=%.6f\n", bucket.key.value.c_str(),
                    rep.subject_count, rep.u);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("elapsed=%.2fs\n", elapsed);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uniqueness analytics for embedding datasets"};
    app.require_subcommand(1);

    // simulate
    uniq::SynthSpec spec;
    double sep = 0.0;
    std::string sim_out = "synthetic";
    auto* sim = app.add_subcommand("simulate", "generate a synthetic embedding dataset");
    sim->add_option("--subjects", spec.subjects, "subject count")->required();
    sim->add_option("--samples", spec.samples_per_subject, "samples per subject")->required();
    sim->add_option("--dim", spec.dimension, "embedding dimension")->required();
    sim->add_option("--sep", sep, "between/within spread ratio (sets --between, --within 1)");
    sim->add_option("--between", spec.between_spread, "spread of subject means");
    sim->add_option("--within", spec.within_spread, "spread of samples around their mean");
    sim->add_option("--twin-frac", spec.twin_fraction, "fraction of subjects that are twins");
    sim->add_option("--twin-noise", spec.twin_noise, "twin mean perturbation (0 = identical)");
    sim->add_option("--seed", spec.seed, "RNG seed")->envname("UNIQ_SEED");
    sim->add_option("--out,-o", sim_out, "output prefix for .uemb/.meta.csv");

    // score / score-min
    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "dataset uniqueness (mean divergence)");
    add_common_score_flags(score, score_args);

    ScoreArgs min_args;
    auto* score_min =
        app.add_subcommand("score-min", "uniqueness with the minimum-divergence variant");
    add_common_score_flags(score_min, min_args);
    score_min->add_flag("--force", min_args.force, "allow runs above the pair threshold");
    score_min->add_option("--pair-threshold", min_args.pair_threshold,
                          "subject count above which --force is required");

    // group
    ScoreArgs group_args;
    std::string group_by;
    auto* group = app.add_subcommand("group", "per-group uniqueness reports");
    add_common_score_flags(group, group_args);
    group->add_option("--by", group_by, "gender | age-decade")
        ->required()
        ->check(CLI::IsMember({"gender", "age-decade"}));

    // entropy
    std::vector<std::string> entropy_files;
    std::vector<std::size_t> resize;
    bool per_channel = false;
    std::string entropy_tsv;
    auto* entropy = app.add_subcommand("entropy", "color-histogram entropy of PNM images");
    entropy->add_option("files", entropy_files, "PGM/PPM files")->required();
    entropy->add_option("--resize", resize, "resample to W H before measuring")->expected(2);
    entropy->add_flag("--per-channel", per_channel, "also report per-channel entropies");
    entropy->add_option("--tsv", entropy_tsv, "write per-file results to a TSV file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            if (sep > 0) {
                spec.between_spread = sep;
                spec.within_spread = 1.0;
            }
            spec.validate();
            const uniq::Dataset ds = uniq::generate(spec);
            ds.write_binary(sim_out + ".uemb");
            ds.write_metadata_csv(sim_out + ".meta.csv");
            std::printf(
                "subjects=%zu samples=%zu dim=%zu between=%g within=%g twin_frac=%g "
                "twin_noise=%g seed=%llu\n",
                spec.subjects, spec.samples_per_subject, spec.dimension, spec.between_spread,
                spec.within_spread, spec.twin_fraction, spec.twin_noise,
                static_cast<unsigned long long>(spec.seed));
            std::printf("wrote %s.uemb and %s.meta.csv\n", sim_out.c_str(), sim_out.c_str());
            return 0;
        }
        if (score->parsed()) return cmd_score(score_args, false);
        if (score_min->parsed()) return cmd_score(min_args, true);
        if (group->parsed()) return cmd_group(group_args, group_by);
        if (entropy->parsed()) {
            std::ostringstream tsv;
            tsv << "file\tentropy_bits\n";
            double sum = 0.0;
            std::size_t ok = 0;
            for (const auto& file : entropy_files) {
                try {
                    uniq::Image img = uniq::load_pnm(file);
                    if (!resize.empty()) img = uniq::resample(img, resize[0], resize[1]);
                    const double h = uniq::image_entropy(img);
                    std::printf("%s\t%.4f", file.c_str(), h);
                    if (per_channel) {
                        for (double hc : uniq::image_entropy_per_channel(img))
                            std::printf("\t%.4f", hc);
                    }
                    std::printf("\n");
                    tsv << file << '\t' << uniq::report_detail::fixed6(h) << '\n';
                    sum += h;
                    ++ok;
                } catch (const std::exception& e) {
                    std::cerr << "error: " << e.what() << "\n";
                }
            }
            if (ok == 0) {
                std::cerr << "error: no readable images\n";
                return 1;
            }
            std::printf("mean\t%.4f\n", sum / static_cast<double>(ok));
            if (!entropy_tsv.empty()) uniq::write_text_file(entropy_tsv, tsv.str());
            return 0;
        }
    } catch (const Refusal& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const uniq::EligibilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const uniq::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
