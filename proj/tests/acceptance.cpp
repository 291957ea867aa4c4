// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "uniq/dataset.hpp"
#include "uniq/divergence.hpp"
#include "uniq/entropy.hpp"
#include "uniq/report_io.hpp"
#include "uniq/synth.hpp"
#include "uniq/uniqueness.hpp"

namespace fs = std::filesystem;
using namespace uniq;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: oracle equivalence on randomized tiny instances.
// The oracle is an independent direct-summation implementation sharing no
// code with the library path.

double oracle_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double oracle_subject_divergence(const std::vector<std::vector<double>>& genuine,
                                 const std::vector<std::vector<double>>& impostor) {
    const double eps = 1e-12;
    double total = 0;
    for (std::size_t gi = 0; gi < genuine.size(); ++gi) {
        double dg = 0;
        for (std::size_t gj = 0; gj < genuine.size(); ++gj)
            if (gj != gi) dg += oracle_dist(genuine[gi], genuine[gj]);
        dg /= double(genuine.size() - 1);
        double di = 0;
        for (const auto& v : impostor) di += oracle_dist(genuine[gi], v);
        di /= double(impostor.size());
        total += std::log(std::max(di, eps) / std::max(dg, eps));
    }
    return total / double(genuine.size()) +
           std::log(double(impostor.size()) / double(genuine.size() - 1));
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 gen(20240817);
    std::uniform_int_distribution<std::size_t> pick_c(2, 5), pick_m(2, 6), pick_d(1, 4);
    std::normal_distribution<double> nd(0.0, 1.0);

    double worst = 0;
    bool ok = true;
    for (int inst = 0; inst < 1000 && ok; ++inst) {
        const std::size_t c = pick_c(gen), m = pick_m(gen), d = pick_d(gen);
        std::vector<EmbeddingRecord> recs;
        for (std::uint32_t s = 0; s < c; ++s)
            for (std::uint32_t j = 0; j < m; ++j) {
                std::vector<double> v(d);
                for (auto& x : v) x = nd(gen) + 2.0 * double(s);
                recs.push_back({s, j, std::move(v)});
            }
        Dataset ds(d, std::move(recs));

        ScoreOptions opts;
        opts.r_override = 1u << 20;  // clamps to |S_p|-1
        opts.n_override = 1;
        opts.trim_impostors_to_r = true;
        const UniquenessReport got = dataset_uniqueness(ds, 42, opts);

        // oracle route: same trimming rule, independent arithmetic
        double d_bar = 0;
        for (std::size_t p = 0; p < c; ++p) {
            std::vector<std::vector<double>> genuine, impostor;
            for (std::size_t i = 0; i < ds.sample_count(); ++i) {
                auto sp = ds.sample(i);
                std::vector<double> v(sp.begin(), sp.end());
                if (ds.sample_subject(i) == p) genuine.push_back(std::move(v));
                else impostor.push_back(std::move(v));
            }
            impostor.resize(m - 1);  // trimmed to r in dataset order
            d_bar += oracle_subject_divergence(genuine, impostor);
        }
        d_bar /= double(c);
        const double u = 1.0 / (1.0 + std::exp(-d_bar));

        worst = std::max({worst, std::abs(got.d_bar - d_bar), std::abs(got.u - u)});
        if (worst > 1e-9) ok = false;
    }
    const double dt = elapsed_s(t0);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "max |diff| = %.3g over 1000 instances, %.1fs", worst,
                  dt);
    report(1, "oracle equivalence on tiny instances", ok && dt < 60.0, detail);
}

void criterion_2() {
    bool ok = true;
    for (std::size_t g = 2; g <= 200 && ok; ++g)
        for (std::size_t i = 1; i <= 200 && ok; ++i) {
            const auto p = default_params(g, i, 0);
            const std::size_t r = std::min(g - 1, i);
            const std::size_t n = (100 + r - 1) / r;
            if (p.r != r || p.n != n) ok = false;
        }
    report(2, "parameter rules on exhaustive grid", ok);
}

void criterion_3() {
    const bool anchor0 = sigmoid(0.0) == 0.5;
    const double u = sigmoid(0.7127);
    const bool anchor1 = std::abs(u - 0.6710) <= 5e-5;
    char detail[96];
    std::snprintf(detail, sizeof(detail), "u(0)=%.6f, u(0.7127)=%.6f", sigmoid(0.0), u);
    report(3, "sigmoid anchors", anchor0 && anchor1, detail);
}

void criterion_4() {
    std::vector<double> vals;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        rng::Stream st(rng::derive(5150, seed));
        std::vector<std::vector<double>> G(200, std::vector<double>(8)),
            I(200, std::vector<double>(8));
        for (auto& v : G)
            for (auto& x : v) x = st.next_normal();
        for (auto& v : I)
            for (auto& x : v) x = st.next_normal();
        vals.push_back(std::abs(kl_avg_norm(VecSamples(G), VecSamples(I)).value));
    }
    std::sort(vals.begin(), vals.end());
    const double median = 0.5 * (vals[9] + vals[10]);
    char detail[64];
    std::snprintf(detail, sizeof(detail), "median |D| = %.4f", median);
    report(4, "same-distribution null", median <= 0.1, detail);
}

// random orthogonal matrix by Gram-Schmidt on a Gaussian matrix
std::vector<std::vector<double>> random_rotation(rng::Stream& st, std::size_t d) {
    std::vector<std::vector<double>> q(d, std::vector<double>(d));
    for (auto& row : q)
        for (auto& x : row) x = st.next_normal();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0;
            for (std::size_t k = 0; k < d; ++k) dot += q[i][k] * q[j][k];
            for (std::size_t k = 0; k < d; ++k) q[i][k] -= dot * q[j][k];
        }
        double norm = 0;
        for (double x : q[i]) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : q[i]) x /= norm;
    }
    return q;
}

void criterion_5() {
    SynthSpec spec;
    spec.subjects = 6;
    spec.samples_per_subject = 4;
    spec.dimension = 6;
    spec.between_spread = 2.0;
    spec.within_spread = 1.0;
    spec.seed = 31;
    const Dataset base = generate(spec);
    const auto ref = dataset_uniqueness_min(base, 42);

    double worst = 0;
    rng::Stream st(rng::derive(777, 0));
    for (int trial = 0; trial < 100; ++trial) {
        const auto q = random_rotation(st, spec.dimension);
        const double scale = 0.25 + 4.0 * st.next_double();
        std::vector<double> shift(spec.dimension);
        for (auto& x : shift) x = 10.0 * st.next_normal();

        auto recs = base.records();
        for (auto& r : recs) {
            std::vector<double> y(spec.dimension, 0.0);
            for (std::size_t i = 0; i < spec.dimension; ++i) {
                for (std::size_t k = 0; k < spec.dimension; ++k) y[i] += q[i][k] * r.vector[k];
                y[i] = scale * y[i] + shift[i];
            }
            r.vector = std::move(y);
        }
        const auto mapped = dataset_uniqueness_min(Dataset(spec.dimension, std::move(recs)), 42);
        worst = std::max({worst, std::abs(mapped.u - ref.u),
                          std::abs(*mapped.u_min - *ref.u_min)});
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "max |du| = %.3g over 100 trials", worst);
    report(5, "similarity invariance of u and u_min", worst <= 1e-9, detail);
}

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    SynthSpec spec;
    spec.subjects = 40;
    spec.samples_per_subject = 10;
    spec.dimension = 64;
    spec.between_spread = 3.0;
    spec.within_spread = 1.0;
    spec.seed = 7;
    const Dataset ds = generate(spec);
    const TwinDilution td = twin_dilution_check(ds, 0.5, 42);
    const double rel = std::abs(td.u_after - td.u_before) / td.u_before;
    const bool ok = rel < 0.02 && td.u_min_after >= 0.48 && td.u_min_after <= 0.52;
    const double dt = elapsed_s(t0);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "rel du = %.4f, u_min: %.4f -> %.4f, %.1fs", rel, td.u_min_before,
                  td.u_min_after, dt);
    report(6, "twin sensitivity (u stable, u_min collapses)", ok && dt < 120.0, detail);
}

void criterion_7() {
    const double ratios[] = {0.5, 1.0, 2.0, 4.0};
    int monotone = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<double> us;
        for (double ratio : ratios) {
            SynthSpec spec;
            spec.subjects = 10;
            spec.samples_per_subject = 10;
            spec.dimension = 16;
            spec.between_spread = ratio;
            spec.within_spread = 1.0;
            spec.seed = seed;
            us.push_back(dataset_uniqueness(generate(spec), 42).u);
        }
        bool strict = true;
        for (std::size_t i = 1; i < us.size(); ++i)
            if (!(us[i] > us[i - 1])) strict = false;
        if (strict) ++monotone;
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "%d of 5 seeds strictly increasing", monotone);
    report(7, "separation monotonicity", monotone >= 4, detail);
}

void criterion_8() {
    // two gender groups, each a tight sub-cluster of the whole
    int held = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<EmbeddingRecord> recs;
        std::map<std::uint32_t, SubjectMeta> meta;
        const std::size_t per_group = 5, m = 8, dim = 8;
        for (std::size_t grp = 0; grp < 2; ++grp) {
            const double offset = grp == 0 ? 0.0 : 40.0;
            for (std::size_t s = 0; s < per_group; ++s) {
                const std::uint32_t id = static_cast<std::uint32_t>(grp * per_group + s);
                rng::Stream mean_st(rng::derive(seed, 900 + grp, s));
                std::vector<double> mean(dim);
                for (auto& x : mean) x = offset + 2.0 * mean_st.next_normal();
                rng::Stream st(rng::derive(seed, 910 + grp, s));
                for (std::uint32_t j = 0; j < m; ++j) {
                    std::vector<double> v(dim);
                    for (std::size_t k = 0; k < dim; ++k) v[k] = mean[k] + st.next_normal();
                    recs.push_back({id, j, std::move(v)});
                }
                SubjectMeta sm;
                sm.subject_id = id;
                sm.gender = grp == 0 ? Gender::F : Gender::M;
                meta.emplace(id, sm);
            }
        }
        Dataset ds(dim, std::move(recs), std::move(meta));
        const double full_u = dataset_uniqueness(ds, 42).u;
        bool all_below = true;
        for (const auto& bucket : split_by_group(ds, GroupKind::gender)) {
            if (!bucket.usable) continue;
            if (dataset_uniqueness(bucket.data, 42).u > full_u) all_below = false;
        }
        if (all_below) ++held;
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "bucket u <= full u in %d of 5 seeds", held);
    report(8, "group-split analogue", held >= 4);
}

void criterion_9() {
    auto gray = [](std::size_t w, std::size_t h, std::vector<std::uint16_t> px) {
        Image img;
        img.width = w;
        img.height = h;
        img.channels = 1;
        img.depth = 8;
        img.pixels = std::move(px);
        return img;
    };
    const double h0 = image_entropy(gray(4, 4, std::vector<std::uint16_t>(16, 3)));
    std::vector<std::uint16_t> half(16, 0);
    for (std::size_t i = 8; i < 16; ++i) half[i] = 200;
    const double h1 = image_entropy(gray(4, 4, std::move(half)));
    std::vector<std::uint16_t> all(256);
    for (std::size_t i = 0; i < 256; ++i) all[i] = static_cast<std::uint16_t>(i);
    const double h8 = image_entropy(gray(16, 16, std::move(all)));

    bool bound_ok = true;
    std::mt19937 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t w = 1 + gen() % 16, h = 1 + gen() % 16;
        std::vector<std::uint16_t> px(w * h);
        for (auto& p : px) p = static_cast<std::uint16_t>(gen() % 256);
        if (image_entropy(gray(w, h, std::move(px))) >
            std::log2(double(w * h)) + 1e-12)
            bound_ok = false;
    }
    const bool ok = std::abs(h0) <= 1e-12 && std::abs(h1 - 1.0) <= 1e-12 &&
                    std::abs(h8 - 8.0) <= 1e-12 && bound_ok;
    char detail[96];
    std::snprintf(detail, sizeof(detail), "H = %.1e, %.12f, %.12f", h0, h1, h8);
    report(9, "entropy exactness and pixel-count bound", ok, detail);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EMBUNIQ_BIN) + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_10() {
    const auto dir = fs::temp_directory_path() / "uniq_acceptance";
    fs::create_directories(dir);
    const std::string sim =
        "simulate --subjects 12 --samples 8 --dim 16 --sep 2.5 --seed 42 --out ";
    bool ok = run_cli(sim + (dir / "s1").string()) == 0 &&
              run_cli(sim + (dir / "s2").string()) == 0;
    ok = ok && slurp(dir / "s1.uemb") == slurp(dir / "s2.uemb") &&
         slurp(dir / "s1.meta.csv") == slurp(dir / "s2.meta.csv");

    const std::string score = "score --input " + (dir / "s1.uemb").string() + " --seed 42";
    ok = ok && run_cli(score + " --threads 1 --out " + (dir / "t1").string()) == 0;
    ok = ok && run_cli(score + " --threads 16 --out " + (dir / "t16").string()) == 0;
    ok = ok && run_cli(score + " --threads 16 --out " + (dir / "t16b").string()) == 0;
    ok = ok && slurp(dir / "t1.json") == slurp(dir / "t16.json");
    ok = ok && slurp(dir / "t16.json") == slurp(dir / "t16b.json");
    ok = ok && slurp(dir / "t1.tsv") == slurp(dir / "t16.tsv");
    report(10, "byte-identical outputs under concurrency", ok);
}

void criterion_11() {
    SynthSpec spec;
    spec.subjects = 1000;
    spec.samples_per_subject = 50;
    spec.dimension = 128;
    spec.between_spread = 3.0;
    spec.within_spread = 1.0;
    spec.seed = 13;
    const Dataset ds = generate(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = dataset_uniqueness(ds, 42);
    const double dt = elapsed_s(t0);
    char detail[96];
    std::snprintf(detail, sizeof(detail), "1000x50x128 scored in %.1fs (u = %.4f)", dt, rep.u);
    report(11, "subsampled scoring throughput", dt < 60.0, detail);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
