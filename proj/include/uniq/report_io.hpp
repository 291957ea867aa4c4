#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "uniq/errors.hpp"
#include "uniq/uniqueness.hpp"

namespace uniq {

namespace report_detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace report_detail

// JSON report with a fixed key order and scores printed with 6 decimal
// digits, so identical runs serialize byte-identically.
inline std::string report_to_json(const UniquenessReport& r) {
    using report_detail::compact;
    using report_detail::fixed6;
    std::ostringstream os;
    os << "{\n";
    os << "  \"format_version\": 1,\n";
    os << "  \"seed\": " << r.seed << ",\n";
    os << "  \"epsilon\": " << compact(r.epsilon) << ",\n";
    os << "  \"dimension\": " << r.dimension << ",\n";
    os << "  \"subjects\": " << r.subject_count << ",\n";
    os << "  \"samples\": " << r.sample_count << ",\n";
    os << "  \"eligible_subjects\": " << r.per_subject.size() << ",\n";
    os << "  \"skipped_subjects\": [";
    for (std::size_t i = 0; i < r.skipped_subjects.size(); ++i) {
        if (i) os << ", ";
        os << r.skipped_subjects[i];
    }
    os << "],\n";
    os << "  \"d_bar\": " << fixed6(r.d_bar) << ",\n";
    os << "  \"u\": " << fixed6(r.u) << ",\n";
    os << "  \"d_bar_min\": " << (r.d_bar_min ? fixed6(*r.d_bar_min) : "null") << ",\n";
    os << "  \"u_min\": " << (r.u_min ? fixed6(*r.u_min) : "null") << ",\n";
    os << "  \"per_subject\": [\n";
    for (std::size_t i = 0; i < r.per_subject.size(); ++i) {
        const auto& s = r.per_subject[i];
        os << "    {\"subject_id\": " << s.subject_id
           << ", \"divergence\": " << fixed6(s.divergence)
           << ", \"genuine_size\": " << s.genuine_size
           << ", \"impostor_size\": " << s.impostor_size
           << ", \"r\": " << s.params_used.r
           << ", \"n\": " << s.params_used.n
           << ", \"floored_terms\": " << s.floored_terms
           << ", \"min_impostor_id\": "
           << (s.min_impostor_id ? std::to_string(*s.min_impostor_id) : "null")
           << ", \"min_divergence\": "
           << (s.min_divergence ? fixed6(*s.min_divergence) : "null") << "}"
           << (i + 1 < r.per_subject.size() ? "," : "") << "\n";
    }
    os << "  ]\n";
    os << "}\n";
    return os.str();
}

inline std::string report_to_tsv(const UniquenessReport& r) {
    using report_detail::fixed6;
    std::ostringstream os;
    os << "subject_id\tdivergence\tgenuine_size\timpostor_size\tmin_impostor_id\n";
    for (const auto& s : r.per_subject) {
        os << s.subject_id << '\t' << fixed6(s.divergence) << '\t' << s.genuine_size << '\t'
           << s.impostor_size << '\t';
        if (s.min_impostor_id) os << *s.min_impostor_id;
        os << '\n';
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(path + ": write failed");
}

}  // namespace uniq
