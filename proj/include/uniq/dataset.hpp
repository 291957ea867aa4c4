#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "uniq/errors.hpp"

namespace uniq {

enum class Gender { F, M, U };

inline char gender_char(Gender g) {
    switch (g) {
        case Gender::F: return 'F';
        case Gender::M: return 'M';
        default: return 'U';
    }
}

struct SubjectMeta {
    std::uint32_t subject_id = 0;
    Gender gender = Gender::U;
    std::optional<int> age;
};

struct EmbeddingRecord {
    std::uint32_t subject_id = 0;
    std::uint32_t sample_id = 0;
    std::vector<double> vector;
};

enum class GroupKind { gender, age_decade };

struct GroupKey {
    GroupKind kind;
    std::string value;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline bool parse_u32(const std::string& s, std::uint32_t& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || v > UINT32_MAX) return false;
    out = static_cast<std::uint32_t>(v);
    return true;
}

inline bool parse_f64(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc{} && p == t.data() + t.size();
}

inline void put_u32_le(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64_le(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

// Immutable collection of embedding records grouped by subject. Records are
// stored sorted by (subject_id, sample_id) so iteration order never depends
// on input file order.
class Dataset {
public:
    struct Subject {
        std::uint32_t id;
        std::size_t first;  // index of first sample
        std::size_t count;
    };

    Dataset(std::size_t dimension, std::vector<EmbeddingRecord> records,
            std::map<std::uint32_t, SubjectMeta> meta = {})
        : dimension_(dimension), meta_(std::move(meta)) {
        if (dimension_ == 0) throw EligibilityError("dataset dimension must be >= 1");
        std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
            return std::tie(a.subject_id, a.sample_id) < std::tie(b.subject_id, b.sample_id);
        });
        data_.reserve(records.size() * dimension_);
        subject_ids_.reserve(records.size());
        sample_ids_.reserve(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (r.vector.size() != dimension_)
                throw EligibilityError("record for subject " + std::to_string(r.subject_id) +
                                       " has wrong dimension");
            for (double v : r.vector)
                if (!std::isfinite(v))
                    throw EligibilityError("non-finite value in record for subject " +
                                           std::to_string(r.subject_id));
            if (i > 0 && records[i - 1].subject_id == r.subject_id &&
                records[i - 1].sample_id == r.sample_id)
                throw EligibilityError("duplicate (subject_id, sample_id) = (" +
                                       std::to_string(r.subject_id) + ", " +
                                       std::to_string(r.sample_id) + ")");
            if (subjects_.empty() || subjects_.back().id != r.subject_id)
                subjects_.push_back({r.subject_id, i, 0});
            ++subjects_.back().count;
            subject_ids_.push_back(r.subject_id);
            sample_ids_.push_back(r.sample_id);
            data_.insert(data_.end(), r.vector.begin(), r.vector.end());
        }
    }

    std::size_t dimension() const { return dimension_; }
    std::size_t sample_count() const { return subject_ids_.size(); }
    std::size_t subject_count() const { return subjects_.size(); }

    std::span<const double> sample(std::size_t i) const {
        return {data_.data() + i * dimension_, dimension_};
    }
    std::uint32_t sample_subject(std::size_t i) const { return subject_ids_[i]; }
    std::uint32_t sample_id(std::size_t i) const { return sample_ids_[i]; }

    const std::vector<Subject>& subjects() const { return subjects_; }

    const Subject* find_subject(std::uint32_t id) const {
        auto it = std::lower_bound(subjects_.begin(), subjects_.end(), id,
                                   [](const Subject& s, std::uint32_t v) { return s.id < v; });
        if (it == subjects_.end() || it->id != id) return nullptr;
        return &*it;
    }

    const std::map<std::uint32_t, SubjectMeta>& metadata() const { return meta_; }

    Dataset with_metadata(std::map<std::uint32_t, SubjectMeta> meta) const {
        Dataset copy = *this;
        copy.meta_ = std::move(meta);
        return copy;
    }

    std::vector<EmbeddingRecord> records() const {
        std::vector<EmbeddingRecord> out;
        out.reserve(sample_count());
        for (std::size_t i = 0; i < sample_count(); ++i) {
            auto s = sample(i);
            out.push_back({subject_ids_[i], sample_ids_[i], {s.begin(), s.end()}});
        }
        return out;
    }

    // Restriction to a subset of subjects; metadata for retained subjects is kept.
    Dataset restrict_to(const std::set<std::uint32_t>& keep) const {
        std::vector<EmbeddingRecord> recs;
        for (std::size_t i = 0; i < sample_count(); ++i) {
            if (!keep.count(subject_ids_[i])) continue;
            auto s = sample(i);
            recs.push_back({subject_ids_[i], sample_ids_[i], {s.begin(), s.end()}});
        }
        std::map<std::uint32_t, SubjectMeta> meta;
        for (const auto& [id, m] : meta_)
            if (keep.count(id)) meta.emplace(id, m);
        return Dataset(dimension_, std::move(recs), std::move(meta));
    }

    // --- CSV ingestion: header `subject_id,sample_id,f0,...,f{D-1}` ---
    static Dataset load_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError(path + ": cannot open");
        std::string line;
        if (!std::getline(in, line)) throw IoError(path + ": empty file");
        auto header = detail::split_csv_line(line);
        if (header.size() < 3 || detail::trim(header[0]) != "subject_id" ||
            detail::trim(header[1]) != "sample_id")
            throw IoError(path + ": bad header, expected subject_id,sample_id,f0,...");
        const std::size_t dim = header.size() - 2;
        const std::size_t fields = header.size();

        std::vector<EmbeddingRecord> recs;
        std::size_t row = 1;
        while (std::getline(in, line)) {
            ++row;
            if (detail::trim(line).empty()) continue;
            auto f = detail::split_csv_line(line);
            if (f.size() != fields)
                throw IoError(path + ": row " + std::to_string(row) + ": expected " +
                              std::to_string(fields) + " fields, got " + std::to_string(f.size()));
            EmbeddingRecord r;
            if (!detail::parse_u32(f[0], r.subject_id))
                throw IoError(path + ": row " + std::to_string(row) + ": bad subject_id");
            if (!detail::parse_u32(f[1], r.sample_id))
                throw IoError(path + ": row " + std::to_string(row) + ": bad sample_id");
            r.vector.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                if (!detail::parse_f64(f[d + 2], r.vector[d]))
                    throw IoError(path + ": row " + std::to_string(row) + ": field f" +
                                  std::to_string(d) + " is not numeric");
                if (!std::isfinite(r.vector[d]))
                    throw IoError(path + ": row " + std::to_string(row) +
                                  ": non-finite value in f" + std::to_string(d));
            }
            recs.push_back(std::move(r));
        }
        try {
            return Dataset(dim, std::move(recs));
        } catch (const EligibilityError& e) {
            throw IoError(path + ": " + e.what());
        }
    }

    // --- UEMB binary format ---
    // magic "UEMB", version byte 1, then little-endian u32 dimension,
    // u64 record count, then per record: u32 subject_id, u32 sample_id,
    // dimension x float32.
    static Dataset load_binary(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError(path + ": cannot open");
        std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
        const std::size_t size = buf.size();

        if (size < 4 || std::memcmp(p, "UEMB", 4) != 0)
            throw IoError(path + ": bad magic at offset 0");
        if (size < 5) throw IoError(path + ": truncated header at offset 4");
        if (p[4] != 1)
            throw IoError(path + ": unsupported version " + std::to_string(p[4]) + " at offset 4");
        if (size < 17) throw IoError(path + ": truncated header at offset " + std::to_string(size));
        const std::uint32_t dim = detail::get_u32_le(p + 5);
        const std::uint64_t count = detail::get_u64_le(p + 9);
        if (dim == 0) throw IoError(path + ": zero dimension at offset 5");
        if (count == 0) throw IoError(path + ": zero record count at offset 9");

        const std::size_t rec_size = 8 + static_cast<std::size_t>(dim) * 4;
        std::vector<EmbeddingRecord> recs;
        recs.reserve(count);
        std::size_t off = 17;
        for (std::uint64_t i = 0; i < count; ++i) {
            if (off + rec_size > size)
                throw IoError(path + ": truncated payload at offset " + std::to_string(off) +
                              " (expected " + std::to_string(count) + " records, got " +
                              std::to_string(i) + ")");
            EmbeddingRecord r;
            r.subject_id = detail::get_u32_le(p + off);
            r.sample_id = detail::get_u32_le(p + off + 4);
            r.vector.resize(dim);
            for (std::uint32_t d = 0; d < dim; ++d) {
                std::uint32_t bits = detail::get_u32_le(p + off + 8 + 4 * d);
                float f;
                std::memcpy(&f, &bits, 4);
                r.vector[d] = static_cast<double>(f);
            }
            if (!std::all_of(r.vector.begin(), r.vector.end(),
                             [](double v) { return std::isfinite(v); }))
                throw IoError(path + ": non-finite value at offset " + std::to_string(off));
            recs.push_back(std::move(r));
            off += rec_size;
        }
        try {
            return Dataset(dim, std::move(recs));
        } catch (const EligibilityError& e) {
            throw IoError(path + ": " + e.what());
        }
    }

    void write_binary(const std::string& path) const {
        std::string buf;
        buf.reserve(17 + sample_count() * (8 + dimension_ * 4));
        buf.append("UEMB");
        buf.push_back(1);
        detail::put_u32_le(buf, static_cast<std::uint32_t>(dimension_));
        detail::put_u64_le(buf, static_cast<std::uint64_t>(sample_count()));
        for (std::size_t i = 0; i < sample_count(); ++i) {
            detail::put_u32_le(buf, subject_ids_[i]);
            detail::put_u32_le(buf, sample_ids_[i]);
            for (double v : sample(i)) {
                const float f = static_cast<float>(v);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                detail::put_u32_le(buf, bits);
            }
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path + ": cannot open for writing");
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError(path + ": write failed");
    }

    void write_metadata_csv(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError(path + ": cannot open for writing");
        out << "subject_id,gender,age\n";
        for (const auto& [id, m] : meta_) {
            out << id << ',' << gender_char(m.gender) << ',';
            if (m.age) out << *m.age;
            out << '\n';
        }
        if (!out) throw IoError(path + ": write failed");
    }

private:
    std::size_t dimension_;
    std::vector<double> data_;  // sample_count x dimension, row-major
    std::vector<std::uint32_t> subject_ids_;
    std::vector<std::uint32_t> sample_ids_;
    std::vector<Subject> subjects_;
    std::map<std::uint32_t, SubjectMeta> meta_;
};

// Metadata CSV: header `subject_id,gender,age`, gender in {F,M,U}, age blank
// or integer years in [0,130]. Rows naming subjects absent from the dataset
// are skipped; the skip count is reported through `skipped_rows`.
inline Dataset load_metadata(const std::string& path, const Dataset& ds,
                             std::size_t* skipped_rows = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    auto header = detail::split_csv_line(line);
    if (header.size() != 3 || detail::trim(header[0]) != "subject_id" ||
        detail::trim(header[1]) != "gender" || detail::trim(header[2]) != "age")
        throw IoError(path + ": bad header, expected subject_id,gender,age");

    std::map<std::uint32_t, SubjectMeta> meta;
    std::size_t skipped = 0;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3)
            throw IoError(path + ": row " + std::to_string(row) + ": expected 3 fields");
        SubjectMeta m;
        if (!detail::parse_u32(f[0], m.subject_id))
            throw IoError(path + ": row " + std::to_string(row) + ": bad subject_id");
        const std::string g = detail::trim(f[1]);
        if (g == "F") m.gender = Gender::F;
        else if (g == "M") m.gender = Gender::M;
        else if (g == "U") m.gender = Gender::U;
        else throw IoError(path + ": row " + std::to_string(row) + ": gender must be F|M|U");
        const std::string a = detail::trim(f[2]);
        if (!a.empty()) {
            std::uint32_t age;
            if (!detail::parse_u32(a, age) || age > 130)
                throw IoError(path + ": row " + std::to_string(row) +
                              ": age must be blank or an integer in [0,130]");
            m.age = static_cast<int>(age);
        }
        if (ds.find_subject(m.subject_id) == nullptr) {
            ++skipped;
            continue;
        }
        if (meta.count(m.subject_id))
            throw IoError(path + ": row " + std::to_string(row) + ": duplicate subject_id " +
                          std::to_string(m.subject_id));
        meta.emplace(m.subject_id, m);
    }
    if (skipped_rows) *skipped_rows = skipped;
    return ds.with_metadata(std::move(meta));
}

struct GroupBucket {
    GroupKey key;
    Dataset data;
    bool usable;  // at least 2 subjects
};

// Splits a dataset by gender or by 10-year age block. Subjects without the
// needed annotation land in the "U"/"unknown" bucket. Buckets are disjoint
// by subject and jointly exhaustive.
inline std::vector<GroupBucket> split_by_group(const Dataset& ds, GroupKind kind) {
    std::map<std::string, std::set<std::uint32_t>> groups;
    const auto& meta = ds.metadata();

    if (kind == GroupKind::age_decade) {
        bool any_age = false;
        for (const auto& [id, m] : meta)
            if (m.age) any_age = true;
        if (!any_age) throw EligibilityError("no age annotations");
    }

    for (const auto& subj : ds.subjects()) {
        std::string label;
        auto it = meta.find(subj.id);
        if (kind == GroupKind::gender) {
            const Gender g = (it == meta.end()) ? Gender::U : it->second.gender;
            label = std::string(1, gender_char(g));
        } else {
            if (it == meta.end() || !it->second.age) {
                label = "unknown";
            } else {
                const int decade = *it->second.age / 10;
                label = std::to_string(decade * 10) + "-" + std::to_string(decade * 10 + 9);
            }
        }
        groups[label].insert(subj.id);
    }

    // Order buckets deterministically: age decades numerically, unknown last.
    std::vector<std::string> labels;
    for (const auto& [label, ids] : groups) labels.push_back(label);
    if (kind == GroupKind::age_decade) {
        std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
            if (a == "unknown") return false;
            if (b == "unknown") return true;
            return std::stoi(a) < std::stoi(b);
        });
    }

    std::vector<GroupBucket> out;
    for (const auto& label : labels) {
        const auto& ids = groups[label];
        Dataset restricted = ds.restrict_to(ids);
        const bool usable = restricted.subject_count() >= 2;
        out.push_back({GroupKey{kind, label}, std::move(restricted), usable});
    }
    return out;
}

// --- Sample-set views used by the divergence estimator ---

// Contiguous block of one subject's samples.
class SubjectSamples {
public:
    SubjectSamples(const Dataset& ds, const Dataset::Subject& subj)
        : ds_(&ds), first_(subj.first), count_(subj.count) {}
    std::size_t size() const { return count_; }
    std::span<const double> operator[](std::size_t i) const { return ds_->sample(first_ + i); }

private:
    const Dataset* ds_;
    std::size_t first_, count_;
};

// All samples except one subject's contiguous block, optionally truncated
// to the first `limit` samples in dataset order.
class ComplementSamples {
public:
    ComplementSamples(const Dataset& ds, const Dataset::Subject& excl, std::size_t limit = 0)
        : ds_(&ds), excl_first_(excl.first), excl_count_(excl.count) {
        size_ = ds.sample_count() - excl_count_;
        if (limit != 0 && limit < size_) size_ = limit;
    }
    std::size_t size() const { return size_; }
    std::span<const double> operator[](std::size_t i) const {
        return ds_->sample(i < excl_first_ ? i : i + excl_count_);
    }

private:
    const Dataset* ds_;
    std::size_t excl_first_, excl_count_, size_;
};

}  // namespace uniq
