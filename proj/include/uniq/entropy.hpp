#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "uniq/errors.hpp"

namespace uniq {

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;  // 1 = gray, 3 = RGB
    std::size_t depth = 8;     // bits per channel, 8 or 16
    std::vector<std::uint16_t> pixels;  // row-major, channel-interleaved
};

// Histogram entropy in bits. Each pixel's full color tuple is one symbol;
// H = -sum p_c log2 p_c over colors present in the image.
inline double image_entropy(const Image& img) {
    const std::size_t n = img.width * img.height;
    if (n == 0) throw EligibilityError("zero-area image");

    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    counts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t key = 0;
        for (std::size_t c = 0; c < img.channels; ++c)
            key = (key << 16) | img.pixels[i * img.channels + c];
        ++counts[key];
    }
    double h = 0.0;
    for (const auto& [key, count] : counts) {
        const double p = static_cast<double>(count) / static_cast<double>(n);
        h -= p * std::log2(p);
    }
    return h;
}

// Per-channel alternative: one histogram per channel, reported separately.
inline std::vector<double> image_entropy_per_channel(const Image& img) {
    const std::size_t n = img.width * img.height;
    if (n == 0) throw EligibilityError("zero-area image");
    std::vector<double> out;
    for (std::size_t c = 0; c < img.channels; ++c) {
        std::unordered_map<std::uint16_t, std::uint64_t> counts;
        for (std::size_t i = 0; i < n; ++i) ++counts[img.pixels[i * img.channels + c]];
        double h = 0.0;
        for (const auto& [v, count] : counts) {
            const double p = static_cast<double>(count) / static_cast<double>(n);
            h -= p * std::log2(p);
        }
        out.push_back(h);
    }
    return out;
}

namespace pnm_detail {

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    bool eof() const { return pos >= buf.size(); }

    void skip_space_and_comments() {
        while (!eof()) {
            const char ch = buf[pos];
            if (ch == '#') {
                while (!eof() && buf[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::uint64_t next_uint(const char* what) {
        skip_space_and_comments();
        if (eof())
            throw IoError(path + ": missing " + std::string(what) + " at offset " +
                          std::to_string(pos));
        std::uint64_t v = 0;
        bool any = false;
        while (!eof() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
            v = v * 10 + static_cast<std::uint64_t>(buf[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any)
            throw IoError(path + ": bad " + std::string(what) + " at offset " +
                          std::to_string(pos));
        return v;
    }
};

}  // namespace pnm_detail

// Reads PGM (P2/P5) and PPM (P3/P6), plain or binary, maxval up to 65535.
// Binary 16-bit samples are big-endian per the netpbm convention.
inline Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 2 || buf[0] != 'P')
        throw IoError(path + ": bad magic at offset 0");
    const char kind = buf[1];
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        throw IoError(path + ": unsupported format P" + std::string(1, kind));
    const bool binary = (kind == '5' || kind == '6');
    const std::size_t channels = (kind == '3' || kind == '6') ? 3 : 1;

    pnm_detail::Reader rd{buf, 2, path};
    const std::uint64_t width = rd.next_uint("width");
    const std::uint64_t height = rd.next_uint("height");
    const std::uint64_t maxval = rd.next_uint("maxval");
    if (width == 0 || height == 0)
        throw IoError(path + ": zero dimension at offset " + std::to_string(rd.pos));
    if (maxval == 0 || maxval > 65535)
        throw IoError(path + ": maxval out of range at offset " + std::to_string(rd.pos));

    Image img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.depth = maxval > 255 ? 16 : 8;
    const std::size_t total = static_cast<std::size_t>(width * height * channels);
    img.pixels.resize(total);

    if (binary) {
        // exactly one whitespace byte separates the header from the raster
        if (rd.eof() || !std::isspace(static_cast<unsigned char>(buf[rd.pos])))
            throw IoError(path + ": missing raster separator at offset " +
                          std::to_string(rd.pos));
        std::size_t off = rd.pos + 1;
        const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
        if (off + total * bytes_per_sample > buf.size())
            throw IoError(path + ": truncated raster at offset " + std::to_string(buf.size()));
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + off;
        for (std::size_t i = 0; i < total; ++i) {
            std::uint16_t v;
            if (bytes_per_sample == 2) {
                v = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
            } else {
                v = p[i];
            }
            if (v > maxval)
                throw IoError(path + ": sample exceeds maxval at offset " +
                              std::to_string(off + i * bytes_per_sample));
            img.pixels[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < total; ++i) {
            const std::uint64_t v = rd.next_uint("sample");
            if (v > maxval)
                throw IoError(path + ": sample exceeds maxval at offset " +
                              std::to_string(rd.pos));
            img.pixels[i] = static_cast<std::uint16_t>(v);
        }
    }
    return img;
}

// Nearest-neighbor resampling; source index = floor(i * src / dst), so an
// identity resample is pixel-identical.
inline Image resample(const Image& img, std::size_t new_width, std::size_t new_height) {
    if (new_width == 0 || new_height == 0)
        throw EligibilityError("target dimensions must be >= 1");
    Image out;
    out.width = new_width;
    out.height = new_height;
    out.channels = img.channels;
    out.depth = img.depth;
    out.pixels.resize(new_width * new_height * img.channels);
    for (std::size_t y = 0; y < new_height; ++y) {
        const std::size_t sy = y * img.height / new_height;
        for (std::size_t x = 0; x < new_width; ++x) {
            const std::size_t sx = x * img.width / new_width;
            for (std::size_t c = 0; c < img.channels; ++c)
                out.pixels[(y * new_width + x) * img.channels + c] =
                    img.pixels[(sy * img.width + sx) * img.channels + c];
        }
    }
    return out;
}

}  // namespace uniq
