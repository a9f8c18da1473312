#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vsf/errors.hpp"
#include "vsf/field.hpp"

namespace vsf {

enum class FileFormat { Auto, Csv, Binary };

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "field binary format is little-endian; big-endian hosts unsupported");

constexpr char kFieldMagic[4] = {'V', 'S', 'F', '1'};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string dims_string(const std::vector<std::size_t>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(dims[i]);
    }
    return s;
}

// Parses "<n1>x<n2>[x...]" with positive entries.
inline std::vector<std::size_t> parse_dims_string(const std::string& text, const char* what) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t next = text.find('x', pos);
        std::string tok = text.substr(pos, next == std::string::npos ? next : next - pos);
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
            throw bad_header_error(std::string(what) + ": malformed dims '" + text + "'");
        unsigned long long n = std::strtoull(tok.c_str(), nullptr, 10);
        if (n == 0) throw bad_header_error(std::string(what) + ": zero dimension in '" + text + "'");
        dims.push_back(static_cast<std::size_t>(n));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (dims.empty()) throw bad_header_error(std::string(what) + ": empty dims");
    return dims;
}

inline FileFormat format_for_path(const std::filesystem::path& path, FileFormat requested) {
    if (requested != FileFormat::Auto) return requested;
    auto ext = path.extension().string();
    return (ext == ".vsf" || ext == ".vsn" || ext == ".bin") ? FileFormat::Binary : FileFormat::Csv;
}

}  // namespace detail

inline void write_field(const Field& field, const std::filesystem::path& path,
                        FileFormat format = FileFormat::Auto) {
    format = detail::format_for_path(path, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());

    if (format == FileFormat::Binary) {
        out.write(detail::kFieldMagic, 4);
        const std::uint32_t d = static_cast<std::uint32_t>(field.rank());
        out.write(reinterpret_cast<const char*>(&d), sizeof d);
        for (std::size_t n : field.dims()) {
            const std::uint32_t n32 = static_cast<std::uint32_t>(n);
            out.write(reinterpret_cast<const char*>(&n32), sizeof n32);
        }
        out.write(reinterpret_cast<const char*>(field.values().data()),
                  static_cast<std::streamsize>(field.size() * sizeof(double)));
    } else {
        out << "# vsfield v1 dims=" << detail::dims_string(field.dims()) << '\n';
        const std::size_t row_len = field.dims().back();
        const auto& v = field.values();
        for (std::size_t i = 0; i < v.size(); i += row_len) {
            for (std::size_t j = 0; j < row_len; ++j) {
                if (j) out << ',';
                out << detail::format_double(v[i + j]);
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace detail {

inline Field read_field_binary(std::ifstream& in, const std::string& name) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFieldMagic, 4) != 0)
        throw bad_header_error(name + ": bad binary magic");
    std::uint32_t d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    if (!in || d == 0 || d > 16) throw bad_header_error(name + ": bad rank");
    std::vector<std::size_t> dims(d);
    std::size_t total = 1;
    for (auto& dim : dims) {
        std::uint32_t n = 0;
        in.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!in || n == 0) throw bad_header_error(name + ": bad dimension");
        dim = n;
        total *= n;
    }
    std::vector<double> values(total);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in || static_cast<std::size_t>(in.gcount()) != total * sizeof(double))
        throw dimension_mismatch_error(name + ": value payload shorter than dims " +
                                       dims_string(dims) + " require");
    return Field(std::move(dims), std::move(values));
}

inline Field read_field_csv(std::ifstream& in, const std::string& name) {
    std::string header;
    if (!std::getline(in, header)) throw bad_header_error(name + ": empty file");
    const std::string prefix = "# vsfield v1 dims=";
    if (header.rfind(prefix, 0) != 0)
        throw bad_header_error(name + ": missing '# vsfield v1' header");
    auto dims = parse_dims_string(header.substr(prefix.size()), name.c_str());
    std::size_t total = 1;
    for (std::size_t n : dims) total *= n;

    std::vector<double> values;
    values.reserve(total);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        std::size_t col = 0, pos = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find(',', pos);
            std::string tok = line.substr(pos, next == std::string::npos ? next : next - pos);
            ++col;
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            // Reject empty / trailing-garbage tokens; strtod skips leading blanks.
            while (end && *end == ' ') ++end;
            if (end == tok.c_str() || (end && *end != '\0'))
                throw bad_cell_error(name + ": parse error at row " + std::to_string(row) +
                                     ", column " + std::to_string(col) + ": '" + tok +
                                     "' is not a number");
            values.push_back(v);
            if (next == std::string::npos) break;
            pos = next + 1;
        }
    }
    if (values.size() != total)
        throw dimension_mismatch_error(name + ": dims " + dims_string(dims) + " expect " +
                                       std::to_string(total) + " values, file has " +
                                       std::to_string(values.size()));
    return Field(std::move(dims), std::move(values));
}

}  // namespace detail

/// Reads a field file, sniffing binary vs CSV from the leading bytes.
inline Field read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    char probe[4] = {0, 0, 0, 0};
    in.read(probe, 4);
    in.clear();
    in.seekg(0);
    if (std::memcmp(probe, detail::kFieldMagic, 4) == 0)
        return detail::read_field_binary(in, path.string());
    return detail::read_field_csv(in, path.string());
}

}  // namespace vsf
