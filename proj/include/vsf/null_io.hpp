#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "vsf/errors.hpp"
#include "vsf/field_io.hpp"
#include "vsf/null_dist.hpp"

namespace vsf {

namespace detail {

constexpr char kNullMagic[4] = {'V', 'S', 'N', '1'};

inline void validate_table(const NullTable& table, const std::string& name) {
    if (table.reps != table.sorted_values.size())
        throw dimension_mismatch_error(name + ": reps " + std::to_string(table.reps) +
                                       " does not match value count " +
                                       std::to_string(table.sorted_values.size()));
    double prev = -1.0;
    for (double v : table.sorted_values) {
        if (!(v >= 0.0)) throw bad_cell_error(name + ": table values must be non-negative");
        if (v < prev) throw bad_cell_error(name + ": table values must be ascending");
        prev = v;
    }
}

}  // namespace detail

inline void write_null_table(const NullTable& table, const std::filesystem::path& path,
                             FileFormat format = FileFormat::Auto) {
    format = detail::format_for_path(path, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    if (format == FileFormat::Binary) {
        out.write(detail::kNullMagic, 4);
        const std::uint32_t d = static_cast<std::uint32_t>(table.d);
        const std::uint32_t grid = static_cast<std::uint32_t>(table.grid_n);
        const std::uint32_t reps = static_cast<std::uint32_t>(table.reps);
        const std::uint64_t seed = table.master_seed;
        out.write(reinterpret_cast<const char*>(&d), sizeof d);
        out.write(reinterpret_cast<const char*>(&grid), sizeof grid);
        out.write(reinterpret_cast<const char*>(&reps), sizeof reps);
        out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
        out.write(reinterpret_cast<const char*>(table.sorted_values.data()),
                  static_cast<std::streamsize>(table.reps * sizeof(double)));
    } else {
        out << "# vsnull v1 d=" << table.d << " grid=" << table.grid_n << " reps=" << table.reps
            << " seed=" << table.master_seed << '\n';
        for (double v : table.sorted_values) out << detail::format_double(v) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline NullTable read_null_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    const std::string name = path.string();

    char probe[4] = {0, 0, 0, 0};
    in.read(probe, 4);
    NullTable table;
    if (std::memcmp(probe, detail::kNullMagic, 4) == 0) {
        std::uint32_t d = 0, grid = 0, reps = 0;
        std::uint64_t seed = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof d);
        in.read(reinterpret_cast<char*>(&grid), sizeof grid);
        in.read(reinterpret_cast<char*>(&reps), sizeof reps);
        in.read(reinterpret_cast<char*>(&seed), sizeof seed);
        if (!in || d == 0 || reps == 0) throw bad_header_error(name + ": bad binary header");
        table.d = d;
        table.grid_n = grid;
        table.reps = reps;
        table.master_seed = seed;
        table.sorted_values.resize(reps);
        in.read(reinterpret_cast<char*>(table.sorted_values.data()),
                static_cast<std::streamsize>(reps * sizeof(double)));
        if (!in || static_cast<std::size_t>(in.gcount()) != reps * sizeof(double))
            throw dimension_mismatch_error(name + ": truncated value payload");
    } else {
        in.clear();
        in.seekg(0);
        std::string header;
        if (!std::getline(in, header)) throw bad_header_error(name + ": empty file");
        unsigned long long d = 0, grid = 0, reps = 0, seed = 0;
        if (std::sscanf(header.c_str(), "# vsnull v1 d=%llu grid=%llu reps=%llu seed=%llu",
                        &d, &grid, &reps, &seed) != 4 ||
            d == 0 || reps == 0)
            throw bad_header_error(name + ": missing '# vsnull v1' header");
        table.d = d;
        table.grid_n = grid;
        table.reps = reps;
        table.master_seed = seed;
        table.sorted_values.reserve(reps);
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++row;
            char* end = nullptr;
            const double v = std::strtod(line.c_str(), &end);
            if (end == line.c_str())
                throw bad_cell_error(name + ": parse error at row " + std::to_string(row) +
                                     ", column 1: '" + line + "' is not a number");
            table.sorted_values.push_back(v);
        }
        if (table.sorted_values.size() != reps)
            throw dimension_mismatch_error(name + ": header declares " + std::to_string(reps) +
                                           " values, file has " +
                                           std::to_string(table.sorted_values.size()));
    }
    detail::validate_table(table, name);
    return table;
}

/// Disk cache for tables: building one dominates runtime and the same table
/// is reused across tests and experiments. Keyed by the full configuration.
inline std::filesystem::path null_cache_path(const std::filesystem::path& cache_dir, std::size_t d,
                                             std::size_t grid_n, std::size_t reps,
                                             std::uint64_t master_seed) {
    return cache_dir / ("vsnull-d" + std::to_string(d) + "-g" + std::to_string(grid_n) + "-r" +
                        std::to_string(reps) + "-s" + std::to_string(master_seed) + ".vsn");
}

inline NullTable load_or_build_null_table(std::size_t d, std::size_t grid_n, std::size_t reps,
                                          std::uint64_t master_seed,
                                          const std::filesystem::path& cache_dir,
                                          unsigned jobs = 0) {
    const auto path = null_cache_path(cache_dir, d, grid_n, reps, master_seed);
    if (std::filesystem::exists(path)) {
        NullTable table = read_null_table(path);
        if (table.d == d && table.grid_n == grid_n && table.reps == reps &&
            table.master_seed == master_seed)
            return table;
    }
    NullTable table = build_null_table(d, grid_n, reps, master_seed, jobs);
    std::filesystem::create_directories(cache_dir);
    write_null_table(table, path, FileFormat::Binary);
    return table;
}

}  // namespace vsf
