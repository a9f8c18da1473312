#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsf/field_io.hpp"
#include "vsf/null_dist.hpp"
#include "vsf/parallel.hpp"
#include "vsf/simulate.hpp"
#include "vsf/statistic.hpp"

namespace vsf {

struct ExperimentConfig {
    ModelSpec model = WhiteNoise{};
    std::size_t n = 128;
    std::size_t q = 0;  // 0 selects default_bandwidth(n)
    std::size_t reps = 500;
    double alpha = 0.05;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_offset = 0;  // replicate r uses stream_offset + r
    std::size_t burn_in = 100;
    std::size_t spectral_terms = 5000;
};

struct ReplicateRecord {
    std::size_t rep = 0;
    double m_n = 0.0;
    double s_hat_sq = 0.0;
    double p_value = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::size_t resolved_q = 0;
    std::size_t null_d = 0, null_grid = 0, null_reps = 0;
    std::uint64_t null_seed = 0;
    std::vector<ReplicateRecord> replicates;
    double rejection_rate = 0.0;  // #{p <= alpha} / reps, exact
    double mean_m = 0.0;
};

namespace detail {

inline void check_experiment(const ExperimentConfig& cfg, const NullTable& table) {
    validate_model(cfg.model);
    if (cfg.reps == 0) throw std::invalid_argument("experiment: reps must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw std::invalid_argument("experiment: alpha must lie in (0, 1)");
    if (table.d != 2)
        throw std::invalid_argument("experiment: null table has d = " + std::to_string(table.d) +
                                    ", simulated fields are 2-dimensional");
}

}  // namespace detail

/// One Monte Carlo batch: simulate (stream_id = replicate index), test, and
/// aggregate. Output is identical for any worker count.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const NullTable& table,
                                       unsigned jobs = 0) {
    detail::check_experiment(cfg, table);
    const std::size_t q = cfg.q == 0 ? default_bandwidth(cfg.n) : cfg.q;

    ExperimentReport report;
    report.config = cfg;
    report.resolved_q = q;
    report.null_d = table.d;
    report.null_grid = table.grid_n;
    report.null_reps = table.reps;
    report.null_seed = table.master_seed;
    report.replicates.resize(cfg.reps);

    const SimulateOptions opts{cfg.burn_in, cfg.spectral_terms, 1};
    parallel_for(cfg.reps, jobs, [&](std::size_t rep) {
        Rng rng(RngSpec{cfg.master_seed, cfg.stream_offset + rep});
        const Field field = simulate_field(cfg.model, cfg.n, rng, opts);
        const VsResult res = vs_statistic(field, VsConfig{q});
        report.replicates[rep] = {rep, res.m_n, res.s_hat_sq, p_value(table, res.m_n)};
    });

    std::size_t rejections = 0;
    double m_sum = 0.0;
    for (const auto& r : report.replicates) {
        if (r.p_value <= cfg.alpha) ++rejections;
        m_sum += r.m_n;
    }
    report.rejection_rate = static_cast<double>(rejections) / static_cast<double>(cfg.reps);
    report.mean_m = m_sum / static_cast<double>(cfg.reps);
    return report;
}

// ---------------------------------------------------------------------------
// Bandwidth-selection sweep: p-value ECDFs per (a, q) cell on the zoom window
// [0, 0.1]. Fields are shared across the q grid (common random numbers), so
// per-replicate orderings in q are exact rather than noisy.
// ---------------------------------------------------------------------------

struct QSweepCell {
    double a = 0.0;
    std::size_t q = 0;
    std::vector<double> ecdf;  // evaluated on QSweepResult::grid
};

struct QSweepResult {
    std::vector<double> grid;  // 0, 0.005, ..., 0.1
    std::size_t n = 0, reps = 0;
    std::uint64_t master_seed = 0;
    std::size_t burn_in = 100;
    std::vector<QSweepCell> cells;
};

inline QSweepResult qvalue_sweep(const std::vector<double>& a_values,
                                 const std::vector<std::size_t>& q_values, std::size_t n,
                                 std::size_t reps, std::uint64_t master_seed,
                                 const NullTable& table, std::size_t burn_in = 100,
                                 unsigned jobs = 0) {
    if (a_values.empty() || q_values.empty())
        throw std::invalid_argument("qvalue_sweep: empty parameter grid");
    if (reps == 0) throw std::invalid_argument("qvalue_sweep: reps must be >= 1");
    if (table.d != 2) throw std::invalid_argument("qvalue_sweep: null table must have d = 2");
    for (std::size_t q : q_values) detail::check_bandwidth({n, n}, q, "qvalue_sweep");

    QSweepResult out;
    for (int t = 0; t <= 20; ++t) out.grid.push_back(0.005 * t);
    out.n = n;
    out.reps = reps;
    out.master_seed = master_seed;
    out.burn_in = burn_in;

    for (std::size_t ai = 0; ai < a_values.size(); ++ai) {
        const double a = a_values[ai];
        std::vector<std::vector<double>> pvals(q_values.size(), std::vector<double>(reps));
        parallel_for(reps, jobs, [&](std::size_t rep) {
            Rng rng(RngSpec{master_seed, ai * reps + rep});
            const Field field = simulate_ar(n, a, burn_in, rng);
            for (std::size_t qi = 0; qi < q_values.size(); ++qi) {
                const VsResult res = vs_statistic(field, VsConfig{q_values[qi]});
                pvals[qi][rep] = p_value(table, res.m_n);
            }
        });
        for (std::size_t qi = 0; qi < q_values.size(); ++qi) {
            QSweepCell cell{a, q_values[qi], {}};
            cell.ecdf.reserve(out.grid.size());
            for (double x : out.grid) {
                std::size_t count = 0;
                for (double p : pvals[qi])
                    if (p <= x) ++count;
                cell.ecdf.push_back(static_cast<double>(count) / static_cast<double>(reps));
            }
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Power study across long-memory models.
// ---------------------------------------------------------------------------

struct PowerRow {
    ModelSpec model;
    std::optional<double> gamma;
    std::size_t n = 0, q = 0;
    double alpha = 0.0;
    double power = 0.0;
};

inline std::vector<PowerRow> power_rows_from_report(const ExperimentReport& report,
                                                    const std::vector<double>& alphas) {
    std::vector<PowerRow> rows;
    for (double alpha : alphas) {
        std::size_t count = 0;
        for (const auto& r : report.replicates)
            if (r.p_value <= alpha) ++count;
        rows.push_back({report.config.model, gamma_of(report.config.model), report.config.n,
                        report.resolved_q, alpha,
                        static_cast<double>(count) / static_cast<double>(report.replicates.size())});
    }
    return rows;
}

inline std::vector<PowerRow> power_curve(const std::vector<ModelSpec>& models, std::size_t n,
                                         std::size_t q, std::size_t reps,
                                         const std::vector<double>& alphas,
                                         std::uint64_t master_seed, const NullTable& table,
                                         std::size_t spectral_terms = 5000, unsigned jobs = 0) {
    if (alphas.empty()) throw std::invalid_argument("power_curve: need at least one alpha");
    for (const auto& m : models)
        if (!is_long_memory(m))
            throw std::invalid_argument("power_curve: model '" + format_model(m) +
                                        "' is not a long-memory variant");
    std::vector<PowerRow> rows;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        ExperimentConfig cfg;
        cfg.model = models[mi];
        cfg.n = n;
        cfg.q = q;
        cfg.reps = reps;
        cfg.alpha = alphas.front();
        cfg.master_seed = master_seed;
        cfg.stream_offset = mi * reps;  // disjoint streams per model
        cfg.spectral_terms = spectral_terms;
        const ExperimentReport rep = run_experiment(cfg, table, jobs);
        const auto model_rows = power_rows_from_report(rep, alphas);
        rows.insert(rows.end(), model_rows.begin(), model_rows.end());
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV serialization. One '# key=value' block with the fully resolved
// configuration, then the data rows. All numbers print with 17 significant
// digits so identical configs give byte-identical files.
// ---------------------------------------------------------------------------

inline void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    const auto g = gamma_of(report.config.model);
    out << "# vsreport v1\n";
    out << "# model=" << format_model(report.config.model) << '\n';
    out << "# gamma=" << (g ? detail::format_double(*g) : "none") << '\n';
    out << "# n=" << report.config.n << '\n';
    out << "# q=" << report.resolved_q << '\n';
    out << "# reps=" << report.config.reps << '\n';
    out << "# alpha=" << detail::format_double(report.config.alpha) << '\n';
    out << "# seed=" << report.config.master_seed << '\n';
    out << "# stream_offset=" << report.config.stream_offset << '\n';
    out << "# burn_in=" << report.config.burn_in << '\n';
    out << "# spectral_terms=" << report.config.spectral_terms << '\n';
    out << "# null_d=" << report.null_d << '\n';
    out << "# null_grid=" << report.null_grid << '\n';
    out << "# null_reps=" << report.null_reps << '\n';
    out << "# null_seed=" << report.null_seed << '\n';
    out << "# rejection_rate=" << detail::format_double(report.rejection_rate) << '\n';
    out << "# mean_m_n=" << detail::format_double(report.mean_m) << '\n';
    out << "rep,m_n,s_hat_sq,p_value\n";
    for (const auto& r : report.replicates)
        out << r.rep << ',' << detail::format_double(r.m_n) << ','
            << detail::format_double(r.s_hat_sq) << ',' << detail::format_double(r.p_value)
            << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_power_csv(const std::vector<PowerRow>& rows, std::size_t reps,
                            std::uint64_t master_seed, std::size_t spectral_terms,
                            const NullTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# vspower v1\n";
    out << "# reps=" << reps << '\n';
    out << "# seed=" << master_seed << '\n';
    out << "# spectral_terms=" << spectral_terms << '\n';
    out << "# null_d=" << table.d << '\n';
    out << "# null_grid=" << table.grid_n << '\n';
    out << "# null_reps=" << table.reps << '\n';
    out << "# null_seed=" << table.master_seed << '\n';
    out << "model,gamma,n,q,alpha,power\n";
    for (const auto& row : rows)
        out << format_model(row.model) << ','
            << (row.gamma ? detail::format_double(*row.gamma) : "") << ',' << row.n << ','
            << row.q << ',' << detail::format_double(row.alpha) << ','
            << detail::format_double(row.power) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_qsweep_csv(const QSweepResult& sweep, const NullTable& table,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# vsqsweep v1\n";
    out << "# n=" << sweep.n << '\n';
    out << "# reps=" << sweep.reps << '\n';
    out << "# seed=" << sweep.master_seed << '\n';
    out << "# burn_in=" << sweep.burn_in << '\n';
    out << "# null_d=" << table.d << '\n';
    out << "# null_grid=" << table.grid_n << '\n';
    out << "# null_reps=" << table.reps << '\n';
    out << "# null_seed=" << table.master_seed << '\n';
    out << "a,q,x,ecdf\n";
    for (const auto& cell : sweep.cells)
        for (std::size_t t = 0; t < sweep.grid.size(); ++t)
            out << detail::format_double(cell.a) << ',' << cell.q << ','
                << detail::format_double(sweep.grid[t]) << ','
                << detail::format_double(cell.ecdf[t]) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace vsf
