// vsfield: simulate lattice random fields, test them for long-range
// dependence with the rescaled-variance (V/S) statistic, tabulate the
// limiting null law, and run Monte Carlo size/power batches.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vsf/experiment.hpp"
#include "vsf/field_io.hpp"
#include "vsf/null_io.hpp"
#include "vsf/simulate.hpp"
#include "vsf/statistic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultNullSeed = 42;

std::string fmt(double v) { return vsf::detail::format_double(v); }

// ---------------------------------------------------------------------------
// Plain key=value config files for the experiment subcommand. Repeated keys
// accumulate (model, alpha); unknown keys are rejected by the consumer so a
// typo cannot silently change a run.
// ---------------------------------------------------------------------------

struct KeyValueFile {
    std::vector<std::pair<std::string, std::string>> entries;
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

KeyValueFile read_key_value_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    KeyValueFile out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected key = value");
        out.entries.emplace_back(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(',', pos);
        const std::string tok =
            trim(text.substr(pos, next == std::string::npos ? next : next - pos));
        if (!tok.empty()) out.push_back(tok);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

double parse_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw std::runtime_error("config value for '" + key + "' is not a number: '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw std::runtime_error("config value for '" + key + "' is not an integer: '" + v + "'");
    return x;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config value for '" + key + "' is not a boolean: '" + v + "'");
}

// ---------------------------------------------------------------------------
// experiment subcommand
// ---------------------------------------------------------------------------

struct ExperimentSettings {
    std::string mode = "power";  // power | qsweep
    std::vector<std::string> models;
    std::size_t n = 128;
    std::size_t q = 0;  // 0 -> default_bandwidth(n)
    std::size_t reps = 0;  // 0 -> mode default (1000 size studies, 500 power)
    std::vector<double> alphas;
    std::uint64_t seed = 1;
    std::size_t burn_in = 100;
    std::size_t spectral_terms = 5000;
    std::vector<double> a_values;
    std::vector<std::size_t> q_values;
    std::string null_table;  // path; empty -> auto build via cache
    bool auto_null = false;
    std::size_t null_grid = 1000;
    std::size_t null_reps = 10000;
    std::uint64_t null_seed = kDefaultNullSeed;
    std::string cache_dir = ".vsfield-cache";
    std::string out_prefix = "vsfield-out";
    bool fast = false;
    unsigned jobs = 0;
};

void apply_config_entry(ExperimentSettings& s, const std::string& key, const std::string& value) {
    if (key == "mode")
        s.mode = value;
    else if (key == "model")
        s.models.push_back(value);
    else if (key == "n")
        s.n = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "q")
        s.q = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "reps")
        s.reps = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "alpha")
        for (const auto& tok : split_list(value)) s.alphas.push_back(parse_double(tok, key));
    else if (key == "seed")
        s.seed = parse_u64(value, key);
    else if (key == "burn_in")
        s.burn_in = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "spectral_terms")
        s.spectral_terms = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "a_values")
        for (const auto& tok : split_list(value)) s.a_values.push_back(parse_double(tok, key));
    else if (key == "q_values")
        for (const auto& tok : split_list(value))
            s.q_values.push_back(static_cast<std::size_t>(parse_u64(tok, key)));
    else if (key == "null_table")
        s.null_table = value;
    else if (key == "auto_null")
        s.auto_null = parse_bool(value, key);
    else if (key == "null_grid")
        s.null_grid = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "null_reps")
        s.null_reps = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "null_seed")
        s.null_seed = parse_u64(value, key);
    else if (key == "cache_dir")
        s.cache_dir = value;
    else if (key == "out_prefix")
        s.out_prefix = value;
    else if (key == "fast")
        s.fast = parse_bool(value, key);
    else if (key == "jobs")
        s.jobs = static_cast<unsigned>(parse_u64(value, key));
    else
        throw std::runtime_error("unknown config key '" + key + "'");
}

std::string sanitize_for_filename(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
    return s;
}

vsf::NullTable resolve_null_table(const ExperimentSettings& s) {
    if (!s.null_table.empty()) {
        vsf::NullTable table = vsf::read_null_table(s.null_table);
        if (table.d != 2)
            throw std::runtime_error("null table '" + s.null_table + "' has d = " +
                                     std::to_string(table.d) + ", need d = 2");
        return table;
    }
    if (!s.auto_null)
        throw std::runtime_error(
            "no null table: pass null_table=<path> or auto_null=true (builds and caches one)");
    std::cout << "# building/loading null table d=2 grid=" << s.null_grid
              << " reps=" << s.null_reps << " seed=" << s.null_seed << " (cache: " << s.cache_dir
              << ")\n";
    return vsf::load_or_build_null_table(2, s.null_grid, s.null_reps, s.null_seed, s.cache_dir,
                                         s.jobs);
}

void echo_settings(const ExperimentSettings& s, std::size_t resolved_reps) {
    std::cout << "# mode=" << s.mode << " n=" << s.n << " q="
              << (s.q == 0 ? vsf::default_bandwidth(s.n) : s.q) << " reps=" << resolved_reps
              << " seed=" << s.seed << " spectral_terms=" << s.spectral_terms
              << " burn_in=" << s.burn_in << " fast=" << (s.fast ? "true" : "false") << '\n';
}

int run_experiment_command(ExperimentSettings s) {
    if (s.fast) {
        s.reps = s.reps == 0 ? 200 : s.reps;
        if (s.spectral_terms == 5000) s.spectral_terms = 2000;
    }
    if (s.alphas.empty()) s.alphas = {0.01, 0.025, 0.05, 0.075, 0.1};
    const fs::path prefix(s.out_prefix);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());

    const vsf::NullTable table = resolve_null_table(s);

    if (s.mode == "qsweep") {
        if (s.a_values.empty() || s.q_values.empty())
            throw std::runtime_error("qsweep mode needs a_values and q_values");
        const std::size_t reps = s.reps == 0 ? 1000 : s.reps;
        echo_settings(s, reps);
        const auto sweep = vsf::qvalue_sweep(s.a_values, s.q_values, s.n, reps, s.seed, table,
                                             s.burn_in, s.jobs);
        const fs::path out = s.out_prefix + "-qsweep.csv";
        vsf::write_qsweep_csv(sweep, table, out);
        std::cout << "wrote " << out.string() << '\n';
        return 0;
    }
    if (s.mode != "power") throw std::runtime_error("unknown mode '" + s.mode + "'");

    if (s.models.empty()) throw std::runtime_error("power mode needs at least one model");
    const std::size_t reps = s.reps == 0 ? 500 : s.reps;
    echo_settings(s, reps);

    std::vector<vsf::PowerRow> all_rows;
    for (std::size_t mi = 0; mi < s.models.size(); ++mi) {
        vsf::ExperimentConfig cfg;
        cfg.model = vsf::parse_model(s.models[mi]);
        cfg.n = s.n;
        cfg.q = s.q;
        cfg.reps = reps;
        cfg.alpha = s.alphas.front();
        cfg.master_seed = s.seed;
        cfg.stream_offset = mi * reps;
        cfg.burn_in = s.burn_in;
        cfg.spectral_terms = s.spectral_terms;
        const auto report = vsf::run_experiment(cfg, table, s.jobs);
        const fs::path rep_path =
            s.out_prefix + "-" + sanitize_for_filename(s.models[mi]) + ".csv";
        vsf::write_report_csv(report, rep_path);
        std::cout << "model " << s.models[mi] << ": rejection@" << fmt(cfg.alpha) << " = "
                  << fmt(report.rejection_rate) << ", mean M = " << fmt(report.mean_m) << " -> "
                  << rep_path.string() << '\n';
        const auto rows = vsf::power_rows_from_report(report, s.alphas);
        all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    }
    const fs::path summary = s.out_prefix + "-summary.csv";
    vsf::write_power_csv(all_rows, reps, s.seed, s.spectral_terms, table, summary);
    std::cout << "wrote " << summary.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "vsfield: long-range dependence testing for lattice random fields via the "
        "rescaled-variance (V/S) statistic"};
    app.require_subcommand(1);

    // --- simulate ---------------------------------------------------------
    std::string sim_model, sim_out;
    std::size_t sim_n = 128, sim_terms = 5000, sim_burn = 100;
    std::uint64_t sim_seed = 1, sim_stream = 0;
    unsigned sim_jobs = 0;
    auto* sim = app.add_subcommand("simulate", "simulate a field and write it to a file");
    sim->add_option("--model", sim_model,
                    "model spec: wn | ar:a=0.5 | product:a1=-0.5,a2=-0.5 | iso:a=-1 | "
                    "oneline:a=-0.5,k=-1")
        ->required();
    sim->add_option("--n", sim_n, "field side length")->capture_default_str();
    sim->add_option("--seed", sim_seed, "master seed")->capture_default_str();
    sim->add_option("--stream", sim_stream, "stream id (replicate index)")
        ->capture_default_str();
    sim->add_option("--out", sim_out, "output path (.vsf = binary, otherwise CSV)")->required();
    sim->add_option("--terms", sim_terms, "cosine terms N for spectral-method models")
        ->capture_default_str();
    sim->add_option("--burn-in", sim_burn, "AR warm-up rows/columns")->capture_default_str();
    sim->add_option("--jobs", sim_jobs, "worker threads (0 = all cores)")->capture_default_str();

    // --- test --------------------------------------------------------------
    std::string test_in, test_table;
    std::size_t test_q = 0;
    double test_alpha = 0.05;
    auto* tst = app.add_subcommand("test", "run the V/S test on a stored field");
    tst->add_option("--in", test_in, "field file")->required();
    tst->add_option("--table", test_table, "null table file")->required();
    tst->add_option("--q", test_q,
                    "bandwidth (0 = calibrated default: 30 at n=128, 40 at n=256, "
                    "round(30*(n/128)^0.4) otherwise)")
        ->capture_default_str();
    tst->add_option("--alpha", test_alpha, "significance level")->capture_default_str();

    // --- null ---------------------------------------------------------------
    std::size_t null_d = 2, null_grid = 1000, null_reps = 10000;
    std::uint64_t null_seed = kDefaultNullSeed;
    std::string null_out;
    unsigned null_jobs = 0;
    auto* nul = app.add_subcommand("null", "tabulate the limiting null law by Monte Carlo");
    nul->add_option("--d", null_d, "field dimension")->capture_default_str();
    nul->add_option("--grid", null_grid, "sheet discretization")->capture_default_str();
    nul->add_option("--reps", null_reps, "number of realizations")->capture_default_str();
    nul->add_option("--seed", null_seed, "master seed")->capture_default_str();
    nul->add_option("--out", null_out, "output path (.vsn = binary, otherwise text)")->required();
    nul->add_option("--jobs", null_jobs, "worker threads (0 = all cores)")->capture_default_str();

    // --- experiment ----------------------------------------------------------
    ExperimentSettings exp_cli;  // flag values; overlaid on the config file
    std::string exp_config;
    std::vector<std::string> exp_models;
    std::vector<double> exp_alphas;
    auto* exp = app.add_subcommand("experiment", "Monte Carlo size/power batch from a config");
    exp->add_option("--config", exp_config, "key = value config file");
    exp->add_option("--mode", exp_cli.mode, "power | qsweep")->capture_default_str();
    exp->add_option("--model", exp_models, "model spec (repeatable)");
    auto* opt_n = exp->add_option("--n", exp_cli.n, "field side length");
    auto* opt_q = exp->add_option("--q", exp_cli.q, "bandwidth (0 = calibrated default)");
    auto* opt_reps = exp->add_option("--reps", exp_cli.reps, "replicates per model");
    exp->add_option("--alpha", exp_alphas, "significance level (repeatable)");
    auto* opt_seed = exp->add_option("--seed", exp_cli.seed, "master seed");
    auto* opt_terms =
        exp->add_option("--spectral-terms", exp_cli.spectral_terms, "cosine terms N");
    auto* opt_burn = exp->add_option("--burn-in", exp_cli.burn_in, "AR warm-up");
    auto* opt_table = exp->add_option("--null-table", exp_cli.null_table, "null table file");
    auto* opt_auto = exp->add_flag("--auto-null", "build (and cache) the null table if needed");
    auto* opt_ngrid = exp->add_option("--null-grid", exp_cli.null_grid, "auto-null grid");
    auto* opt_nreps = exp->add_option("--null-reps", exp_cli.null_reps, "auto-null reps");
    auto* opt_nseed = exp->add_option("--null-seed", exp_cli.null_seed, "auto-null seed");
    auto* opt_cache = exp->add_option("--cache-dir", exp_cli.cache_dir, "null table cache dir");
    auto* opt_prefix = exp->add_option("--out-prefix", exp_cli.out_prefix, "output path prefix");
    auto* opt_fast =
        exp->add_flag("--fast", "CI tier: reps default 200, spectral terms 2000");
    auto* opt_jobs = exp->add_option("--jobs", exp_cli.jobs, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const vsf::ModelSpec model = vsf::parse_model(sim_model);
            vsf::Rng rng(vsf::RngSpec{sim_seed, sim_stream});
            const vsf::Field field =
                vsf::simulate_field(model, sim_n, rng, {sim_burn, sim_terms, sim_jobs});
            vsf::write_field(field, sim_out);
            std::cout << "# model=" << vsf::format_model(model) << " n=" << sim_n
                      << " seed=" << sim_seed << " stream=" << sim_stream << '\n';
            if (const auto g = vsf::gamma_of(model)) std::cout << "gamma=" << fmt(*g) << '\n';
            std::cout << "wrote " << sim_out << '\n';
            return 0;
        }
        if (*tst) {
            const vsf::Field field = vsf::read_field(test_in);
            const vsf::NullTable table = vsf::read_null_table(test_table);
            if (table.d != field.rank())
                throw std::runtime_error("dimension mismatch: field has d = " +
                                         std::to_string(field.rank()) + ", table has d = " +
                                         std::to_string(table.d));
            if (!(test_alpha > 0.0 && test_alpha < 1.0))
                throw std::runtime_error("alpha must lie in (0, 1)");
            const vsf::VsResult res = vsf::vs_statistic(field, vsf::VsConfig{test_q});
            const double c_alpha = vsf::quantile(table, 1.0 - test_alpha);
            const double p = vsf::p_value(table, res.m_n);
            const char* verdict = res.m_n > c_alpha ? "REJECT" : "ACCEPT";
            std::cout << "m_n      = " << fmt(res.m_n) << '\n';
            std::cout << "s_hat_sq = " << fmt(res.s_hat_sq) << '\n';
            std::cout << "q        = " << res.q << '\n';
            std::cout << "c_alpha  = " << fmt(c_alpha) << " (alpha = " << fmt(test_alpha) << ")\n";
            std::cout << "p_value  = " << fmt(p) << '\n';
            std::cout << "verdict  = " << verdict << '\n';
            std::cout << "RESULT m_n=" << fmt(res.m_n) << " s_hat_sq=" << fmt(res.s_hat_sq)
                      << " q=" << res.q << " c_alpha=" << fmt(c_alpha) << " p_value=" << fmt(p)
                      << " alpha=" << fmt(test_alpha) << " verdict=" << verdict << '\n';
            return 0;  // statistical verdicts are not tool failures
        }
        if (*nul) {
            if (null_reps == 0) throw CLI::ValidationError("--reps", "must be >= 1");
            const vsf::NullTable table =
                vsf::build_null_table(null_d, null_grid, null_reps, null_seed, null_jobs);
            vsf::write_null_table(table, null_out);
            double mean = 0.0;
            for (double v : table.sorted_values) mean += v;
            mean /= static_cast<double>(table.reps);
            double var = 0.0;
            for (double v : table.sorted_values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(table.reps - 1);
            std::cout << "# d=" << null_d << " grid=" << null_grid << " reps=" << null_reps
                      << " seed=" << null_seed << '\n';
            std::cout << "mean     = " << fmt(mean) << '\n';
            std::cout << "variance = " << fmt(var) << '\n';
            std::cout << "q90      = " << fmt(vsf::quantile(table, 0.90)) << '\n';
            std::cout << "q95      = " << fmt(vsf::quantile(table, 0.95)) << '\n';
            if (null_d == 1) {
                // Analytic identity available in one dimension.
                std::vector<double> sample = table.sorted_values;
                std::size_t i = 0;
                double d_max = 0.0;
                for (double v : sample) {
                    const double f = vsf::kolmogorov_cdf(M_PI * std::sqrt(std::max(0.0, v)));
                    const double n = static_cast<double>(sample.size());
                    d_max = std::max(d_max, std::max(f - static_cast<double>(i) / n,
                                                     static_cast<double>(i + 1) / n - f));
                    ++i;
                }
                std::cout << "ks_vs_kolmogorov = " << fmt(d_max) << '\n';
            }
            std::cout << "wrote " << null_out << '\n';
            return 0;
        }
        if (*exp) {
            ExperimentSettings settings;
            if (!exp_config.empty()) {
                const auto kv = read_key_value_file(exp_config);
                for (const auto& [k, v] : kv.entries) apply_config_entry(settings, k, v);
            }
            // Flags override file values.
            if (exp->count("--mode")) settings.mode = exp_cli.mode;
            if (!exp_models.empty()) settings.models = exp_models;
            if (*opt_n) settings.n = exp_cli.n;
            if (*opt_q) settings.q = exp_cli.q;
            if (*opt_reps) settings.reps = exp_cli.reps;
            if (!exp_alphas.empty()) settings.alphas = exp_alphas;
            if (*opt_seed) settings.seed = exp_cli.seed;
            if (*opt_terms) settings.spectral_terms = exp_cli.spectral_terms;
            if (*opt_burn) settings.burn_in = exp_cli.burn_in;
            if (*opt_table) settings.null_table = exp_cli.null_table;
            if (*opt_auto) settings.auto_null = true;
            if (*opt_ngrid) settings.null_grid = exp_cli.null_grid;
            if (*opt_nreps) settings.null_reps = exp_cli.null_reps;
            if (*opt_nseed) settings.null_seed = exp_cli.null_seed;
            if (*opt_cache) settings.cache_dir = exp_cli.cache_dir;
            if (*opt_prefix) settings.out_prefix = exp_cli.out_prefix;
            if (*opt_fast) settings.fast = true;
            if (*opt_jobs) settings.jobs = exp_cli.jobs;
            return run_experiment_command(std::move(settings));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
