#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/oracles.hpp"
#include "vsf/experiment.hpp"

using namespace vsf;
namespace fs = std::filesystem;

namespace {

// One moderate table shared across the file; statistical checks here use wide
// bands, so a desk-scale table is enough.
const NullTable& shared_table() {
    static const NullTable table = build_null_table(2, 200, 6000, 20240810);
    return table;
}

fs::path temp_file(const char* name) {
    auto dir = fs::temp_directory_path() / "vsfield-tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("reports are identical across worker counts, bytes included") {
    ExperimentConfig cfg;
    cfg.model = SeparableAr{0.4};
    cfg.n = 32;
    cfg.q = 6;
    cfg.reps = 24;
    cfg.alpha = 0.1;
    cfg.master_seed = 5;
    const ExperimentReport r1 = run_experiment(cfg, shared_table(), 1);
    const ExperimentReport r2 = run_experiment(cfg, shared_table(), 4);
    REQUIRE(r1.replicates.size() == r2.replicates.size());
    for (std::size_t i = 0; i < r1.replicates.size(); ++i) {
        CHECK(r1.replicates[i].m_n == r2.replicates[i].m_n);
        CHECK(r1.replicates[i].p_value == r2.replicates[i].p_value);
    }
    const auto p1 = temp_file("report_j1.csv");
    const auto p2 = temp_file("report_j4.csv");
    write_report_csv(r1, p1);
    write_report_csv(r2, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(slurp(p1).find("# model=ar:a=0.4") != std::string::npos);
    CHECK(slurp(p1).find("rep,m_n,s_hat_sq,p_value") != std::string::npos);
}

TEST_CASE("white-noise size lands in the binomial band") {
    ExperimentConfig cfg;
    cfg.model = WhiteNoise{};
    cfg.n = 64;
    cfg.q = 10;
    cfg.reps = 200;
    cfg.alpha = 0.1;
    cfg.master_seed = 2024;
    const ExperimentReport report = run_experiment(cfg, shared_table(), 0);
    CHECK(report.rejection_rate >= 0.04);
    CHECK(report.rejection_rate <= 0.17);
    // rejection rate is an exact count ratio
    std::size_t manual = 0;
    for (const auto& r : report.replicates)
        if (r.p_value <= 0.1) ++manual;
    CHECK(report.rejection_rate == static_cast<double>(manual) / 200.0);
}

TEST_CASE("white-noise p-values are uniform (KS below the 1% critical value)") {
    ExperimentConfig cfg;
    cfg.model = WhiteNoise{};
    cfg.n = 128;
    cfg.q = 8;
    cfg.reps = 1000;
    cfg.alpha = 0.05;
    cfg.master_seed = 99;
    const ExperimentReport report = run_experiment(cfg, shared_table(), 0);
    std::vector<double> pvals;
    pvals.reserve(report.replicates.size());
    for (const auto& r : report.replicates) pvals.push_back(r.p_value);
    const double d = oracle::ks_statistic(pvals, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(d < 1.628 / std::sqrt(1000.0));
}

TEST_CASE("experiment validation errors") {
    ExperimentConfig cfg;
    cfg.model = WhiteNoise{};
    cfg.n = 16;
    cfg.q = 4;
    cfg.reps = 0;
    CHECK_THROWS_AS(run_experiment(cfg, shared_table()), std::invalid_argument);
    cfg.reps = 5;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(run_experiment(cfg, shared_table()), std::invalid_argument);
    cfg.alpha = 0.1;
    const NullTable d1 = build_null_table(1, 50, 100, 1);
    CHECK_THROWS_AS(run_experiment(cfg, d1), std::invalid_argument);
}

TEST_CASE("q sweep: unit step at reps = 1, ordering in q under common fields") {
    SUBCASE("degenerate single replicate") {
        const auto sweep = qvalue_sweep({0.5}, {4, 8}, 32, 1, 3, shared_table());
        for (const auto& cell : sweep.cells) {
            for (double v : cell.ecdf) CHECK((v == 0.0 || v == 1.0));
            CHECK(cell.ecdf.front() == 0.0);
        }
    }
    SUBCASE("a = 0.8: size error shrinks as q grows through 28, 30, 32") {
        const auto sweep = qvalue_sweep({0.8}, {28, 30, 32}, 128, 400, 7, shared_table());
        REQUIRE(sweep.cells.size() == 3);
        const auto& e28 = sweep.cells[0].ecdf;
        const auto& e30 = sweep.cells[1].ecdf;
        const auto& e32 = sweep.cells[2].ecdf;
        // Common fields make the per-replicate statistic non-increasing in q
        // for positively correlated AR fields, so the ECDFs nest.
        double total_gap = 0.0;
        for (std::size_t t = 0; t < sweep.grid.size(); ++t) {
            CHECK(e28[t] >= e30[t] - 1e-12);
            CHECK(e30[t] >= e32[t] - 1e-12);
            total_gap += e28[t] - e32[t];
        }
        CHECK(total_gap > 0.0);
        // sizes exceed nominal for a = 0.8 (memory close to the alternative)
        CHECK(e30.back() > 0.1);
    }
    SUBCASE("a = 0.5 stays near the diagonal at q = 30") {
        const auto sweep = qvalue_sweep({0.5}, {28, 30, 32}, 128, 400, 8, shared_table());
        for (const auto& cell : sweep.cells) {
            const double at_10 = cell.ecdf.back();
            CHECK(at_10 > 0.04);
            CHECK(at_10 < 0.18);
        }
    }
}

TEST_CASE("power curve: shape, gamma column, and input validation") {
    const std::vector<ModelSpec> models = {parse_model("product:a1=-0.5,a2=-0.5"),
                                           parse_model("oneline:a=-0.5,k=0")};
    const auto rows = power_curve(models, 32, 8, 30, {0.05, 0.1}, 17, shared_table(), 400, 0);
    REQUIRE(rows.size() == 4);
    CHECK(*rows[0].gamma == doctest::Approx(1.5));
    CHECK(*rows[2].gamma == doctest::Approx(1.25));
    for (const auto& row : rows) {
        CHECK(row.power >= 0.0);
        CHECK(row.power <= 1.0);
        CHECK(row.q == 8);
    }
    CHECK(rows[0].alpha == 0.05);
    CHECK(rows[1].alpha == 0.1);
    CHECK(rows[1].power >= rows[0].power);  // monotone in alpha by definition

    CHECK_THROWS_AS(power_curve({WhiteNoise{}}, 32, 8, 10, {0.05}, 1, shared_table()),
                    std::invalid_argument);
    CHECK_THROWS_AS(power_curve(models, 32, 8, 10, {}, 1, shared_table()),
                    std::invalid_argument);
}

TEST_CASE("csv writers: headers, row counts, determinism") {
    const std::vector<ModelSpec> models = {parse_model("product:a1=-0.5,a2=-0.5")};
    const auto rows = power_curve(models, 24, 6, 10, {0.05, 0.1}, 4, shared_table(), 300, 0);
    const auto path = temp_file("power.csv");
    write_power_csv(rows, 10, 4, 300, shared_table(), path);
    const std::string text = slurp(path);
    CHECK(text.find("model,gamma,n,q,alpha,power") != std::string::npos);
    CHECK(text.find("product:a1=-0.5,a2=-0.5,1.5,24,6,") != std::string::npos);
    CHECK(text.find("# null_grid=200") != std::string::npos);

    const auto sweep = qvalue_sweep({0.5}, {4}, 24, 6, 5, shared_table());
    const auto spath = temp_file("sweep.csv");
    write_qsweep_csv(sweep, shared_table(), spath);
    const std::string stext = slurp(spath);
    CHECK(stext.find("a,q,x,ecdf") != std::string::npos);
    // 21 grid points for the single cell plus headers
    std::size_t lines = 0;
    for (char c : stext)
        if (c == '\n') ++lines;
    CHECK(lines == 21 + 9 + 1);
}
