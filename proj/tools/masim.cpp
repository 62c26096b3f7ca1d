#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <thread>

#include "masim/analysis.hpp"
#include "masim/harness.hpp"
#include "masim/validate.hpp"

namespace {

using namespace masim;

int cmd_sweep(const std::string& config_path, const std::string& algo_name,
              const std::string& snr_spec, long trials, const std::string& out_dir,
              int threads, bool adaptive_k, bool no_analysis) {
    SystemConfig cfg = SystemConfig::from_file(config_path);
    const recovery::Algorithm algo = recovery::algorithm_from_name(algo_name);
    if (algo == recovery::Algorithm::Icbomp && !cfg.coded) {
        cfg.coded = true;
        cfg.validate();
    }
    const std::vector<double> grid = harness::parse_snr_grid(snr_spec);

    harness::SweepOptions opts;
    opts.threads = threads > 0 ? threads
                               : std::max(1u, std::thread::hardware_concurrency());
    opts.adaptive_k = adaptive_k;
    opts.with_analysis = !no_analysis;

    std::cerr << "sweep: algo=" << algo_name << " cells=" << grid.size()
              << " trials=" << trials << " threads=" << opts.threads << "\n";
    if (cfg.coded)
        std::cerr << "coded payload active, rate-223/255 Es/N0 debit "
                  << harness::coding_loss_db() << " dB (~0.6 dB)\n";

    const auto rows = harness::run_sweep(cfg, grid, trials, algo, opts);
    std::filesystem::create_directories(out_dir);
    harness::emit_csv(rows, out_dir + "/sweep.csv");
    harness::emit_svg(rows, out_dir + "/sweep.svg");
    if (algo == recovery::Algorithm::Icbomp)
        harness::emit_blocks_csv(rows, out_dir + "/blocks.csv");
    long excluded = 0;
    for (const auto& r : rows) excluded += r.excluded;
    if (excluded > 0)
        std::cerr << "warning: " << excluded << " trials excluded by recovery errors\n";
    std::cout << harness::csv_string(rows);
    return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& snr_spec,
                const std::string& out_dir) {
    SystemConfig cfg = SystemConfig::from_file(config_path);
    if (cfg.activity.kind != Activity::Kind::FixedCount)
        throw ConfigError("analyze requires fixed activity (the bound is per-Na)");
    const std::vector<double> grid = harness::parse_snr_grid(snr_spec);
    const auto moments = analysis::ChannelOrderMoments::compute(
        cfg.num_antennas, cfg.activity.count);

    std::vector<harness::MetricsRow> rows;
    for (double snr : grid) {
        harness::MetricsRow row;
        row.algorithm = "analysis";
        row.m = cfg.num_antennas;
        row.n = cfg.num_online;
        row.na = cfg.activity.count;
        row.d = cfg.block_len;
        row.t = cfg.frame_len;
        row.k = cfg.iterations;
        row.snr_db = snr;
        row.trials = 0;
        const double rho0 = std::pow(10.0, snr / 10.0);
        row.udsr = row.gudsr = row.ser = std::numeric_limits<double>::quiet_NaN();
        row.udsr_se = row.gudsr_se = row.ser_se = std::numeric_limits<double>::quiet_NaN();
        row.gudsr_bound = analysis::gudsr_lower_bound(
            cfg.num_antennas, cfg.num_online, cfg.activity.count, cfg.block_len,
            cfg.frame_len, rho0, moments, nullptr);
        row.ser_pred = analysis::ser_average(cfg.num_antennas, cfg.frame_len,
                                             cfg.iterations, cfg.block_len, rho0);
        row.ser_g0 = analysis::ser_g0(cfg.num_antennas, cfg.frame_len, cfg.iterations,
                                      cfg.block_len, rho0);
        rows.push_back(std::move(row));
    }
    std::filesystem::create_directories(out_dir);
    harness::emit_csv(rows, out_dir + "/analysis.csv");
    std::cout << harness::csv_string(rows);
    return 0;
}

int cmd_single(const std::string& config_path, const std::string& algo_name,
               double snr_db, uint64_t trial, bool dump) {
    SystemConfig cfg = SystemConfig::from_file(config_path);
    cfg.snr_db = snr_db;
    const recovery::Algorithm algo = recovery::algorithm_from_name(algo_name);
    if (algo == recovery::Algorithm::Icbomp && !cfg.coded) {
        cfg.coded = true;
        cfg.validate();
    }
    harness::RunContext ctx = harness::RunContext::make(cfg, algo);
    recovery::RecoveryResult result;
    const harness::TrialMetrics tm = harness::run_trial(ctx, 0, trial, nullptr, &result);

    std::cout << "trial " << trial << " @ " << snr_db << " dB, algo " << algo_name
              << "\n";
    std::cout << "active " << tm.active_count << ", detected " << tm.detected_active
              << ", missed " << tm.missed_active << ", false " << tm.false_selected
              << ", group_success " << (tm.group_success ? 1 : 0) << "\n";
    std::cout << "symbol_errors " << tm.symbol_errors << " / " << tm.symbols_total
              << "\n";
    std::cout << "selected_order:";
    for (int u : result.selected_order) std::cout << ' ' << u;
    std::cout << "\nblocks_updated:";
    for (int b : result.blocks_updated_per_iteration) std::cout << ' ' << b;
    std::cout << "\nresidual_norms:";
    for (double r : result.residual_norms) std::cout << ' ' << r;
    std::cout << "\n";
    if (!result.cancelled_at.empty()) {
        std::cout << "cancelled_at:";
        for (const auto& [u, k] : result.cancelled_at)
            std::cout << ' ' << u << "@it" << k;
        std::cout << "\n";
    }
    if (!result.decoded.empty()) {
        std::cout << "decode_status:";
        for (const auto& [u, out] : result.decoded) {
            const char* st = out.status == codec::DecodeStatus::Clean       ? "clean"
                             : out.status == codec::DecodeStatus::Corrected ? "corrected"
                                                                            : "failed";
            std::cout << ' ' << u << ':' << st;
            if (out.status == codec::DecodeStatus::Corrected)
                std::cout << '(' << out.num_bit_errors << ')';
        }
        std::cout << "\n";
    }
    if (dump) {
        std::cout.precision(8);
        for (const auto& [u, est] : result.estimates) {
            std::cout << "estimate user " << u << ":";
            for (Eigen::Index i = 0; i < est.size(); ++i)
                std::cout << ' ' << est[i].real() << (est[i].imag() < 0 ? "" : "+")
                          << est[i].imag() << 'j';
            std::cout << "\n";
        }
    }
    if (tm.failed) {
        std::cout << "trial failed (recovery numeric error)\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grant-free many-access uplink simulator and predictor"};
    app.require_subcommand(1);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over an SNR grid");
    std::string config_path, algo = "nbomp", snr_spec = "4", out_dir = "out";
    long trials = 500;
    int threads = 0;
    bool adaptive_k = false, no_analysis = false;
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--algo", algo, "bomp|nbomp|icbomp");
    sweep->add_option("--snr", snr_spec, "start:step:stop or comma list (dB)");
    sweep->add_option("--trials", trials, "trials per grid cell");
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--threads", threads, "worker threads (0 = hardware)");
    sweep->add_flag("--adaptive-k", adaptive_k, "grant an extra iteration per cancellation");
    sweep->add_flag("--no-analysis", no_analysis, "skip analytical columns");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "analytical curves only");
    std::string a_config, a_snr = "0:1:8", a_out = "out";
    analyze->add_option("--config", a_config, "config file")->required();
    analyze->add_option("--snr", a_snr, "start:step:stop or comma list (dB)");
    analyze->add_option("--out", a_out, "output directory");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "run the oracle suite");
    bool fast = false;
    validate_cmd->add_flag("--fast", fast, "reduced trial counts");

    // single
    auto* single = app.add_subcommand("single", "run one trial and dump the result");
    std::string s_config, s_algo = "nbomp";
    double s_snr = 4.0;
    uint64_t s_trial = 0;
    bool s_dump = false;
    single->add_option("--config", s_config, "config file")->required();
    single->add_option("--algo", s_algo, "bomp|nbomp|icbomp");
    single->add_option("--snr", s_snr, "Es/N0 in dB");
    single->add_option("--trial", s_trial, "trial index");
    single->add_flag("--dump", s_dump, "print full estimates");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed())
            return cmd_sweep(config_path, algo, snr_spec, trials, out_dir, threads,
                             adaptive_k, no_analysis);
        if (analyze->parsed()) return cmd_analyze(a_config, a_snr, a_out);
        if (validate_cmd->parsed()) {
            const auto report = masim::harness::validate(fast, &std::cout);
            return report.all_ok() ? 0 : 1;
        }
        if (single->parsed()) return cmd_single(s_config, s_algo, s_snr, s_trial, s_dump);
    } catch (const masim::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const masim::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
