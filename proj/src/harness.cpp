#include "masim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "masim/analysis.hpp"
#include "masim/codec.hpp"

namespace masim::harness {

namespace {

constexpr uint64_t kPrecodingStream = 0x50u;  // 'P'
constexpr uint64_t kTrialStream = 0x54u;      // 'T'

BitVec random_bits(Rng& rng, int count) {
    BitVec bits(count);
    for (int i = 0; i < count; ++i) bits[i] = rng.next_u64() >> 63;
    return bits;
}

}  // namespace

bool TrialMetrics::same_outcome(const TrialMetrics& other) const {
    return active_count == other.active_count &&
           detected_active == other.detected_active &&
           missed_active == other.missed_active &&
           false_selected == other.false_selected &&
           group_success == other.group_success &&
           symbol_errors == other.symbol_errors &&
           symbols_total == other.symbols_total &&
           blocks_updated == other.blocks_updated && failed == other.failed;
}

RunContext RunContext::make(const SystemConfig& config, recovery::Algorithm algo,
                            bool adaptive_k) {
    config.validate();
    if (algo == recovery::Algorithm::Icbomp && !config.coded)
        throw ConfigError("icbomp requires coded=1 (d = 124 payloads)");
    RunContext ctx;
    ctx.config = config;
    ctx.algorithm = algo;
    ctx.adaptive_k = adaptive_k;
    Rng rng = Rng::stream(config.seed, {kPrecodingStream});
    ctx.precodings = std::make_shared<model::PrecodingSet>(model::generate_precoding_set(
        config.frame_len, config.block_len, config.num_online, rng));
    ctx.gram_cache = std::make_shared<recovery::PrecoderGramCache>(
        recovery::PrecoderGramCache::suggested_bytes(config.num_online, config.block_len));
    return ctx;
}

int RunContext::max_blocks() const {
    const long cap = static_cast<long>(config.num_antennas) * config.frame_len /
                     config.block_len;
    if (adaptive_k) return static_cast<int>(std::min<long>(cap, config.num_online));
    return static_cast<int>(std::min<long>(cap, config.iterations));
}

model::ScenarioDraw draw_scenario(const RunContext& ctx, uint64_t snr_index,
                                  uint64_t trial_index) {
    const SystemConfig& cfg = ctx.config;
    Rng rng = Rng::stream(cfg.seed, {kTrialStream, snr_index, trial_index});

    model::ScenarioDraw draw;
    draw.channels = model::draw_channels(cfg.num_antennas, cfg.num_online, rng);
    draw.active_set = model::draw_active_set(cfg.num_online, cfg.activity, rng);

    draw.symbols = Eigen::VectorXcd::Zero(
        static_cast<Eigen::Index>(cfg.num_online) * cfg.block_len);
    draw.payload_bits.reserve(draw.active_set.size());
    draw.tx_bits.reserve(draw.active_set.size());
    for (int user : draw.active_set) {
        BitVec tx;
        if (cfg.coded) {
            BitVec info = random_bits(rng, codec::kInfoBits);
            tx = codec::bch_encode(codec::crc16_append(info));
            draw.payload_bits.push_back(std::move(info));
        } else {
            tx = random_bits(rng, 2 * cfg.block_len);
            draw.payload_bits.push_back(tx);
        }
        draw.symbols.segment(static_cast<Eigen::Index>(user) * cfg.block_len,
                             cfg.block_len) = model::modulate_qpsk(tx);
        draw.tx_bits.push_back(std::move(tx));
    }
    draw.received = model::assemble_measurement(cfg, *ctx.precodings, draw.channels,
                                                draw.symbols, rng);
    draw.noise_variance = 1.0;
    return draw;
}

namespace {

long count_block_symbol_errors(const BitVec& rx_bits, const BitVec& tx_bits) {
    long errors = 0;
    for (size_t i = 0; i + 1 < tx_bits.size(); i += 2)
        if (rx_bits[i] != tx_bits[i] || rx_bits[i + 1] != tx_bits[i + 1]) ++errors;
    return errors;
}

}  // namespace

TrialMetrics run_trial(const RunContext& ctx, uint64_t snr_index, uint64_t trial_index,
                       recovery::Recoverer* workspace,
                       recovery::RecoveryResult* result_out) {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemConfig& cfg = ctx.config;
    model::ScenarioDraw draw = draw_scenario(ctx, snr_index, trial_index);
    recovery::Dictionary dict(*ctx.precodings, draw.channels, ctx.gram_cache.get());

    std::optional<recovery::Recoverer> local;
    if (!workspace) {
        local.emplace(cfg.num_antennas, cfg.frame_len, cfg.block_len, ctx.max_blocks());
        workspace = &*local;
    }

    TrialMetrics metrics;
    metrics.active_count = static_cast<int>(draw.active_set.size());
    metrics.symbols_total =
        static_cast<long>(draw.active_set.size()) * cfg.block_len;

    recovery::RecoveryResult result;
    try {
        switch (ctx.algorithm) {
            case recovery::Algorithm::Bomp:
                result = workspace->bomp(draw.received, dict, cfg.iterations, false,
                                         cfg.rho0());
                break;
            case recovery::Algorithm::Nbomp:
                result = workspace->bomp(draw.received, dict, cfg.iterations, true,
                                         cfg.rho0());
                break;
            case recovery::Algorithm::Icbomp:
                result = workspace->icbomp(draw.received, dict, cfg.iterations,
                                           cfg.rho0(), ctx.adaptive_k);
                break;
        }
    } catch (const NumericError&) {
        metrics.failed = true;
        metrics.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return metrics;
    }

    std::vector<char> is_active(cfg.num_online, 0);
    for (int u : draw.active_set) is_active[u] = 1;
    std::vector<char> was_selected(cfg.num_online, 0);
    for (int u : result.selected_order) {
        was_selected[u] = 1;
        if (!is_active[u]) ++metrics.false_selected;
    }

    for (size_t a = 0; a < draw.active_set.size(); ++a) {
        const int user = draw.active_set[a];
        if (!was_selected[user]) {
            ++metrics.missed_active;
            metrics.symbol_errors += cfg.block_len;  // a missed user loses all d symbols
            continue;
        }
        ++metrics.detected_active;
        const auto est = result.estimates.find(user);
        if (est == result.estimates.end()) {
            // Selected but evicted from the final estimate set; counts as lost.
            metrics.symbol_errors += cfg.block_len;
            continue;
        }
        BitVec rx = model::demodulate_qpsk(est->second);
        if (cfg.coded && ctx.algorithm != recovery::Algorithm::Icbomp) {
            // Final-only error correction and detection for the BOMP variants.
            const codec::DecodeOutcome outcome = codec::bch_decode(rx);
            if (outcome.ok())
                rx = codec::bch_encode(codec::crc16_append(outcome.bits));
        }
        metrics.symbol_errors += count_block_symbol_errors(rx, draw.tx_bits[a]);
    }
    metrics.group_success = metrics.missed_active == 0;
    metrics.blocks_updated = result.blocks_updated_per_iteration;
    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (result_out) *result_out = std::move(result);
    return metrics;
}

std::vector<MetricsRow> run_sweep(const SystemConfig& config,
                                  const std::vector<double>& snr_grid_db, long trials,
                                  recovery::Algorithm algo, const SweepOptions& opts) {
    if (snr_grid_db.empty()) throw ConfigError("empty SNR grid");
    if (trials < 1) throw ConfigError("trials must be positive");
    RunContext ctx = RunContext::make(config, algo, opts.adaptive_k);

    const bool fixed_activity = config.activity.kind == Activity::Kind::FixedCount;
    std::optional<analysis::ChannelOrderMoments> moments;
    if (opts.with_analysis && fixed_activity)
        moments = analysis::ChannelOrderMoments::compute(config.num_antennas,
                                                         config.activity.count);

    std::vector<MetricsRow> rows;
    for (size_t si = 0; si < snr_grid_db.size(); ++si) {
        ctx.config.snr_db = snr_grid_db[si];

        std::vector<TrialMetrics> per_trial(trials);
        const int n_threads = std::max(1, opts.threads);
        std::atomic<long> next{0};
        auto worker = [&]() {
            recovery::Recoverer ws(ctx.config.num_antennas, ctx.config.frame_len,
                                   ctx.config.block_len, ctx.max_blocks());
            for (;;) {
                const long idx = next.fetch_add(1);
                if (idx >= trials) break;
                per_trial[idx] = run_trial(ctx, si, idx, &ws);
            }
        };
        if (n_threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        // Ordered reduction, so sums do not depend on scheduling.
        MetricsRow row;
        row.algorithm = recovery::algorithm_name(algo);
        row.m = config.num_antennas;
        row.n = config.num_online;
        row.na = fixed_activity
                     ? config.activity.count
                     : static_cast<int>(std::lround(config.num_online *
                                                    config.activity.prob));
        row.d = config.block_len;
        row.t = config.frame_len;
        row.k = config.iterations;
        row.snr_db = snr_grid_db[si];

        long detected = 0, active = 0, successes = 0, errs = 0, total = 0, valid = 0;
        size_t max_iters = 0;
        for (const TrialMetrics& tm : per_trial) {
            if (tm.failed) {
                ++row.excluded;
                continue;
            }
            ++valid;
            detected += tm.detected_active;
            active += tm.active_count;
            successes += tm.group_success ? 1 : 0;
            errs += tm.symbol_errors;
            total += tm.symbols_total;
            max_iters = std::max(max_iters, tm.blocks_updated.size());
        }
        row.trials = valid;
        if (valid > 0) {
            row.udsr = active > 0 ? double(detected) / double(active) : 1.0;
            row.gudsr = double(successes) / double(valid);
            row.ser = total > 0 ? double(errs) / double(total) : 0.0;
            if (active > 0)
                row.udsr_se = std::sqrt(row.udsr * (1.0 - row.udsr) / double(active));
            row.gudsr_se = std::sqrt(row.gudsr * (1.0 - row.gudsr) / double(valid));
            if (total > 0)
                row.ser_se = std::sqrt(row.ser * (1.0 - row.ser) / double(total));
            row.mean_blocks_per_iteration.assign(max_iters, 0.0);
            for (const TrialMetrics& tm : per_trial) {
                if (tm.failed) continue;
                for (size_t i = 0; i < tm.blocks_updated.size(); ++i)
                    row.mean_blocks_per_iteration[i] += tm.blocks_updated[i];
            }
            for (double& v : row.mean_blocks_per_iteration) v /= double(valid);
        }

        if (moments) {
            const double rho0 = ctx.config.rho0();
            row.gudsr_bound = analysis::gudsr_lower_bound(
                config.num_antennas, config.num_online, config.activity.count,
                config.block_len, config.frame_len, rho0, *moments, nullptr);
            row.ser_pred = analysis::ser_average(config.num_antennas, config.frame_len,
                                                 config.iterations, config.block_len, rho0);
            row.ser_g0 = analysis::ser_g0(config.num_antennas, config.frame_len,
                                          config.iterations, config.block_len, rho0);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> parse_snr_grid(const std::string& spec) {
    std::vector<double> grid;
    try {
        if (spec.find(':') != std::string::npos) {
            const size_t c1 = spec.find(':');
            const size_t c2 = spec.find(':', c1 + 1);
            if (c2 == std::string::npos)
                throw ConfigError("snr grid must be start:step:stop");
            const double start = std::stod(spec.substr(0, c1));
            const double step = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
            const double stop = std::stod(spec.substr(c2 + 1));
            if (step <= 0.0) throw ConfigError("snr step must be positive");
            for (double v = start; v <= stop + 1e-9; v += step) grid.push_back(v);
        } else {
            size_t pos = 0;
            while (pos < spec.size()) {
                size_t comma = spec.find(',', pos);
                if (comma == std::string::npos) comma = spec.size();
                grid.push_back(std::stod(spec.substr(pos, comma - pos)));
                pos = comma + 1;
            }
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad snr grid: " + spec);
    } catch (const std::out_of_range&) {
        throw ConfigError("bad snr grid: " + spec);
    }
    if (grid.empty()) throw ConfigError("empty snr grid: " + spec);
    return grid;
}

double coding_loss_db() { return 10.0 * std::log10(255.0 / 223.0); }

}  // namespace masim::harness
