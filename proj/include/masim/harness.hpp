#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "masim/model.hpp"
#include "masim/recovery.hpp"
#include "masim/system_config.hpp"

namespace masim::harness {

struct TrialMetrics {
    int active_count = 0;
    int detected_active = 0;
    int missed_active = 0;
    int false_selected = 0;
    bool group_success = false;
    long symbol_errors = 0;
    long symbols_total = 0;
    std::vector<int> blocks_updated;
    double wall_seconds = 0.0;
    bool failed = false;  // recovery aborted; excluded from aggregates

    // wall_seconds is excluded: it is the one non-deterministic field.
    bool same_outcome(const TrialMetrics& other) const;
};

struct MetricsRow {
    // config echo
    std::string algorithm;
    int m = 0, n = 0, na = 0, d = 0, t = 0, k = 0;
    double snr_db = 0.0;
    long trials = 0;
    long excluded = 0;

    double udsr = 0.0, gudsr = 0.0, ser = 0.0;
    double udsr_se = 0.0, gudsr_se = 0.0, ser_se = 0.0;
    std::vector<double> mean_blocks_per_iteration;

    // analytical companions (NaN when not applicable)
    double gudsr_bound = std::numeric_limits<double>::quiet_NaN();
    double ser_pred = std::numeric_limits<double>::quiet_NaN();
    double ser_g0 = std::numeric_limits<double>::quiet_NaN();
};

// Per-run immutable state shared by all trials: the precoding set (user
// identities persist across frames) and the precoder Gram cache.
struct RunContext {
    SystemConfig config;
    recovery::Algorithm algorithm = recovery::Algorithm::Nbomp;
    bool adaptive_k = false;
    std::shared_ptr<const model::PrecodingSet> precodings;
    std::shared_ptr<recovery::PrecoderGramCache> gram_cache;

    static RunContext make(const SystemConfig& config, recovery::Algorithm algo,
                           bool adaptive_k = false);
    int max_blocks() const;
};

// Deterministic scenario for (seed, snr_index, trial_index).
model::ScenarioDraw draw_scenario(const RunContext& ctx, uint64_t snr_index,
                                  uint64_t trial_index);

TrialMetrics run_trial(const RunContext& ctx, uint64_t snr_index, uint64_t trial_index,
                       recovery::Recoverer* workspace = nullptr,
                       recovery::RecoveryResult* result_out = nullptr);

struct SweepOptions {
    int threads = 1;
    bool adaptive_k = false;
    bool with_analysis = true;
};

std::vector<MetricsRow> run_sweep(const SystemConfig& config,
                                  const std::vector<double>& snr_grid_db, long trials,
                                  recovery::Algorithm algo, const SweepOptions& opts = {});

std::vector<double> parse_snr_grid(const std::string& spec);  // "start:step:stop" or "a,b,c"

void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::string csv_string(const std::vector<MetricsRow>& rows);
void emit_blocks_csv(const std::vector<MetricsRow>& rows, const std::string& path);
void emit_svg(const std::vector<MetricsRow>& rows, const std::string& path);

// Es/N0 debit of the BCH(255,223) code rate, reported next to coded sweeps.
double coding_loss_db();

}  // namespace masim::harness
