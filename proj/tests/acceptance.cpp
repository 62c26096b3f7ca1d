// Acceptance suite: end-to-end reproduction checks at desk scale, one
// pass/fail line per criterion. Run everything with --all or a subset with
// repeated --criterion flags (5 and 6 share one sweep when run together).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "masim/analysis.hpp"
#include "masim/harness.hpp"
#include "masim/validate.hpp"

using namespace masim;
using harness::MetricsRow;
using harness::SweepOptions;
using recovery::Algorithm;

namespace {

struct Outcome {
    int criterion;
    bool pass;
    std::string detail;
};

std::vector<Outcome> g_outcomes;
int g_threads = 1;

void report(int criterion, bool pass, const std::string& detail) {
    g_outcomes.push_back({criterion, pass, detail});
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
}

std::string num(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SweepOptions opts(bool with_analysis = false) {
    SweepOptions o;
    o.threads = g_threads;
    o.with_analysis = with_analysis;
    return o;
}

SystemConfig base_uncoded(int na, int k = 30, uint64_t seed = 1001) {
    SystemConfig cfg;
    cfg.num_antennas = 8;
    cfg.num_online = 80;
    cfg.block_len = 100;
    cfg.frame_len = 500;
    cfg.iterations = k;
    cfg.activity = Activity::fixed(na);
    cfg.max_active = na;
    cfg.seed = seed;
    return cfg;
}

SystemConfig base_coded(int na, uint64_t seed) {
    SystemConfig cfg;
    cfg.num_antennas = 8;
    cfg.num_online = 80;
    cfg.block_len = 124;
    cfg.frame_len = 620;
    cfg.iterations = 30;
    cfg.activity = Activity::fixed(na);
    cfg.max_active = na;
    cfg.coded = true;
    cfg.seed = seed;
    return cfg;
}

bool intervals_disjoint(double a, double a_se, double b, double b_se) {
    // 95% normal intervals
    const double lo_a = a - 1.96 * a_se, hi_a = a + 1.96 * a_se;
    const double lo_b = b - 1.96 * b_se, hi_b = b + 1.96 * b_se;
    return hi_a < lo_b || hi_b < lo_a;
}

bool none_excluded(std::initializer_list<const std::vector<MetricsRow>*> sets) {
    for (const auto* rows : sets)
        for (const auto& r : *rows)
            if (r.excluded != 0) return false;
    return true;
}

// --- criterion 1: normalized vs plain BOMP at Na = 24, 4 dB ---------------
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    SystemConfig cfg = base_uncoded(24);
    const long trials = 500;
    const auto nb = harness::run_sweep(cfg, {4.0}, trials, Algorithm::Nbomp, opts());
    std::fprintf(stderr, "  [c1] nbomp done (%.0f s)\n", elapsed_s(t0));
    const auto pb = harness::run_sweep(cfg, {4.0}, trials, Algorithm::Bomp, opts());
    const double secs = elapsed_s(t0);

    const MetricsRow &rn = nb[0], &rp = pb[0];
    const bool separated = rn.udsr > rp.udsr &&
                           intervals_disjoint(rn.udsr, rn.udsr_se, rp.udsr, rp.udsr_se) &&
                           none_excluded({&nb, &pb});
    const unsigned hw = std::thread::hardware_concurrency();
    const bool budget_applies = hw >= 4;
    const bool within_budget = !budget_applies || secs <= 900.0;
    report(1, separated && within_budget,
           "UDSR normalized " + num(rn.udsr) + "+-" + num(1.96 * rn.udsr_se, 2) +
               " vs plain " + num(rp.udsr) + "+-" + num(1.96 * rp.udsr_se, 2) +
               ", disjoint 95% intervals: " + (separated ? "yes" : "no") + "; " +
               num(secs, 3) + " s on " + std::to_string(hw) +
               " hardware threads (900 s budget " +
               (budget_applies ? "enforced" : "reported only below 4 threads") + ")");
}

// --- criterion 2: larger K helps detection, hurts demodulation ------------
void criterion2() {
    SystemConfig cfg20 = base_uncoded(16, 20, 1002);
    SystemConfig cfg30 = base_uncoded(16, 30, 1002);
    const long trials = 500;
    const auto r20 = harness::run_sweep(cfg20, {2.0}, trials, Algorithm::Nbomp, opts());
    std::fprintf(stderr, "  [c2] K=20 done\n");
    const auto r30 = harness::run_sweep(cfg30, {2.0}, trials, Algorithm::Nbomp, opts());
    const bool udsr_up = r30[0].udsr >= r20[0].udsr;
    const bool ser_up = r30[0].ser >= r20[0].ser;
    report(2, udsr_up && ser_up && none_excluded({&r20, &r30}),
           "K=30 vs K=20 at 2 dB: UDSR " + num(r30[0].udsr) + " >= " + num(r20[0].udsr) +
               ": " + (udsr_up ? "yes" : "no") + "; SER " + num(r30[0].ser) +
               " >= " + num(r20[0].ser) + ": " + (ser_up ? "yes" : "no"));
}

// --- criterion 3: ICBOMP beats normalized BOMP with final-only decoding ---
void criterion3() {
    SystemConfig cfg = base_coded(24, 1003);
    const long trials = 300;
    const auto ic = harness::run_sweep(cfg, {4.0}, trials, Algorithm::Icbomp, opts());
    std::fprintf(stderr, "  [c3] icbomp done\n");
    const auto nb = harness::run_sweep(cfg, {4.0}, trials, Algorithm::Nbomp, opts());
    const MetricsRow &ri = ic[0], &rn = nb[0];
    const bool better = ri.ser < rn.ser &&
                        intervals_disjoint(ri.ser, ri.ser_se, rn.ser, rn.ser_se) &&
                        none_excluded({&ic, &nb});
    report(3, better,
           "SER icbomp " + num(ri.ser) + "+-" + num(1.96 * ri.ser_se, 2) +
               " vs nbomp+final-decode " + num(rn.ser) + "+-" + num(1.96 * rn.ser_se, 2) +
               " at 4 dB (coded), disjoint 95% intervals: " + (better ? "yes" : "no"));
}

// --- criterion 4: per-iteration block-update cost rises then collapses ----
void criterion4() {
    SystemConfig cfg = base_coded(30, 1004);
    const long trials = 120;
    const auto ic = harness::run_sweep(cfg, {4.6}, trials, Algorithm::Icbomp, opts());
    const auto& mean_blocks = ic[0].mean_blocks_per_iteration;
    double peak = 0.0;
    size_t peak_at = 0;
    for (size_t i = 0; i < mean_blocks.size(); ++i)
        if (mean_blocks[i] > peak) {
            peak = mean_blocks[i];
            peak_at = i;
        }
    const double last = mean_blocks.empty() ? 0.0 : mean_blocks.back();
    const bool peak_early = peak_at + 1 < static_cast<size_t>(cfg.iterations);
    const bool collapses = last <= 0.5 * peak;

    // plain normalized BOMP updates exactly k blocks at iteration k
    SystemConfig small = cfg;
    const auto nb = harness::run_sweep(small, {4.6}, 5, Algorithm::Nbomp, opts());
    bool linear = nb[0].mean_blocks_per_iteration.size() ==
                  static_cast<size_t>(cfg.iterations);
    for (size_t i = 0; linear && i < nb[0].mean_blocks_per_iteration.size(); ++i)
        linear = nb[0].mean_blocks_per_iteration[i] == double(i + 1);

    report(4, peak_early && collapses && linear && none_excluded({&ic, &nb}),
           "icbomp blocks peak " + num(peak) + " at iteration " +
               std::to_string(peak_at + 1) + " of " + std::to_string(cfg.iterations) +
               ", final " + num(last) + " (<= 50% of peak: " +
               (collapses ? "yes" : "no") + "); nbomp baseline exactly linear: " +
               (linear ? "yes" : "no"));
}

// --- criteria 5 and 6: GUDSR bound and SER analysis offset ----------------
std::vector<MetricsRow> run_na8_sweep() {
    SystemConfig cfg = base_uncoded(8, 30, 1005);
    // Starts at 3 dB: the bound is only claimed when the SNR is not too
    // small, and the top end must bracket the SER = 1e-2 crossing.
    const std::vector<double> grid{3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    return harness::run_sweep(cfg, grid, 500, Algorithm::Nbomp, opts(true));
}

void criterion5(const std::vector<MetricsRow>& rows) {
    bool bound_ok = true;
    std::string worst;
    for (const auto& r : rows) {
        if (r.gudsr < 0.9) continue;
        if (r.gudsr_bound > r.gudsr + 2.0 * r.gudsr_se) {
            bound_ok = false;
            worst = " violated at " + num(r.snr_db, 3) + " dB (bound " +
                    num(r.gudsr_bound) + " vs gudsr " + num(r.gudsr) + "+-" +
                    num(r.gudsr_se, 2) + ")";
        }
    }
    const MetricsRow& top = rows.back();
    const double gap = top.gudsr - top.gudsr_bound;
    const bool tight = gap <= 0.05;
    report(5, bound_ok && tight && none_excluded({&rows}),
           "lower bound holds wherever empirical GUDSR >= 0.9: " +
               std::string(bound_ok ? "yes" : "no") + worst + "; top-SNR gap " +
               num(gap) + " (<= 0.05: " + (tight ? "yes" : "no") + ") at " +
               num(top.snr_db, 3) + " dB (gudsr " + num(top.gudsr) + ", bound " +
               num(top.gudsr_bound) + ")");
}

double crossing_db(const std::vector<double>& snr, const std::vector<double>& ser,
                   double level) {
    for (size_t i = 0; i + 1 < snr.size(); ++i) {
        const double a = ser[i], b = ser[i + 1];
        if ((a - level) * (b - level) <= 0.0 && a > 0 && b > 0 && a != b) {
            const double la = std::log10(a), lb = std::log10(b), ll = std::log10(level);
            return snr[i] + (ll - la) / (lb - la) * (snr[i + 1] - snr[i]);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void criterion6(const std::vector<MetricsRow>& rows) {
    std::vector<double> snr, ser_sim;
    for (const auto& r : rows) {
        snr.push_back(r.snr_db);
        ser_sim.push_back(r.ser);
    }
    const double db_sim = crossing_db(snr, ser_sim, 1e-2);

    // dense analytical curve over the same span
    std::vector<double> snr_a, ser_a;
    for (double db = snr.front(); db <= snr.back() + 1e-9; db += 0.05) {
        snr_a.push_back(db);
        ser_a.push_back(analysis::ser_average(8, 500, 30, 100, std::pow(10.0, db / 10.0)));
    }
    const double db_pred = crossing_db(snr_a, ser_a, 1e-2);
    const double gap = db_sim - db_pred;
    const bool ok = !std::isnan(db_sim) && !std::isnan(db_pred) && gap >= 0.5 && gap <= 2.5;
    report(6, ok,
           "SER=1e-2 at " + num(db_sim, 4) + " dB simulated vs " + num(db_pred, 4) +
               " dB predicted; analysis optimistic by " + num(gap, 3) +
               " dB (within [0.5, 2.5]: " + (ok ? "yes" : "no") + ")");
}

// --- criterion 7: high-SNR group detection with many online users ---------
void criterion7() {
    SystemConfig cfg;
    cfg.num_antennas = 8;
    cfg.num_online = 2560;
    cfg.block_len = 124;
    cfg.frame_len = 620;
    cfg.iterations = 24;
    cfg.activity = Activity::fixed(24);
    cfg.max_active = 24;
    cfg.coded = true;
    cfg.seed = 1007;
    const long trials = 1000;
    const auto rows = harness::run_sweep(cfg, {2.6}, trials, Algorithm::Icbomp, opts());
    const long failures = std::lround((1.0 - rows[0].gudsr) * rows[0].trials);
    const bool ok = rows[0].gudsr >= 0.995 && rows[0].excluded == 0;
    report(7, ok,
           "N=2560 icbomp at 2.6 dB: " + std::to_string(failures) +
               " group-detection failures in " + std::to_string(rows[0].trials) +
               " trials (GUDSR " + num(rows[0].gudsr, 5) + " >= 0.995: " +
               (ok ? "yes" : "no") + ")");
}

// --- criterion 8: coding loss bookkeeping ----------------------------------
void criterion8() {
    const double loss = harness::coding_loss_db();
    const bool ok =
        std::abs(loss - 0.583) < 2e-3 && std::round(loss * 10.0) / 10.0 == 0.6;
    report(8, ok,
           "10*log10(255/223) = " + num(loss, 4) + " dB, displays as " +
               num(std::round(loss * 10.0) / 10.0, 2) + " dB");
}

// --- criterion 9: oracle suite --------------------------------------------
void criterion9() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = harness::validate(false, &std::cerr);
    const double secs = elapsed_s(t0);
    int failures = 0;
    for (const auto& c : rep.checks) failures += c.ok ? 0 : 1;
    const bool ok = failures == 0 && secs <= 600.0;
    report(9, ok,
           std::to_string(rep.checks.size()) + " oracle checks, " +
               std::to_string(failures) + " failures, " + num(secs, 3) +
               " s (<= 600 s)");
}

// --- criterion 10: bit-identical reruns under varied parallelism ----------
void criterion10() {
    SystemConfig cfg;
    cfg.num_antennas = 4;
    cfg.num_online = 20;
    cfg.block_len = 10;
    cfg.frame_len = 50;
    cfg.iterations = 8;
    cfg.activity = Activity::fixed(4);
    cfg.max_active = 4;
    cfg.seed = 1010;

    SweepOptions one = opts(true);
    one.threads = 1;
    SweepOptions four = opts(true);
    four.threads = 4;
    const auto a = harness::run_sweep(cfg, {1.0, 4.0}, 60, Algorithm::Nbomp, one);
    const auto b = harness::run_sweep(cfg, {1.0, 4.0}, 60, Algorithm::Nbomp, four);
    const auto c = harness::run_sweep(cfg, {1.0, 4.0}, 60, Algorithm::Nbomp, one);
    const bool nbomp_ok = harness::csv_string(a) == harness::csv_string(b) &&
                          harness::csv_string(a) == harness::csv_string(c);

    SystemConfig icfg;
    icfg.num_antennas = 4;
    icfg.num_online = 16;
    icfg.block_len = 124;
    icfg.frame_len = 620;
    icfg.iterations = 6;
    icfg.activity = Activity::fixed(3);
    icfg.max_active = 3;
    icfg.coded = true;
    icfg.seed = 1011;
    const auto ia = harness::run_sweep(icfg, {3.0}, 20, Algorithm::Icbomp, one);
    const auto ib = harness::run_sweep(icfg, {3.0}, 20, Algorithm::Icbomp, four);
    const bool icbomp_ok = harness::csv_string(ia) == harness::csv_string(ib);

    report(10, nbomp_ok && icbomp_ok,
           std::string("bit-identical sweeps across reruns and 1 vs 4 threads: nbomp ") +
               (nbomp_ok ? "yes" : "no") + ", icbomp " + (icbomp_ok ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    bool all = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--all") {
            all = true;
        } else if (arg == "--criterion" && i + 1 < argc) {
            wanted.insert(std::atoi(argv[++i]));
        } else if (arg == "--threads" && i + 1 < argc) {
            g_threads = std::atoi(argv[++i]);
        } else if (arg == "--list") {
            std::puts("criteria 1..10 (5 and 6 share one sweep when run together)");
            return 0;
        } else {
            std::fprintf(stderr,
                         "usage: acceptance [--all] [--criterion N]... [--threads N]\n");
            return 2;
        }
    }
    if (all)
        for (int i = 1; i <= 10; ++i) wanted.insert(i);
    if (wanted.empty()) {
        std::fprintf(stderr, "nothing to run; use --all or --criterion N\n");
        return 2;
    }
    if (g_threads <= 0)
        g_threads = std::max(1u, std::thread::hardware_concurrency());

    try {
        for (int c : wanted) {
            const auto t0 = std::chrono::steady_clock::now();
            switch (c) {
                case 1: criterion1(); break;
                case 2: criterion2(); break;
                case 3: criterion3(); break;
                case 4: criterion4(); break;
                case 5:
                case 6: {
                    static std::vector<MetricsRow> shared_rows;
                    if (shared_rows.empty()) shared_rows = run_na8_sweep();
                    if (c == 5) criterion5(shared_rows);
                    else criterion6(shared_rows);
                    break;
                }
                case 7: criterion7(); break;
                case 8: criterion8(); break;
                case 9: criterion9(); break;
                case 10: criterion10(); break;
                default:
                    std::fprintf(stderr, "unknown criterion %d\n", c);
                    return 2;
            }
            std::fprintf(stderr, "  [criterion %d took %.0f s]\n", c, elapsed_s(t0));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
        return 1;
    }

    bool all_pass = true;
    for (const auto& o : g_outcomes) all_pass &= o.pass;
    std::printf("%d of %zu criteria passed\n",
                static_cast<int>(std::count_if(g_outcomes.begin(), g_outcomes.end(),
                                               [](const Outcome& o) { return o.pass; })),
                g_outcomes.size());
    return all_pass ? 0 : 1;
}
