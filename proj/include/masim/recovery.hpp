#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "masim/block_cholesky.hpp"
#include "masim/codec.hpp"
#include "masim/dictionary.hpp"
#include "masim/types.hpp"

namespace masim::recovery {

enum class Algorithm { Bomp, Nbomp, Icbomp };

const char* algorithm_name(Algorithm algo);
Algorithm algorithm_from_name(const std::string& name);

struct RecoveryResult {
    std::vector<int> selected_order;              // every selection, in order
    std::map<int, Eigen::VectorXcd> estimates;    // user -> final d symbols
    std::map<int, codec::DecodeOutcome> decoded;  // ICBOMP: last decode attempt
    std::map<int, int> cancelled_at;              // ICBOMP: iteration of cancellation
    std::vector<int> blocks_updated_per_iteration;
    std::vector<double> residual_norms;
    int iterations_run = 0;
    bool gram_regularized = false;
};

// Reusable workspace: one per worker thread, reset between trials.
class Recoverer {
public:
    // max_blocks bounds the concurrently selected set; extra headroom beyond
    // K is only needed for the adaptive-K extension.
    Recoverer(int num_antennas, int frame_len, int block_len, int max_blocks);

    // Plain / normalized BOMP (Algorithm choice via `normalize`).
    RecoveryResult bomp(const Eigen::MatrixXcd& y, const Dictionary& dict, int k,
                        bool normalize, double rho0);

    // Interference-cancellation BOMP with per-iteration BCH+CRC decoding.
    // With adaptive_k, every cancelled block grants one extra iteration,
    // capped at floor(MT/d) total selections.
    RecoveryResult icbomp(const Eigen::MatrixXcd& y, const Dictionary& dict, int k,
                          double rho0, bool adaptive_k);

private:
    int select_candidate(const Dictionary& dict, const Eigen::MatrixXcd& residual,
                         const std::vector<char>& excluded, bool normalize) const;
    void append_block(const Dictionary& dict, const std::vector<int>& selected,
                      int user);

    int m_, t_, d_, cap_;
    BlockCholesky chol_;
    Eigen::MatrixXcd residual_;
    Eigen::MatrixXcd col_scratch_;
    Eigen::VectorXcd rhs_;
};

// Joint least-squares re-estimate of the selected blocks, standalone entry
// point used by tests and the single-trial dump.
std::map<int, Eigen::VectorXcd> ls_update(const std::vector<int>& selected,
                                          const Eigen::MatrixXcd& y,
                                          const Dictionary& dict, double rho0);

}  // namespace masim::recovery
