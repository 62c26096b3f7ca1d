#include "masim/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "masim/model.hpp"

namespace masim::recovery {

const char* algorithm_name(Algorithm algo) {
    switch (algo) {
        case Algorithm::Bomp: return "bomp";
        case Algorithm::Nbomp: return "nbomp";
        case Algorithm::Icbomp: return "icbomp";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "bomp") return Algorithm::Bomp;
    if (name == "nbomp") return Algorithm::Nbomp;
    if (name == "icbomp") return Algorithm::Icbomp;
    throw ConfigError("unknown algorithm: " + name);
}

Recoverer::Recoverer(int num_antennas, int frame_len, int block_len, int max_blocks)
    : m_(num_antennas), t_(frame_len), d_(block_len), cap_(max_blocks) {
    if (static_cast<long>(max_blocks) * block_len >
        static_cast<long>(num_antennas) * frame_len)
        throw ConfigError("selected blocks would exceed the measurement dimension");
    chol_.init(block_len, max_blocks);
    residual_.resize(num_antennas, frame_len);
    col_scratch_.resize(max_blocks * block_len, block_len);
    rhs_.resize(max_blocks * block_len);
}

int Recoverer::select_candidate(const Dictionary& dict, const Eigen::MatrixXcd& residual,
                                const std::vector<char>& excluded, bool normalize) const {
    int best = -1;
    double best_c = -1.0;
    const int n = dict.num_users();
    for (int j = 0; j < n; ++j) {
        if (excluded[j]) continue;
        const double c = dict.correlate_block(residual, j, normalize);
        if (c > best_c) {  // strict: ties resolve to the lowest index
            best_c = c;
            best = j;
        }
    }
    return best;
}

void Recoverer::append_block(const Dictionary& dict, const std::vector<int>& selected,
                             int user) {
    const int k = static_cast<int>(selected.size());
    auto col = col_scratch_.topRows(k * d_);
    for (int i = 0; i < k; ++i)
        col.middleRows(i * d_, d_) = dict.gram_block(selected[i], user);
    chol_.append(col, dict.gram_block(user, user));
}

namespace {

// y_matrix - sqrt(rho0) * sum_i h_i (P_i s_i)^T for the given blocks.
void subtract_blocks(Eigen::MatrixXcd& target, const Dictionary& dict,
                     const std::vector<int>& users, const Eigen::VectorXcd& stacked,
                     double amp) {
    const int d = dict.block_len();
    for (size_t i = 0; i < users.size(); ++i) {
        const int u = users[i];
        const Eigen::VectorXcd spread =
            dict.precodings().users[u] * stacked.segment(i * d, d);
        target.noalias() -= amp * dict.channels().h.col(u) * spread.transpose();
    }
}

}  // namespace

RecoveryResult Recoverer::bomp(const Eigen::MatrixXcd& y, const Dictionary& dict,
                               int k_iterations, bool normalize, double rho0) {
    if (y.rows() != m_ || y.cols() != t_) throw InputError("bomp: bad measurement shape");
    if (k_iterations > cap_) throw InputError("bomp: iterations exceed workspace capacity");
    const double amp = std::sqrt(rho0);

    RecoveryResult result;
    chol_.reset();
    std::vector<char> excluded(dict.num_users(), 0);
    std::vector<int> selected;
    residual_ = y;

    const int rounds = std::min<int>(k_iterations, dict.num_users());
    for (int k = 0; k < rounds; ++k) {
        const int pick = select_candidate(dict, residual_, excluded, normalize);
        excluded[pick] = 1;
        append_block(dict, selected, pick);
        selected.push_back(pick);
        rhs_.segment((selected.size() - 1) * d_, d_) = dict.corr_vector(y, pick);

        Eigen::VectorXcd s_hat =
            chol_.solve(rhs_.head(selected.size() * d_)) / amp;
        residual_ = y;
        subtract_blocks(residual_, dict, selected, s_hat, amp);

        result.blocks_updated_per_iteration.push_back(static_cast<int>(selected.size()));
        result.residual_norms.push_back(residual_.norm());
        if (k + 1 == rounds) {
            for (size_t i = 0; i < selected.size(); ++i)
                result.estimates[selected[i]] = s_hat.segment(i * d_, d_);
        }
    }
    result.selected_order = selected;
    result.iterations_run = rounds;
    result.gram_regularized = chol_.regularized();
    return result;
}

RecoveryResult Recoverer::icbomp(const Eigen::MatrixXcd& y, const Dictionary& dict,
                                 int k_iterations, double rho0, bool adaptive_k) {
    if (y.rows() != m_ || y.cols() != t_) throw InputError("icbomp: bad measurement shape");
    if (2 * d_ != codec::kCodedBits)
        throw ConfigError("icbomp requires d = 124 coded blocks");
    const double amp = std::sqrt(rho0);
    const int hard_cap =
        std::min<long>(cap_, static_cast<long>(m_) * t_ / d_);

    RecoveryResult result;
    chol_.reset();
    std::vector<char> excluded(dict.num_users(), 0);
    std::vector<int> selected;  // current (not yet cancelled) blocks
    Eigen::MatrixXcd y_work = y;
    Eigen::VectorXcd s_hat;
    bool rhs_dirty = false;
    int k_target = std::min(k_iterations, hard_cap);
    int total_selections = 0;

    for (int k = 0; k < k_target; ++k) {
        if (total_selections >= dict.num_users()) break;
        if (static_cast<int>(selected.size()) + 1 > hard_cap) break;

        residual_ = y_work;
        subtract_blocks(residual_, dict, selected,
                        s_hat.head(selected.size() * d_), amp);
        const int pick = select_candidate(dict, residual_, excluded, true);
        excluded[pick] = 1;
        ++total_selections;
        result.selected_order.push_back(pick);
        append_block(dict, selected, pick);
        selected.push_back(pick);
        if (rhs_dirty) {
            for (size_t i = 0; i + 1 < selected.size(); ++i)
                rhs_.segment(i * d_, d_) = dict.corr_vector(y_work, selected[i]);
            rhs_dirty = false;
        }
        rhs_.segment((selected.size() - 1) * d_, d_) = dict.corr_vector(y_work, pick);

        s_hat = chol_.solve(rhs_.head(selected.size() * d_)) / amp;
        result.blocks_updated_per_iteration.push_back(static_cast<int>(selected.size()));

        // Error correction and detection for every block still in play.
        std::vector<int> cancel_pos;
        for (size_t i = 0; i < selected.size(); ++i) {
            const int user = selected[i];
            const BitVec bits = model::demodulate_qpsk(s_hat.segment(i * d_, d_));
            codec::DecodeOutcome outcome = codec::bch_decode(bits);
            if (outcome.ok()) {
                // Perfect cancellation: rebuild the exact transmitted block
                // and subtract it from the working measurement.
                const Eigen::VectorXcd remod = model::modulate_qpsk(
                    codec::bch_encode(codec::crc16_append(outcome.bits)));
                const Eigen::VectorXcd spread = dict.precodings().users[user] * remod;
                y_work.noalias() -=
                    amp * dict.channels().h.col(user) * spread.transpose();
                result.estimates[user] = remod;
                result.cancelled_at[user] = k + 1;
                cancel_pos.push_back(static_cast<int>(i));
            }
            result.decoded[user] = std::move(outcome);
        }
        if (!cancel_pos.empty()) {
            chol_.remove_sorted(cancel_pos);
            Eigen::VectorXcd kept((selected.size() - cancel_pos.size()) * d_);
            std::vector<int> kept_users;
            size_t next = 0, w = 0;
            for (size_t i = 0; i < selected.size(); ++i) {
                if (next < cancel_pos.size() && cancel_pos[next] == static_cast<int>(i)) {
                    ++next;
                    continue;
                }
                kept.segment(w * d_, d_) = s_hat.segment(i * d_, d_);
                kept_users.push_back(selected[i]);
                ++w;
            }
            selected.swap(kept_users);
            s_hat.head(kept.size()) = kept;
            rhs_dirty = true;
            if (adaptive_k)
                k_target = std::min(hard_cap,
                                    k_target + static_cast<int>(cancel_pos.size()));
        }

        residual_ = y_work;
        subtract_blocks(residual_, dict, selected,
                        s_hat.head(selected.size() * d_), amp);
        result.residual_norms.push_back(residual_.norm());
        result.iterations_run = k + 1;
    }

    for (size_t i = 0; i < selected.size(); ++i)
        result.estimates[selected[i]] = s_hat.segment(i * d_, d_);
    result.gram_regularized = chol_.regularized();
    return result;
}

std::map<int, Eigen::VectorXcd> ls_update(const std::vector<int>& selected,
                                          const Eigen::MatrixXcd& y,
                                          const Dictionary& dict, double rho0) {
    const int d = dict.block_len();
    if (static_cast<long>(selected.size()) * d >
        static_cast<long>(dict.num_antennas()) * dict.frame_len())
        throw InputError("ls_update: selected blocks exceed measurement dimension");
    BlockCholesky chol;
    chol.init(d, static_cast<int>(selected.size()));
    Eigen::VectorXcd rhs(selected.size() * d);
    Eigen::MatrixXcd col(selected.size() * d, d);
    std::vector<int> prefix;
    for (size_t i = 0; i < selected.size(); ++i) {
        for (size_t p = 0; p < prefix.size(); ++p)
            col.middleRows(p * d, d) = dict.gram_block(prefix[p], selected[i]);
        chol.append(col.topRows(prefix.size() * d), dict.gram_block(selected[i], selected[i]));
        rhs.segment(i * d, d) = dict.corr_vector(y, selected[i]);
        prefix.push_back(selected[i]);
    }
    const Eigen::VectorXcd s = chol.solve(rhs) / std::sqrt(rho0);
    std::map<int, Eigen::VectorXcd> out;
    for (size_t i = 0; i < selected.size(); ++i)
        out[selected[i]] = s.segment(i * d, d);
    return out;
}

}  // namespace masim::recovery
