#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "masim/rng.hpp"
#include "masim/system_config.hpp"
#include "masim/types.hpp"

namespace masim::model {

// T x d complex matrix with unit-norm columns; doubles as the user identity.
using PrecodingMatrix = Eigen::MatrixXcd;

// Per-user precoding matrices for all N online users. Drawn once per seed:
// the receiver knows them and they persist across frames.
struct PrecodingSet {
    int frame_len = 0;
    int block_len = 0;
    std::vector<PrecodingMatrix> users;

    int num_users() const { return static_cast<int>(users.size()); }
};

// Channel responses for all online users within one coherence interval.
struct ChannelSet {
    Eigen::MatrixXcd h;         // M x N, column n = h_n
    Eigen::VectorXd sq_norms;   // cached h_n^H h_n

    int num_antennas() const { return static_cast<int>(h.rows()); }
    int num_users() const { return static_cast<int>(h.cols()); }
};

// One realized frame.
struct ScenarioDraw {
    ChannelSet channels;                         // per-frame fading realization
    std::vector<int> active_set;                 // sorted user indices
    std::vector<BitVec> payload_bits;            // raw info bits per active user
    std::vector<BitVec> tx_bits;                 // transmitted (coded or raw) bits
    Eigen::VectorXcd symbols;                    // N*d block vector, zero when inactive
    Eigen::MatrixXcd received;                   // M x T matrix form of y
    double noise_variance = 1.0;                 // per complex element
};

PrecodingMatrix generate_precoding(int frame_len, int block_len, Rng& rng);
PrecodingSet generate_precoding_set(int frame_len, int block_len, int num_users, Rng& rng);

ChannelSet draw_channels(int num_antennas, int num_users, Rng& rng);

std::vector<int> draw_active_set(int num_users, const Activity& activity, Rng& rng);

// Gray map fixed as 00 -> (1+j)/sqrt2, 01 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2,
// 10 -> (1-j)/sqrt2: first bit flips the imaginary sign, second the real sign.
Eigen::VectorXcd modulate_qpsk(const BitVec& bits);
BitVec demodulate_qpsk(const Eigen::VectorXcd& symbols);

// Y = sqrt(rho0) * sum_{n active} h_n (P_n s_n)^T + Z, never materializing the
// MT x Nd dictionary. `symbols` is the full N*d block vector; blocks that are
// exactly zero are skipped.
Eigen::MatrixXcd assemble_measurement(const SystemConfig& config,
                                      const PrecodingSet& precodings,
                                      const ChannelSet& channels,
                                      const Eigen::VectorXcd& symbols,
                                      Rng& rng, bool add_noise = true);

// Explicit Kronecker column block P_n (x) h_n; test and oracle use only.
Eigen::MatrixXcd kron_block(const PrecodingMatrix& p, const Eigen::VectorXcd& h);

}  // namespace masim::model
