#include "masim/model.hpp"

#include <algorithm>
#include <cmath>

namespace masim::model {

PrecodingMatrix generate_precoding(int frame_len, int block_len, Rng& rng) {
    if (block_len < 1 || frame_len < 1 || block_len >= frame_len)
        throw ConfigError("precoding requires 0 < d < t");
    PrecodingMatrix p(frame_len, block_len);
    for (int c = 0; c < block_len; ++c)
        for (int r = 0; r < frame_len; ++r) p(r, c) = rng.next_cgaussian();
    for (int c = 0; c < block_len; ++c) p.col(c) /= p.col(c).norm();
    return p;
}

PrecodingSet generate_precoding_set(int frame_len, int block_len, int num_users, Rng& rng) {
    PrecodingSet set;
    set.frame_len = frame_len;
    set.block_len = block_len;
    set.users.reserve(num_users);
    for (int n = 0; n < num_users; ++n)
        set.users.push_back(generate_precoding(frame_len, block_len, rng));
    return set;
}

ChannelSet draw_channels(int num_antennas, int num_users, Rng& rng) {
    ChannelSet ch;
    ch.h.resize(num_antennas, num_users);
    for (int n = 0; n < num_users; ++n)
        for (int m = 0; m < num_antennas; ++m) ch.h(m, n) = rng.next_cgaussian();
    ch.sq_norms = ch.h.colwise().squaredNorm();
    return ch;
}

std::vector<int> draw_active_set(int num_users, const Activity& activity, Rng& rng) {
    std::vector<int> active;
    if (activity.kind == Activity::Kind::FixedCount) {
        if (activity.count > num_users)
            throw ConfigError("cannot draw more active users than online users");
        // Partial Fisher-Yates over the user indices.
        std::vector<int> pool(num_users);
        for (int i = 0; i < num_users; ++i) pool[i] = i;
        for (int i = 0; i < activity.count; ++i) {
            int j = i + static_cast<int>(rng.next_below(num_users - i));
            std::swap(pool[i], pool[j]);
        }
        active.assign(pool.begin(), pool.begin() + activity.count);
        std::sort(active.begin(), active.end());
    } else {
        for (int n = 0; n < num_users; ++n)
            if (rng.next_double() < activity.prob) active.push_back(n);
    }
    return active;
}

Eigen::VectorXcd modulate_qpsk(const BitVec& bits) {
    if (bits.size() % 2 != 0) throw InputError("qpsk needs an even number of bits");
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::VectorXcd symbols(bits.size() / 2);
    for (size_t i = 0; i < bits.size(); i += 2) {
        double im = bits[i] ? -inv_sqrt2 : inv_sqrt2;
        double re = bits[i + 1] ? -inv_sqrt2 : inv_sqrt2;
        symbols[static_cast<Eigen::Index>(i / 2)] = cxd(re, im);
    }
    return symbols;
}

BitVec demodulate_qpsk(const Eigen::VectorXcd& symbols) {
    BitVec bits(2 * symbols.size());
    for (Eigen::Index i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols[i].imag() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols[i].real() < 0.0 ? 1 : 0;
    }
    return bits;
}

Eigen::MatrixXcd assemble_measurement(const SystemConfig& config,
                                      const PrecodingSet& precodings,
                                      const ChannelSet& channels,
                                      const Eigen::VectorXcd& symbols,
                                      Rng& rng, bool add_noise) {
    const int m = config.num_antennas;
    const int t = config.frame_len;
    const int d = config.block_len;
    const int n_users = config.num_online;
    if (precodings.num_users() != n_users || channels.num_users() != n_users ||
        channels.num_antennas() != m || precodings.frame_len != t ||
        precodings.block_len != d || symbols.size() != static_cast<Eigen::Index>(n_users) * d)
        throw InputError("assemble_measurement: dimension mismatch");

    const double amp = std::sqrt(config.rho0());
    Eigen::MatrixXcd y(m, t);
    if (add_noise) {
        for (int c = 0; c < t; ++c)
            for (int r = 0; r < m; ++r) y(r, c) = rng.next_cgaussian();
    } else {
        y.setZero();
    }
    Eigen::VectorXcd spread(t);
    for (int n = 0; n < n_users; ++n) {
        const auto block = symbols.segment(static_cast<Eigen::Index>(n) * d, d);
        if (block.isZero(0.0)) continue;
        spread.noalias() = precodings.users[n] * block;
        y.noalias() += amp * channels.h.col(n) * spread.transpose();
    }
    return y;
}

Eigen::MatrixXcd kron_block(const PrecodingMatrix& p, const Eigen::VectorXcd& h) {
    const Eigen::Index t = p.rows(), d = p.cols(), m = h.size();
    Eigen::MatrixXcd b(m * t, d);
    for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < t; ++r)
            b.block(r * m, c, m, 1) = p(r, c) * h;
    return b;
}

}  // namespace masim::model
