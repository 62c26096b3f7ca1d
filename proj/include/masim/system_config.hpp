#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "masim/types.hpp"

namespace masim {

// User activity model for one frame.
struct Activity {
    enum class Kind { FixedCount, Bernoulli };
    Kind kind = Kind::FixedCount;
    int count = 1;       // FixedCount: exact number of active users
    double prob = 0.0;   // Bernoulli: per-user transmit probability

    static Activity fixed(int n_active) { return {Kind::FixedCount, n_active, 0.0}; }
    static Activity bernoulli(double p) { return {Kind::Bernoulli, 0, p}; }
};

// Full scenario description for one simulated system.
struct SystemConfig {
    int num_antennas = 8;    // M
    int num_online = 80;     // N
    Activity activity = Activity::fixed(8);
    int max_active = 8;      // N_amax, known at the receiver
    int block_len = 100;     // d, symbols per message
    int frame_len = 500;     // T, resource units per frame
    int iterations = 30;     // K, greedy selections
    double snr_db = 4.0;     // Es/N0 in dB
    uint64_t seed = 1;
    bool coded = false;      // BCH(255,223)+CRC-16 payload (requires d = 124)

    double rho0() const { return std::pow(10.0, snr_db / 10.0); }

    void validate() const;

    // Flat key=value text file; see README for the key list.
    static SystemConfig from_file(const std::string& path);
    static SystemConfig from_text(const std::string& text);
};

}  // namespace masim
