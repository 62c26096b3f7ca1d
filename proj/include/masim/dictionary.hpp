#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "masim/model.hpp"
#include "masim/types.hpp"

namespace masim::recovery {

// LRU cache of precoder Gram products P_i^H P_j (i <= j). These depend only
// on the precoding set, so one cache is shared by every trial of a run.
class PrecoderGramCache {
public:
    explicit PrecoderGramCache(size_t max_bytes) : max_bytes_(max_bytes) {}

    Eigen::MatrixXcd get(const model::PrecodingSet& precodings, int i, int j);

    // Sized so that small user populations are cached in full while huge ones
    // stay within a fixed budget next to their precoding storage.
    static size_t suggested_bytes(int num_users, int block_len);

private:
    struct Entry {
        uint64_t key;
        Eigen::MatrixXcd gram;
    };
    size_t max_bytes_;
    size_t bytes_ = 0;
    std::list<Entry> lru_;
    std::unordered_map<uint64_t, std::list<Entry>::iterator> index_;
    std::mutex mutex_;
};

// View combining the per-run precoding set with one trial's channels, plus
// the structure-exploiting correlation and Gram kernels. Never materializes
// the MT x Nd dictionary.
class Dictionary {
public:
    Dictionary(const model::PrecodingSet& precodings, const model::ChannelSet& channels,
               PrecoderGramCache* cache = nullptr);

    int num_users() const { return precodings_->num_users(); }
    int num_antennas() const { return channels_->num_antennas(); }
    int frame_len() const { return precodings_->frame_len; }
    int block_len() const { return precodings_->block_len; }
    const model::PrecodingSet& precodings() const { return *precodings_; }
    const model::ChannelSet& channels() const { return *channels_; }

    // ||B_n^H r||^2 (optionally /||h_n||^2) with r given in M x T matrix form;
    // costs O(MT + Td) per block.
    double correlate_block(const Eigen::MatrixXcd& residual, int user,
                           bool normalized) const;

    // B_n^H vec(Y) as a length-d vector.
    Eigen::VectorXcd corr_vector(const Eigen::MatrixXcd& y, int user) const;

    // Gram block (P_i^H P_j)(h_i^H h_j).
    Eigen::MatrixXcd gram_block(int i, int j) const;

private:
    const model::PrecodingSet* precodings_;
    const model::ChannelSet* channels_;
    PrecoderGramCache* cache_;
};

}  // namespace masim::recovery
