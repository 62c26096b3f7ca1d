#include "masim/dictionary.hpp"

namespace masim::recovery {

Eigen::MatrixXcd PrecoderGramCache::get(const model::PrecodingSet& precodings, int i, int j) {
    if (i > j) std::swap(i, j);
    const uint64_t key = static_cast<uint64_t>(i) * precodings.num_users() + j;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = index_.find(key);
        if (it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return lru_.front().gram;
        }
    }
    Eigen::MatrixXcd gram = precodings.users[i].adjoint() * precodings.users[j];
    const size_t entry_bytes = sizeof(cxd) * gram.size() + 2 * sizeof(void*) + 64;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (index_.find(key) == index_.end()) {
            lru_.push_front(Entry{key, gram});
            index_[key] = lru_.begin();
            bytes_ += entry_bytes;
            while (bytes_ > max_bytes_ && lru_.size() > 1) {
                index_.erase(lru_.back().key);
                bytes_ -= sizeof(cxd) * lru_.back().gram.size() + 2 * sizeof(void*) + 64;
                lru_.pop_back();
            }
        }
    }
    return gram;
}

size_t PrecoderGramCache::suggested_bytes(int num_users, int block_len) {
    const size_t pair_bytes = sizeof(cxd) * static_cast<size_t>(block_len) * block_len + 128;
    const size_t full = pair_bytes * (static_cast<size_t>(num_users) * (num_users + 1) / 2);
    constexpr size_t kFullCapLimit = size_t(1) << 30;  // 1 GiB
    constexpr size_t kFloor = size_t(128) << 20;       // 128 MiB
    return full <= kFullCapLimit ? std::max(full, kFloor) : kFloor;
}

Dictionary::Dictionary(const model::PrecodingSet& precodings,
                       const model::ChannelSet& channels, PrecoderGramCache* cache)
    : precodings_(&precodings), channels_(&channels), cache_(cache) {
    if (precodings.num_users() != channels.num_users())
        throw InputError("dictionary: precoding/channel user counts differ");
}

double Dictionary::correlate_block(const Eigen::MatrixXcd& residual, int user,
                                   bool normalized) const {
    const double hh = channels_->sq_norms[user];
    if (hh <= 0.0) throw NumericError("degenerate channel with zero norm");
    const Eigen::VectorXcd u = residual.adjoint() * channels_->h.col(user);
    const double c = (precodings_->users[user].transpose() * u).squaredNorm();
    return normalized ? c / hh : c;
}

Eigen::VectorXcd Dictionary::corr_vector(const Eigen::MatrixXcd& y, int user) const {
    const Eigen::VectorXcd u = y.adjoint() * channels_->h.col(user);
    return (precodings_->users[user].transpose() * u).conjugate();
}

Eigen::MatrixXcd Dictionary::gram_block(int i, int j) const {
    const cxd hdot = channels_->h.col(i).dot(channels_->h.col(j));
    if (!cache_) return (precodings_->users[i].adjoint() * precodings_->users[j]) * hdot;
    if (i <= j) return cache_->get(*precodings_, i, j) * hdot;
    return cache_->get(*precodings_, j, i).adjoint() * hdot;
}

}  // namespace masim::recovery
