#include "masim/block_cholesky.hpp"

namespace masim::recovery {

void BlockCholesky::init(int block_dim, int max_blocks) {
    d_ = block_dim;
    cap_ = max_blocks;
    n_ = 0;
    regularized_ = false;
    const int dim = d_ * cap_;
    gram_.resize(dim, dim);
    factor_.resize(dim, dim);
    panel_.resize(dim, d_);
    block_scratch_.resize(d_, d_);
    inv_diag_.assign(cap_, Eigen::MatrixXcd());
}

// Computes factor row i from the stored Gram, using the rows above it:
//   L(i, 0..i-1)^H = L_lead^{-1} G(0..i-1, i),  via blocked forward
//   substitution so the work runs at gemm speed, then a d x d Cholesky of the
//   Schur complement for the diagonal block. Diagonal inverses are cached so
//   the small solves are gemms too.
bool BlockCholesky::refactor_row(int i) {
    const int d = d_;
    auto panel = panel_.topRows(i * d);
    panel = gram_.block(0, i * d, i * d, d);
    for (int j = 0; j < i; ++j) {
        auto xj = panel.middleRows(j * d, d);
        if (j > 0)
            xj.noalias() -= factor_.block(j * d, 0, d, j * d) * panel.topRows(j * d);
        block_scratch_.noalias() = inv_diag_[j] * xj;
        xj = block_scratch_;
        factor_.block(i * d, j * d, d, d) = xj.adjoint();
    }
    Eigen::MatrixXcd schur = gram_.block(i * d, i * d, d, d);
    if (i > 0) schur.noalias() -= panel.adjoint() * panel;
    Eigen::LLT<Eigen::MatrixXcd> llt(schur);
    if (llt.info() != Eigen::Success) return false;
    factor_.block(i * d, i * d, d, d) = llt.matrixL();
    inv_diag_[i] = Eigen::MatrixXcd(llt.matrixL())
                       .triangularView<Eigen::Lower>()
                       .solve(Eigen::MatrixXcd::Identity(d, d));
    return true;
}

void BlockCholesky::refactor_from(int first_row) {
    bool tried_reg = false;
    for (int i = first_row; i < n_; ++i) {
        if (refactor_row(i)) continue;
        // One shot of diagonal regularization scaled to the Gram trace, then
        // a full refactor; random dictionaries are almost surely fine, so a
        // second failure is a real error.
        if (tried_reg)
            throw NumericError("gram matrix not positive definite after regularization");
        tried_reg = true;
        regularized_ = true;
        const int dim = n_ * d_;
        const double reg =
            1e-10 * gram_.topLeftCorner(dim, dim).real().trace() / dim;
        gram_.topLeftCorner(dim, dim).diagonal().array() += reg;
        i = -1;  // restart the refactor from row 0
    }
}

void BlockCholesky::append(const Eigen::MatrixXcd& col, const Eigen::MatrixXcd& diag) {
    if (n_ >= cap_) throw InputError("block cholesky capacity exceeded");
    if (col.rows() != n_ * d_ || col.cols() != d_ || diag.rows() != d_ || diag.cols() != d_)
        throw InputError("block cholesky: bad block shapes");
    const int q = n_;
    gram_.block(0, q * d_, q * d_, d_) = col;
    gram_.block(q * d_, 0, d_, q * d_) = col.adjoint();
    gram_.block(q * d_, q * d_, d_, d_) = diag;
    ++n_;
    refactor_from(q);
}

void BlockCholesky::remove_sorted(const std::vector<int>& positions) {
    if (positions.empty()) return;
    for (size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] < 0 || positions[i] >= n_ ||
            (i > 0 && positions[i] <= positions[i - 1]))
            throw InputError("block cholesky: bad removal positions");
    }
    const int dim_before = n_ * d_;
    // Compact the kept block rows/cols in place.
    size_t next_removed = 0;
    std::vector<int> kept_from;
    for (int read = positions.front(); read < n_; ++read) {
        if (next_removed < positions.size() && positions[next_removed] == read) {
            ++next_removed;
            continue;
        }
        kept_from.push_back(read);
    }
    // Columns first, then rows, so sources are never overwritten early.
    int col_write = positions.front();
    for (int src : kept_from) {
        gram_.block(0, col_write * d_, dim_before, d_) =
            gram_.block(0, src * d_, dim_before, d_);
        ++col_write;
    }
    const int new_n = n_ - static_cast<int>(positions.size());
    int row_write = positions.front();
    for (int src : kept_from) {
        gram_.block(row_write * d_, 0, d_, new_n * d_) =
            gram_.block(src * d_, 0, d_, new_n * d_);
        ++row_write;
    }
    n_ = new_n;
    refactor_from(positions.front());
}

Eigen::VectorXcd BlockCholesky::solve(const Eigen::VectorXcd& rhs) const {
    if (rhs.size() != dim()) throw InputError("block cholesky: rhs size mismatch");
    Eigen::VectorXcd x = rhs;
    Eigen::VectorXcd seg(d_);
    // forward: L w = rhs
    for (int i = 0; i < n_; ++i) {
        seg = x.segment(i * d_, d_);
        if (i > 0)
            seg.noalias() -= factor_.block(i * d_, 0, d_, i * d_) * x.head(i * d_);
        x.segment(i * d_, d_).noalias() = inv_diag_[i] * seg;
    }
    // backward: L^H s = w
    for (int i = n_ - 1; i >= 0; --i) {
        seg = x.segment(i * d_, d_);
        const int below = (n_ - 1 - i) * d_;
        if (below > 0)
            seg.noalias() -= factor_.block((i + 1) * d_, i * d_, below, d_).adjoint() *
                             x.tail(below);
        x.segment(i * d_, d_).noalias() = inv_diag_[i].adjoint() * seg;
    }
    return x;
}

}  // namespace masim::recovery
