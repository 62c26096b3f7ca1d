#pragma once

#include <Eigen/Dense>
#include <vector>

#include "masim/types.hpp"

namespace masim::recovery {

// Incremental Cholesky factor of a block Gram matrix, d x d blocks. Supports
// appending one block (normalized BOMP) and removing blocks followed by a
// trailing refactor (ICBOMP cancellation). Storage is preallocated once and
// reused across trials.
class BlockCholesky {
public:
    void init(int block_dim, int max_blocks);
    void reset() { n_ = 0; regularized_ = false; }

    int blocks() const { return n_; }
    int dim() const { return n_ * d_; }
    bool regularized() const { return regularized_; }

    // col stacks the Gram blocks G(existing_i, new) for i = 0..blocks()-1;
    // diag is G(new, new). Regularizes and refactors on a positive
    // definiteness failure; throws NumericError if that also fails.
    void append(const Eigen::MatrixXcd& col, const Eigen::MatrixXcd& diag);

    // Remove the given block positions (ascending); refactors the tail.
    void remove_sorted(const std::vector<int>& positions);

    // Solve G x = rhs with the current factor.
    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;

private:
    bool refactor_row(int i);  // false on PD failure
    void refactor_from(int first_row);

    int d_ = 0;
    int cap_ = 0;
    int n_ = 0;
    bool regularized_ = false;
    Eigen::MatrixXcd gram_;    // full symmetric copy, for refactors
    Eigen::MatrixXcd factor_;  // lower block triangle
    std::vector<Eigen::MatrixXcd> inv_diag_;  // explicit L(i,i)^-1 per block
    Eigen::MatrixXcd panel_;          // scratch for the new-row solve
    Eigen::MatrixXcd block_scratch_;  // d x d scratch
};

}  // namespace masim::recovery
