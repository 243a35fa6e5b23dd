#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace zenosos::sdp {

/// One stored entry of a symmetric coefficient matrix. Only row <= col is
/// stored; an off-diagonal entry stands for both (row, col) and (col, row).
struct MatrixEntry {
  int block;
  int row;
  int col;
  double value;
};

struct FreeEntry {
  int index;
  double value;
};

/// <A, X> + sum(free[k].value * xf[free[k].index]) = rhs
struct LinearConstraint {
  std::vector<MatrixEntry> entries;
  std::vector<FreeEntry> free;
  double rhs = 0.0;
};

/// Minimize <C, X> + cf' xf. An objective with no nonzero entries marks a
/// pure feasibility problem.
struct Objective {
  std::vector<MatrixEntry> entries;
  std::vector<FreeEntry> free;
  bool empty() const;
};

/// Standard-form SDP with a block-diagonal PSD variable X and free scalars xf.
struct SdpProblem {
  std::vector<int> block_sizes;
  int free_count = 0;
  std::vector<LinearConstraint> constraints;
  Objective objective;

  int add_block(int size);
  int add_free(int count);
  std::size_t total_dimension() const;
  /// Throws std::invalid_argument when an entry is out of range or stored
  /// below the diagonal, or when the problem is empty.
  void check() const;
};

/// Sparse text dump: a header line "blocks <k> free <f> constraints <m>",
/// then the block sizes, then one line per nonzero
///   <constraint> b <block> <row> <col> <value>
///   <constraint> f <index> <value>
///   <constraint> rhs <value>
/// with constraint index -1 for the objective. Indices are 0-based.
void write_sparse(std::ostream& out, const SdpProblem& prob);
SdpProblem read_sparse(std::istream& in);

}  // namespace zenosos::sdp
