#include "zenosos/sdp/problem.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace zenosos::sdp {

bool Objective::empty() const {
  for (const auto& e : entries) {
    if (e.value != 0.0) return false;
  }
  for (const auto& f : free) {
    if (f.value != 0.0) return false;
  }
  return true;
}

int SdpProblem::add_block(int size) {
  if (size < 1) throw std::invalid_argument("block size must be positive");
  block_sizes.push_back(size);
  return static_cast<int>(block_sizes.size()) - 1;
}

int SdpProblem::add_free(int count) {
  int first = free_count;
  free_count += count;
  return first;
}

std::size_t SdpProblem::total_dimension() const {
  std::size_t n = 0;
  for (int s : block_sizes) n += static_cast<std::size_t>(s);
  return n;
}

namespace {

void check_entries(const SdpProblem& p, const std::vector<MatrixEntry>& entries,
                   const std::vector<FreeEntry>& free, std::size_t which) {
  for (const auto& e : entries) {
    if (e.block < 0 || e.block >= static_cast<int>(p.block_sizes.size())) {
      throw std::invalid_argument("constraint " + std::to_string(which) + ": bad block");
    }
    const int n = p.block_sizes[e.block];
    if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) {
      throw std::invalid_argument("constraint " + std::to_string(which) +
                                  ": entry outside its block");
    }
    if (e.row > e.col) {
      throw std::invalid_argument("constraint " + std::to_string(which) +
                                  ": entry stored below the diagonal");
    }
  }
  for (const auto& f : free) {
    if (f.index < 0 || f.index >= p.free_count) {
      throw std::invalid_argument("constraint " + std::to_string(which) +
                                  ": bad free index");
    }
  }
}

}  // namespace

void SdpProblem::check() const {
  if (constraints.empty()) throw std::invalid_argument("SDP has no constraints");
  if (block_sizes.empty() && free_count == 0) {
    throw std::invalid_argument("SDP has no variables");
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    check_entries(*this, constraints[i].entries, constraints[i].free, i);
  }
  check_entries(*this, objective.entries, objective.free, SIZE_MAX);
}

void write_sparse(std::ostream& out, const SdpProblem& prob) {
  out << std::setprecision(17);
  out << "blocks " << prob.block_sizes.size() << " free " << prob.free_count
      << " constraints " << prob.constraints.size() << "\n";
  for (std::size_t b = 0; b < prob.block_sizes.size(); ++b) {
    out << (b ? " " : "") << prob.block_sizes[b];
  }
  out << "\n";
  auto dump = [&](long idx, const std::vector<MatrixEntry>& es,
                  const std::vector<FreeEntry>& fs) {
    for (const auto& e : es) {
      out << idx << " b " << e.block << " " << e.row << " " << e.col << " " << e.value << "\n";
    }
    for (const auto& f : fs) out << idx << " f " << f.index << " " << f.value << "\n";
  };
  dump(-1, prob.objective.entries, prob.objective.free);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& c = prob.constraints[i];
    dump(static_cast<long>(i), c.entries, c.free);
    out << i << " rhs " << c.rhs << "\n";
  }
}

SdpProblem read_sparse(std::istream& in) {
  SdpProblem p;
  std::string tag;
  std::size_t nblocks = 0;
  std::size_t ncons = 0;
  in >> tag >> nblocks >> tag >> p.free_count >> tag >> ncons;
  if (!in) throw std::runtime_error("sparse SDP: bad header");
  for (std::size_t b = 0; b < nblocks; ++b) {
    int s = 0;
    in >> s;
    p.block_sizes.push_back(s);
  }
  p.constraints.resize(ncons);
  long idx = 0;
  while (in >> idx >> tag) {
    if (idx < -1 || idx >= static_cast<long>(ncons)) {
      throw std::runtime_error("sparse SDP: bad constraint index");
    }
    if (tag == "b") {
      MatrixEntry e{};
      in >> e.block >> e.row >> e.col >> e.value;
      (idx < 0 ? p.objective.entries : p.constraints[idx].entries).push_back(e);
    } else if (tag == "f") {
      FreeEntry f{};
      in >> f.index >> f.value;
      (idx < 0 ? p.objective.free : p.constraints[idx].free).push_back(f);
    } else if (tag == "rhs" && idx >= 0) {
      in >> p.constraints[idx].rhs;
    } else {
      throw std::runtime_error("sparse SDP: unknown record '" + tag + "'");
    }
  }
  return p;
}

}  // namespace zenosos::sdp
