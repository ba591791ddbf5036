#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebitflow/states.hpp"
#include "ebitflow/tensor.hpp"

namespace ebitflow {

inline constexpr double kUnitaryTol = 1e-10;

// Unitary acting on the listed target subsystems, in the listed tensor order.
// An empty target list means the whole register of whatever layout the
// operator is applied to.
class UnitaryOp {
 public:
  explicit UnitaryOp(Matrix mat, std::vector<std::string> targets = {})
      : mat_(std::move(mat)), targets_(std::move(targets)) {
    if (!detail::is_unitary(mat_, kUnitaryTol)) {
      throw NotUnitary("operator is not unitary");
    }
  }

  static UnitaryOp identity(Index dim, std::vector<std::string> targets = {}) {
    return UnitaryOp(Matrix::Identity(dim, dim), std::move(targets));
  }

  const Matrix& mat() const { return mat_; }
  const std::vector<std::string>& targets() const { return targets_; }
  Index dim() const { return mat_.rows(); }

  // Full-register matrix for a concrete layout.
  Matrix resolve(const SubsystemLayout& layout) const {
    if (targets_.empty()) {
      if (mat_.rows() != layout.total_dim()) {
        throw DimensionMismatch("whole-register unitary does not match layout");
      }
      return mat_;
    }
    return embed_operator(mat_, targets_, layout);
  }

 private:
  Matrix mat_;
  std::vector<std::string> targets_;
};

inline Matrix haar_matrix(Index dim, std::mt19937_64& rng) {
  if (dim < 1) throw BadParam("unitary dimension must be positive");
  return detail::haar_isometry(dim, dim, rng);
}

// Haar-distributed unitary, deterministic for a given generator state.
inline UnitaryOp haar_unitary(Index dim, std::mt19937_64& rng,
                              std::vector<std::string> targets = {}) {
  return UnitaryOp(haar_matrix(dim, rng), std::move(targets));
}

inline StateVector apply_unitary(const StateVector& psi, const UnitaryOp& u) {
  Matrix full = u.resolve(psi.layout());
  Vector out = full * psi.amps();
  out /= out.norm();
  return StateVector(psi.layout(), std::move(out));
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const UnitaryOp& u) {
  Matrix full = u.resolve(rho.layout());
  return DensityMatrix(rho.layout(), full * rho.mat() * full.adjoint());
}

// One branch of a stochastic local operation: with probability `prob`, apply
// `a_side` and `b_side` on their disjoint targets.
struct LoccTerm {
  double prob;
  UnitaryOp a_side;
  UnitaryOp b_side;
};

// Convex mixture of product unitaries. Probabilities are positive and sum to
// 1 within 1e-10; target disjointness is checked when the mixture is applied.
class LoccMixture {
 public:
  explicit LoccMixture(std::vector<LoccTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw ValidationError("mixture has no terms");
    double total = 0.0;
    for (const auto& t : terms_) {
      if (t.prob <= 0.0) throw ValidationError("mixture probabilities must be positive");
      total += t.prob;
    }
    if (std::abs(total - 1.0) > kNormTol) {
      throw ValidationError("mixture probabilities do not sum to 1");
    }
  }

  const std::vector<LoccTerm>& terms() const { return terms_; }
  Index size() const { return static_cast<Index>(terms_.size()); }

 private:
  std::vector<LoccTerm> terms_;
};

inline DensityMatrix apply_locc_mixture(const DensityMatrix& rho,
                                        const LoccMixture& mix) {
  const SubsystemLayout& layout = rho.layout();
  Matrix acc = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& t : mix.terms()) {
    if (t.a_side.targets().empty() || t.b_side.targets().empty()) {
      throw DimensionMismatch("mixture terms need explicit targets on both sides");
    }
    for (const auto& l : t.a_side.targets()) {
      for (const auto& r : t.b_side.targets()) {
        if (l == r) throw DimensionMismatch("mixture sides share target " + l);
      }
    }
    Matrix full = t.a_side.resolve(layout) * t.b_side.resolve(layout);
    acc += t.prob * (full * rho.mat() * full.adjoint());
  }
  return validate_density(layout, acc);
}

}  // namespace ebitflow
