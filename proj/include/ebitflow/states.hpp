#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebitflow/layout.hpp"
#include "ebitflow/tensor.hpp"

namespace ebitflow {

inline constexpr double kNormTol = 1e-10;
inline constexpr double kSchmidtFloor = 1e-12;

// Normalized pure state over a layout. Immutable after construction.
class StateVector {
 public:
  StateVector(SubsystemLayout layout, Vector amps)
      : layout_(std::move(layout)), amps_(std::move(amps)) {
    if (amps_.size() != layout_.total_dim()) {
      throw DimensionMismatch("amplitude count does not match layout");
    }
    if (std::abs(amps_.norm() - 1.0) > kNormTol) {
      throw ValidationError("state vector is not normalized");
    }
  }

  static StateVector basis(const SubsystemLayout& layout, Index flat) {
    if (flat < 0 || flat >= layout.total_dim()) {
      throw DimensionMismatch("basis index out of range");
    }
    Vector v = Vector::Zero(layout.total_dim());
    v(flat) = 1.0;
    return StateVector(layout, std::move(v));
  }

  const SubsystemLayout& layout() const { return layout_; }
  const Vector& amps() const { return amps_; }
  Index dim() const { return amps_.size(); }

  // Amplitudes arranged as a left_dim x right_dim matrix for a cut, both
  // sides in layout order.
  Matrix cut_matrix(const Bipartition& cut) const {
    cut.validate(layout_);
    auto loff = detail::subset_offsets(layout_, layout_.canonical_subset(cut.left()));
    auto roff = detail::subset_offsets(layout_, layout_.canonical_subset(cut.right()));
    Matrix a(static_cast<Index>(loff.size()), static_cast<Index>(roff.size()));
    for (std::size_t i = 0; i < loff.size(); ++i) {
      for (std::size_t j = 0; j < roff.size(); ++j) {
        a(static_cast<Index>(i), static_cast<Index>(j)) = amps_(loff[i] + roff[j]);
      }
    }
    return a;
  }

 private:
  SubsystemLayout layout_;
  Vector amps_;
};

// Mixed state over a layout. Hermitian within 1e-10, trace 1 within 1e-10,
// eigenvalues >= -1e-10. Values may carry roundoff of that size; use
// validate_density to repair noisy input.
class DensityMatrix {
 public:
  DensityMatrix(SubsystemLayout layout, Matrix mat)
      : layout_(std::move(layout)), mat_(std::move(mat)) {
    if (mat_.rows() != layout_.total_dim() || mat_.cols() != layout_.total_dim()) {
      throw DimensionMismatch("matrix does not match layout dimension");
    }
    if (!detail::is_hermitian(mat_, kNormTol)) {
      throw NotHermitian("density matrix is not Hermitian");
    }
    if (std::abs(mat_.trace().real() - 1.0) > kNormTol ||
        std::abs(mat_.trace().imag()) > kNormTol) {
      throw BadTrace("density matrix trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(mat_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kNormTol) {
      throw NotPositive("density matrix has a negative eigenvalue");
    }
  }

  const SubsystemLayout& layout() const { return layout_; }
  const Matrix& mat() const { return mat_; }
  Index dim() const { return mat_.rows(); }

 private:
  struct Trusted {};
  DensityMatrix(Trusted, SubsystemLayout layout, Matrix mat)
      : layout_(std::move(layout)), mat_(std::move(mat)) {}

  friend DensityMatrix validate_density(const SubsystemLayout&, const Matrix&);

  SubsystemLayout layout_;
  Matrix mat_;
};

inline DensityMatrix pure_to_density(const StateVector& psi) {
  return DensityMatrix(psi.layout(), psi.amps() * psi.amps().adjoint());
}

// Accepts a noisy candidate density matrix. Asymmetry up to 1e-10 is
// symmetrized away, eigenvalues in [-1e-10, 0) are clipped to 0 and the trace
// is renormalized to exactly 1. Clear violations throw NotHermitian,
// NotPositive or BadTrace.
inline DensityMatrix validate_density(const SubsystemLayout& layout,
                                      const Matrix& mat) {
  if (mat.rows() != layout.total_dim() || mat.cols() != layout.total_dim()) {
    throw DimensionMismatch("matrix does not match layout dimension");
  }
  if (!detail::is_hermitian(mat, kNormTol)) {
    throw NotHermitian("density matrix is not Hermitian");
  }
  Matrix sym = 0.5 * (mat + mat.adjoint());
  if (std::abs(sym.trace().real() - 1.0) > kNormTol) {
    throw BadTrace("density matrix trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  RealVector lam = es.eigenvalues();
  if (lam.minCoeff() < -kNormTol) {
    throw NotPositive("density matrix has a negative eigenvalue");
  }
  lam = lam.cwiseMax(0.0);
  Matrix clean = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  clean /= clean.trace().real();
  return DensityMatrix(DensityMatrix::Trusted{}, layout, std::move(clean));
}

inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   const std::vector<std::string>& keep) {
  Matrix m = partial_trace(rho.mat(), rho.layout(), keep);
  return DensityMatrix(rho.layout().sublayout(keep), std::move(m));
}

inline StateVector permute_subsystems(const StateVector& psi,
                                      const std::vector<std::string>& new_order) {
  return StateVector(psi.layout().permuted(new_order),
                     permute_amplitudes(psi.amps(), psi.layout(), new_order));
}

inline DensityMatrix permute_subsystems(const DensityMatrix& rho,
                                        const std::vector<std::string>& new_order) {
  // conjugate by the basis permutation, realized through index maps
  const SubsystemLayout& layout = rho.layout();
  SubsystemLayout target = layout.permuted(new_order);
  std::vector<Index> new_stride_of_old(layout.labels().size());
  for (std::size_t k = 0; k < layout.labels().size(); ++k) {
    new_stride_of_old[k] = target.stride(target.position(layout.labels()[k]));
  }
  const Index D = layout.total_dim();
  std::vector<Index> map(static_cast<std::size_t>(D));
  for (Index flat = 0; flat < D; ++flat) {
    auto digits = layout.unpack(flat);
    Index nf = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) {
      nf += digits[k] * new_stride_of_old[k];
    }
    map[static_cast<std::size_t>(flat)] = nf;
  }
  Matrix out(D, D);
  for (Index i = 0; i < D; ++i) {
    for (Index j = 0; j < D; ++j) {
      out(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]) =
          rho.mat()(i, j);
    }
  }
  return DensityMatrix(target, std::move(out));
}

// Schmidt data of a pure state across a cut. Coefficients are nonnegative and
// descending, squares sum to 1 within 1e-10, entries below 1e-12 are dropped.
// Column k of left_basis pairs with column k of right_basis.
struct SchmidtForm {
  RealVector coeffs;
  Matrix left_basis;
  Matrix right_basis;
  Bipartition cut;
};

inline SchmidtForm schmidt_decompose(const StateVector& psi,
                                     const Bipartition& cut) {
  cut.validate(psi.layout());
  Bipartition canon(psi.layout().canonical_subset(cut.left()),
                    psi.layout().canonical_subset(cut.right()));
  Matrix a = psi.cut_matrix(canon);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  Index k = 0;
  while (k < sv.size() && sv(k) >= kSchmidtFloor) ++k;
  if (k == 0) throw ValidationError("state has no Schmidt coefficients above floor");
  SchmidtForm out{sv.head(k), svd.matrixU().leftCols(k),
                  svd.matrixV().leftCols(k).conjugate(), canon};
  return out;
}

// Canonical purification. The ancilla dimension equals the rank; for rank 1
// the ancilla is trivial and the state is returned on the original layout.
inline StateVector purify(const DensityMatrix& rho,
                          const std::string& ancilla_label = "anc") {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat());
  const RealVector& lam = es.eigenvalues();  // ascending
  std::vector<Index> keep;
  for (Index i = lam.size(); i-- > 0;) {
    if (lam(i) > kSchmidtFloor) keep.push_back(i);
  }
  const Index r = static_cast<Index>(keep.size());
  if (r == 0) throw NotPositive("density matrix has no mass above the floor");
  if (r == 1) {
    Vector v = es.eigenvectors().col(keep[0]);
    v /= v.norm();
    return StateVector(rho.layout(), std::move(v));
  }
  std::string label = ancilla_label;
  for (int suffix = 1; rho.layout().has(label); ++suffix) {
    label = ancilla_label + std::to_string(suffix);
  }
  SubsystemLayout ext = rho.layout().extended(label, r);
  const Index D = rho.dim();
  Vector amps = Vector::Zero(D * r);
  for (Index j = 0; j < r; ++j) {
    const double w = std::sqrt(lam(keep[static_cast<std::size_t>(j)]));
    for (Index i = 0; i < D; ++i) {
      amps(i * r + j) = w * es.eigenvectors()(i, keep[static_cast<std::size_t>(j)]);
    }
  }
  amps /= amps.norm();
  return StateVector(ext, std::move(amps));
}

// Convex mixture of pure states on one layout. Probabilities are positive and
// sum to 1 within 1e-10.
class PureEnsemble {
 public:
  struct Member {
    double prob;
    StateVector state;
  };

  explicit PureEnsemble(std::vector<Member> members)
      : members_(std::move(members)) {
    if (members_.empty()) throw ValidationError("ensemble has no members");
    double total = 0.0;
    for (const auto& m : members_) {
      if (m.prob <= 0.0) throw ValidationError("ensemble probabilities must be positive");
      if (m.state.layout() != members_.front().state.layout()) {
        throw DimensionMismatch("ensemble members live on different layouts");
      }
      total += m.prob;
    }
    if (std::abs(total - 1.0) > kNormTol) {
      throw ValidationError("ensemble probabilities do not sum to 1");
    }
  }

  const std::vector<Member>& members() const { return members_; }
  const SubsystemLayout& layout() const { return members_.front().state.layout(); }
  Index size() const { return static_cast<Index>(members_.size()); }

  DensityMatrix average_state() const {
    Matrix acc = Matrix::Zero(layout().total_dim(), layout().total_dim());
    for (const auto& m : members_) {
      acc += m.prob * (m.state.amps() * m.state.amps().adjoint());
    }
    return validate_density(layout(), acc);
  }

 private:
  std::vector<Member> members_;
};

}  // namespace ebitflow
