#pragma once

#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebitflow/layout.hpp"

namespace ebitflow {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

namespace detail {

// Flat-index contributions of a label subset. Entry [g] is the flat offset of
// the g-th joint digit value of the subset, digits running big endian in the
// order the subset is listed. For a partition {S, T} of the layout's labels,
// flat = offsets_S[i] + offsets_T[j] enumerates the whole space.
inline std::vector<Index> subset_offsets(const SubsystemLayout& layout,
                                         const std::vector<std::string>& subset) {
  std::vector<Index> strides;
  std::vector<Index> dims;
  Index total = 1;
  for (const auto& l : subset) {
    Index p = layout.position(l);
    strides.push_back(layout.stride(p));
    dims.push_back(layout.dims()[p]);
    total *= layout.dims()[p];
  }
  std::vector<Index> offsets(static_cast<std::size_t>(total), 0);
  for (Index g = 0; g < total; ++g) {
    Index rest = g;
    Index off = 0;
    for (std::size_t k = subset.size(); k-- > 0;) {
      off += (rest % dims[k]) * strides[k];
      rest /= dims[k];
    }
    offsets[static_cast<std::size_t>(g)] = off;
  }
  return offsets;
}

}  // namespace detail

// Partial trace over the complement of `keep`. The subset is canonicalized to
// layout order, which is also the row order of the result.
inline Matrix partial_trace(const Matrix& rho, const SubsystemLayout& layout,
                            const std::vector<std::string>& keep) {
  if (rho.rows() != layout.total_dim() || rho.cols() != layout.total_dim()) {
    throw DimensionMismatch("matrix does not match layout dimension");
  }
  auto kept = layout.canonical_subset(keep);
  if (kept.empty()) throw DimensionMismatch("partial trace must keep a subsystem");
  auto traced = layout.complement(kept);
  auto koff = detail::subset_offsets(layout, kept);
  auto toff = detail::subset_offsets(layout, traced);
  const Index dk = static_cast<Index>(koff.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (Index i = 0; i < dk; ++i) {
    for (Index j = 0; j < dk; ++j) {
      Complex s = 0.0;
      for (Index t = 0; t < static_cast<Index>(toff.size()); ++t) {
        s += rho(koff[i] + toff[t], koff[j] + toff[t]);
      }
      out(i, j) = s;
    }
  }
  return out;
}

// Amplitude reindexing for a new label order. Amplitudes move, nothing is
// recomputed, so the operation is exact.
inline Vector permute_amplitudes(const Vector& amps,
                                 const SubsystemLayout& layout,
                                 const std::vector<std::string>& new_order) {
  if (amps.size() != layout.total_dim()) {
    throw DimensionMismatch("amplitude count does not match layout");
  }
  if (new_order.size() != layout.labels().size()) {
    throw InvalidPermutation("permutation must list every label once");
  }
  SubsystemLayout target = layout.permuted(new_order);
  // digit strides of each old position inside the new flat index
  std::vector<Index> new_stride_of_old(layout.labels().size());
  for (std::size_t k = 0; k < layout.labels().size(); ++k) {
    new_stride_of_old[k] = target.stride(target.position(layout.labels()[k]));
  }
  Vector out(amps.size());
  for (Index flat = 0; flat < amps.size(); ++flat) {
    auto digits = layout.unpack(flat);
    Index nf = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) {
      nf += digits[k] * new_stride_of_old[k];
    }
    out(nf) = amps(flat);
  }
  return out;
}

// Operator acting on `targets` (tensor order as listed) padded with identity
// on every other subsystem.
inline Matrix embed_operator(const Matrix& op,
                             const std::vector<std::string>& targets,
                             const SubsystemLayout& layout) {
  if (targets.empty()) throw DimensionMismatch("no target subsystems");
  Index op_dim = 1;
  for (const auto& l : targets) op_dim *= layout.dim(l);
  if (op.rows() != op_dim || op.cols() != op_dim) {
    throw DimensionMismatch("operator does not match target dimensions");
  }
  {
    std::vector<bool> seen(layout.labels().size(), false);
    for (const auto& l : targets) {
      Index p = layout.position(l);
      if (seen[p]) throw UnknownLabel("target listed twice: " + l);
      seen[p] = true;
    }
  }
  auto rest = layout.complement(targets);
  auto toff = detail::subset_offsets(layout, targets);
  std::vector<Index> roff =
      rest.empty() ? std::vector<Index>{0} : detail::subset_offsets(layout, rest);
  const Index D = layout.total_dim();
  Matrix out = Matrix::Zero(D, D);
  for (Index ti = 0; ti < op_dim; ++ti) {
    for (Index tj = 0; tj < op_dim; ++tj) {
      const Complex v = op(ti, tj);
      if (v == Complex(0.0, 0.0)) continue;
      for (Index r : roff) {
        out(toff[ti] + r, toff[tj] + r) = v;
      }
    }
  }
  return out;
}

namespace detail {

inline bool is_hermitian(const Matrix& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  Matrix g = m.adjoint() * m;
  g -= Matrix::Identity(m.rows(), m.cols());
  return g.cwiseAbs().maxCoeff() <= tol;
}

// Entries drawn row major, real part before imaginary part, so a given seed
// always produces the same matrix.
inline Matrix complex_ginibre(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

// Columns of a Haar-distributed unitary: QR of a Ginibre matrix with the R
// diagonal phases absorbed into Q, which removes the QR gauge freedom.
inline Matrix haar_isometry(Index rows, Index cols, std::mt19937_64& rng) {
  Matrix g = complex_ginibre(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    const Complex r = qr.matrixQR()(j, j);
    const double a = std::abs(r);
    if (a > 0.0) q.col(j) *= r / a;
  }
  return q;
}

}  // namespace detail

}  // namespace ebitflow
