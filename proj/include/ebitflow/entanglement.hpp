#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebitflow/rng.hpp"
#include "ebitflow/states.hpp"

namespace ebitflow {

inline constexpr double kEntropyFloor = 1e-12;
inline constexpr double kSideAgreementTol = 1e-9;

// Entropy in bits (base-2 logarithm).
struct EntropyValue {
  double bits = 0.0;
};

namespace detail {

inline double xlog2x(double x) {
  return x > kEntropyFloor ? x * std::log2(x) : 0.0;
}

// Shannon entropy of an eigenvalue list; values at or below the floor
// contribute zero, tiny negatives are treated as zero.
inline double entropy_of_eigenvalues(const RealVector& lam) {
  double s = 0.0;
  for (Index i = 0; i < lam.size(); ++i) s -= xlog2x(lam(i));
  return s < 0.0 ? 0.0 : s;
}

inline double binary_entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// Precomputed index maps for one cut of one layout, shared by the hot loops.
struct CutShape {
  Index dl = 0;
  Index dr = 0;
  std::vector<Index> loff;
  std::vector<Index> roff;
};

inline CutShape make_cut_shape(const SubsystemLayout& layout,
                               const Bipartition& cut) {
  cut.validate(layout);
  CutShape s;
  s.loff = subset_offsets(layout, layout.canonical_subset(cut.left()));
  s.roff = subset_offsets(layout, layout.canonical_subset(cut.right()));
  s.dl = static_cast<Index>(s.loff.size());
  s.dr = static_cast<Index>(s.roff.size());
  return s;
}

inline void eigenvalues_2x2(const Matrix& g, double out[2]) {
  const double a = g(0, 0).real();
  const double b = g(1, 1).real();
  const double mean = 0.5 * (a + b);
  const double d = std::hypot(0.5 * (a - b), std::abs(g(0, 1)));
  out[0] = std::max(0.0, mean - d);
  out[1] = std::max(0.0, mean + d);
}

// Trigonometric closed form for a Hermitian 3x3, ascending output.
inline void eigenvalues_3x3(const Matrix& a, double out[3]) {
  const double q = (a(0, 0).real() + a(1, 1).real() + a(2, 2).real()) / 3.0;
  const double p1 = std::norm(a(0, 1)) + std::norm(a(0, 2)) + std::norm(a(1, 2));
  const double d0 = a(0, 0).real() - q;
  const double d1 = a(1, 1).real() - q;
  const double d2 = a(2, 2).real() - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
  if (p2 <= 0.0) {
    out[0] = out[1] = out[2] = q;
    return;
  }
  const double p = std::sqrt(p2 / 6.0);
  const Complex b00 = d0 / p, b11 = d1 / p, b22 = d2 / p;
  const Complex b01 = a(0, 1) / p, b02 = a(0, 2) / p, b12 = a(1, 2) / p;
  const double half_det =
      0.5 * (b00 * (b11 * b22 - b12 * std::conj(b12)) -
             b01 * (std::conj(b01) * b22 - b12 * std::conj(b02)) +
             b02 * (std::conj(b01) * std::conj(b12) - b11 * std::conj(b02)))
                .real();
  const double r = std::clamp(half_det, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  constexpr double kTwoPiThirds = 2.0943951023931953;
  out[2] = q + 2.0 * p * std::cos(phi);
  out[0] = q + 2.0 * p * std::cos(phi + kTwoPiThirds);
  out[1] = 3.0 * q - out[0] - out[2];
}

// Gram matrix of the smaller cut side of a (possibly subnormalized) vector.
inline Matrix side_gram(const Vector& raw, const CutShape& s, bool left_side) {
  const Index ds = left_side ? s.dl : s.dr;
  const Index dt = left_side ? s.dr : s.dl;
  Matrix g = Matrix::Zero(ds, ds);
  for (Index i = 0; i < ds; ++i) {
    for (Index k = i; k < ds; ++k) {
      Complex acc = 0.0;
      for (Index j = 0; j < dt; ++j) {
        const Index fi = left_side ? s.loff[i] + s.roff[j] : s.loff[j] + s.roff[i];
        const Index fk = left_side ? s.loff[k] + s.roff[j] : s.loff[j] + s.roff[k];
        acc += raw(fi) * std::conj(raw(fk));
      }
      g(i, k) = acc;
      if (k != i) g(k, i) = std::conj(acc);
    }
  }
  return g;
}

inline double gram_entropy(const Matrix& g) {
  if (g.rows() == 2) {
    double lam[2];
    eigenvalues_2x2(g, lam);
    return -xlog2x(lam[0]) - xlog2x(lam[1]);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return entropy_of_eigenvalues(es.eigenvalues().cwiseMax(0.0));
}

// Weighted entanglement p * E(psi / sqrt(p)) of a subnormalized member with
// p = |raw|^2, evaluated without normalizing: if the raw Gram eigenvalues are
// mu_i with sum p, the cost equals -sum mu_i log2 mu_i + p log2 p.
inline double member_cost(const Vector& raw, const CutShape& s) {
  const double p = raw.squaredNorm();
  if (p < 1e-15) return 0.0;
  const bool left_small = s.dl <= s.dr;
  Matrix g = side_gram(raw, s, left_small);
  double ent = 0.0;
  switch (g.rows()) {
    case 2: {
      double lam[2];
      eigenvalues_2x2(g, lam);
      ent = -xlog2x(lam[0]) - xlog2x(lam[1]);
      break;
    }
    case 3: {
      double lam[3];
      eigenvalues_3x3(g, lam);
      for (double x : lam) ent -= xlog2x(x);
      break;
    }
    case 4: {
      // fixed-size solver keeps this allocation-free in the hot loop
      Eigen::Matrix4cd g4 = g;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(g4, Eigen::EigenvaluesOnly);
      for (Index i = 0; i < 4; ++i) ent -= xlog2x(std::max(0.0, es.eigenvalues()(i)));
      break;
    }
    default: {
      Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
      for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        ent -= xlog2x(std::max(0.0, es.eigenvalues()(i)));
      }
      break;
    }
  }
  const double cost = ent + p * std::log2(p);
  return cost > 0.0 ? cost : 0.0;
}

}  // namespace detail

inline EntropyValue von_neumann_entropy(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat(), Eigen::EigenvaluesOnly);
  return EntropyValue{detail::entropy_of_eigenvalues(es.eigenvalues().cwiseMax(0.0))};
}

// Entanglement of a pure state across a cut, the entropy of either marginal.
// Both marginals are evaluated and must agree within 1e-9.
inline EntropyValue pure_entanglement(const StateVector& psi,
                                      const Bipartition& cut) {
  detail::CutShape s = detail::make_cut_shape(psi.layout(), cut);
  const double sl = detail::gram_entropy(detail::side_gram(psi.amps(), s, true));
  const double sr = detail::gram_entropy(detail::side_gram(psi.amps(), s, false));
  if (std::abs(sl - sr) > kSideAgreementTol) {
    throw Error("marginal entropies of a pure state disagree");
  }
  return EntropyValue{0.5 * (sl + sr)};
}

enum class EofMethod { closed_form, variational };

// Result of an entanglement-of-formation computation. `converged` is only
// meaningful for the variational method; non-convergence is reported here,
// never thrown. The decomposition realizes the reported value.
struct EofResult {
  double value = 0.0;
  EofMethod method = EofMethod::closed_form;
  bool converged = true;
  int restarts_used = 0;
  std::optional<PureEnsemble> decomposition;
};

namespace detail {

inline double concurrence_two_qubit(const Matrix& rho) {
  Matrix yy = Matrix::Zero(4, 4);
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  // With rho = L L^dag, the spin-flip spectrum {sqrt(eig(rho rho~))} equals
  // the singular values of the complex symmetric matrix L^T (yy) L. Taking
  // singular values directly avoids squaring, so near-pure states keep full
  // absolute precision instead of a sqrt(eps) noise floor.
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  RealVector lam = es.eigenvalues().cwiseMax(0.0);
  Matrix l = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  Matrix n = l.transpose() * yy * l;
  Eigen::JacobiSVD<Matrix> svd(n);
  const RealVector& mu = svd.singularValues();  // descending
  return std::max(0.0, mu(0) - mu(1) - mu(2) - mu(3));
}

}  // namespace detail

// Closed-form entanglement of formation of a two-qubit state via the
// concurrence. The cut is the first qubit against the second.
inline EofResult eof_two_qubit(const DensityMatrix& rho) {
  const auto& dims = rho.layout().dims();
  if (rho.layout().size() != 2 || dims[0] != 2 || dims[1] != 2) {
    throw WrongShape("closed form needs exactly two qubits");
  }
  const double c = detail::concurrence_two_qubit(rho.mat());
  const double x = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c)));
  EofResult out;
  out.value = detail::binary_entropy(x);
  out.method = EofMethod::closed_form;
  out.converged = true;
  out.restarts_used = 0;
  return out;
}

// Search budget for eof_variational. max_ensemble 0 selects rank^2 members.
struct OptConfig {
  int max_ensemble = 0;
  int restarts = 20;
  double tol = 1e-6;
  int max_iters = 5000;
  std::uint64_t seed = 0;
};

namespace detail {

inline constexpr std::uint64_t kEofStreamTag = 0x0eb17f10e0f5ee3dULL;

// Minimizes the average entanglement of pure-state decompositions of a fixed
// density matrix. A decomposition with members psi_i is parameterized by an
// isometry W through psi_i = sum_j W_ij b_j, where the b_j are the scaled
// eigenvectors of rho. The search works directly on the member columns and
// applies two-member rotations
//   (psi_i, psi_j) -> (cos t psi_i + e^{i phi} sin t psi_j,
//                      -e^{-i phi} sin t psi_i + cos t psi_j)
// which preserve the mixture exactly. Each candidate pair is optimized over
// (t, phi) by a coarse grid followed by coordinate descent with shrinking
// steps; sweeps over shuffled pairs repeat until a full sweep gains less than
// tol or the rotation budget is spent.
class PairRotationSearch {
 public:
  PairRotationSearch(Matrix scaled_eigvecs, CutShape shape, OptConfig cfg)
      : b_(std::move(scaled_eigvecs)), shape_(std::move(shape)), cfg_(cfg) {
    rank_ = b_.cols();
    const Index requested =
        cfg_.max_ensemble > 0 ? static_cast<Index>(cfg_.max_ensemble) : rank_ * rank_;
    members_ = std::clamp(requested, rank_, rank_ * rank_);
  }

  // Returns best member columns; fills the reporting fields.
  Matrix run(double& best_value, bool& converged, int& restarts_used) {
    Matrix best_p = b_;
    best_value = std::numeric_limits<double>::infinity();
    converged = false;
    restarts_used = 0;
    int stalled = 0;
    for (int r = 0; r < cfg_.restarts; ++r) {
      ++restarts_used;
      auto rng = make_rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(r),
                                      kEofStreamTag));
      Matrix p = start_point(r, rng);
      bool hit_cap = false;
      const double val = local_search(p, rng, hit_cap);
      if (val < best_value - 1e-15) {
        best_value = val;
        best_p = p;
        converged = !hit_cap;
        stalled = 0;
      } else {
        ++stalled;
      }
      if (best_value < 1e-12) break;
      if (stalled >= kStallLimit) break;
    }
    return best_p;
  }

 private:
  static constexpr int kStallLimit = 5;

  Matrix start_point(int restart, std::mt19937_64& rng) {
    if (restart == 0) return b_;  // the eigendecomposition itself
    if (restart == 1 && members_ > rank_) {
      // eigenvectors split into parallel copies so that every member slot is
      // populated and later rotations can mix across slots
      Matrix p = Matrix::Zero(b_.rows(), members_);
      for (Index j = 0; j < rank_; ++j) {
        Index copies = 0;
        for (Index i = j; i < members_; i += rank_) ++copies;
        const double w = 1.0 / std::sqrt(static_cast<double>(copies));
        for (Index i = j; i < members_; i += rank_) p.col(i) = w * b_.col(j);
      }
      return p;
    }
    Matrix w = haar_isometry(members_, rank_, rng);
    return b_ * w.transpose();
  }

  double local_search(Matrix& p, std::mt19937_64& rng, bool& hit_cap) {
    const Index m = p.cols();
    std::vector<double> cost(static_cast<std::size_t>(m));
    double total = 0.0;
    for (Index i = 0; i < m; ++i) {
      cost[static_cast<std::size_t>(i)] = member_cost(p.col(i), shape_);
      total += cost[static_cast<std::size_t>(i)];
    }
    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }
    // a pair whose two columns are unchanged since its last attempt cannot
    // improve; stamps of the member versions at the last attempt let sweeps
    // skip it. The full (t, phi) grid runs only on a pair's first attempt,
    // revisits refine by descent alone.
    std::vector<std::uint32_t> version(static_cast<std::size_t>(m), 1);
    std::vector<std::uint64_t> seen(static_cast<std::size_t>(m * m),
                                    ~std::uint64_t{0});
    std::vector<bool> gridded(static_cast<std::size_t>(m * m), false);
    const auto stamp_of = [&](Index i, Index j) {
      return (static_cast<std::uint64_t>(version[static_cast<std::size_t>(i)]) << 32) |
             version[static_cast<std::size_t>(j)];
    };
    int iters = 0;
    hit_cap = false;
    while (true) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      double sweep_gain = 0.0;
      for (const auto& [i, j] : pairs) {
        const std::size_t key = static_cast<std::size_t>(i * m + j);
        if (seen[key] == stamp_of(i, j)) continue;
        if (iters >= cfg_.max_iters) {
          hit_cap = true;
          break;
        }
        ++iters;
        const double gain = optimize_pair(p, i, j, cost, !gridded[key]);
        gridded[key] = true;
        if (gain > 0.0) {
          ++version[static_cast<std::size_t>(i)];
          ++version[static_cast<std::size_t>(j)];
        }
        seen[key] = stamp_of(i, j);
        sweep_gain += gain;
      }
      total = 0.0;
      for (double c : cost) total += c;
      if (hit_cap || sweep_gain < cfg_.tol || total < 1e-12) break;
    }
    return total;
  }

  // One (t, phi) subproblem. Updates columns and cached costs on improvement
  // and returns the gain.
  double optimize_pair(Matrix& p, Index i, Index j, std::vector<double>& cost,
                       bool do_grid) {
    const double base = cost[static_cast<std::size_t>(i)] +
                        cost[static_cast<std::size_t>(j)];
    if (base < 1e-14) return 0.0;
    vi_ = p.col(i);
    vj_ = p.col(j);
    double ca = 0.0;
    double cb = 0.0;
    const auto eval = [&](double t, double phi) {
      const double c = std::cos(t);
      const double s = std::sin(t);
      const Complex e(std::cos(phi), std::sin(phi));
      va_ = c * vi_ + (e * s) * vj_;
      vb_ = (-std::conj(e) * s) * vi_ + c * vj_;
      ca = member_cost(va_, shape_);
      cb = member_cost(vb_, shape_);
      return ca + cb;
    };
    double best = base;
    double best_ca = cost[static_cast<std::size_t>(i)];
    double best_cb = cost[static_cast<std::size_t>(j)];
    double bt = 0.0;
    double bp = 0.0;
    static constexpr double kPi = 3.14159265358979323846;
    if (do_grid) {
      for (int ti = 1; ti <= 5; ++ti) {
        const double t = -kPi / 2.0 + ti * (kPi / 6.0);
        for (int pi = 0; pi < 6; ++pi) {
          const double phi = pi * (2.0 * kPi / 6.0);
          const double v = eval(t, phi);
          if (v < best) {
            best = v;
            best_ca = ca;
            best_cb = cb;
            bt = t;
            bp = phi;
          }
        }
      }
    }
    double st = 0.26;
    double sp = 0.52;
    for (int k = 0; k < 40; ++k) {
      bool moved = false;
      const double trial_t[2] = {bt + st, bt - st};
      for (double t : trial_t) {
        const double v = eval(t, bp);
        if (v < best - 1e-13) {
          best = v;
          best_ca = ca;
          best_cb = cb;
          bt = t;
          moved = true;
          break;
        }
      }
      if (!moved) {
        const double trial_p[2] = {bp + sp, bp - sp};
        for (double phi : trial_p) {
          const double v = eval(bt, phi);
          if (v < best - 1e-13) {
            best = v;
            best_ca = ca;
            best_cb = cb;
            bp = phi;
            moved = true;
            break;
          }
        }
      }
      if (!moved) {
        st *= 0.5;
        sp *= 0.5;
        if (st < 1e-3) break;
      }
    }
    if (best < base - 1e-13) {
      const double c = std::cos(bt);
      const double s = std::sin(bt);
      const Complex e(std::cos(bp), std::sin(bp));
      va_ = c * vi_ + (e * s) * vj_;
      vb_ = (-std::conj(e) * s) * vi_ + c * vj_;
      p.col(i) = va_;
      p.col(j) = vb_;
      cost[static_cast<std::size_t>(i)] = best_ca;
      cost[static_cast<std::size_t>(j)] = best_cb;
      const double gain = base - best_ca - best_cb;
      return gain > 0.0 ? gain : 0.0;
    }
    return 0.0;
  }

  Matrix b_;
  CutShape shape_;
  OptConfig cfg_;
  Index rank_ = 0;
  Index members_ = 0;
  Vector vi_, vj_, va_, vb_;
};

}  // namespace detail

// Upper-bounding variational entanglement of formation: the minimum average
// entanglement over pure-state decompositions found by restarted local search.
// Works for any cut and any local dimensions. The reported value can only
// exceed the true infimum; failure to converge sets the flag and still
// returns the best value found.
inline EofResult eof_variational(const DensityMatrix& rho, const Bipartition& cut,
                                 const OptConfig& cfg = OptConfig{}) {
  detail::CutShape shape = detail::make_cut_shape(rho.layout(), cut);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat());
  const RealVector& lam = es.eigenvalues();
  std::vector<Index> keep;
  for (Index i = lam.size(); i-- > 0;) {
    if (lam(i) > kEntropyFloor) keep.push_back(i);
  }
  const Index rank = static_cast<Index>(keep.size());
  if (rank == 0) throw NotPositive("density matrix has no mass above the floor");

  EofResult out;
  out.method = EofMethod::variational;

  if (rank == 1) {
    Vector v = es.eigenvectors().col(keep[0]);
    v /= v.norm();
    StateVector psi(rho.layout(), v);
    out.value = pure_entanglement(psi, cut).bits;
    out.converged = true;
    out.restarts_used = 0;
    out.decomposition = PureEnsemble({{1.0, psi}});
    return out;
  }

  Matrix b(rho.dim(), rank);
  for (Index j = 0; j < rank; ++j) {
    b.col(j) = std::sqrt(lam(keep[static_cast<std::size_t>(j)])) *
               es.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
  }
  detail::PairRotationSearch search(std::move(b), shape, cfg);
  double value = 0.0;
  Matrix p = search.run(value, out.converged, out.restarts_used);
  out.value = value < 0.0 ? 0.0 : value;

  std::vector<PureEnsemble::Member> members;
  double total = 0.0;
  for (Index i = 0; i < p.cols(); ++i) {
    const double pi = p.col(i).squaredNorm();
    if (pi > 1e-12) total += pi;
  }
  for (Index i = 0; i < p.cols(); ++i) {
    const double pi = p.col(i).squaredNorm();
    if (pi <= 1e-12) continue;
    Vector v = p.col(i) / std::sqrt(pi);
    members.push_back({pi / total, StateVector(rho.layout(), std::move(v))});
  }
  out.decomposition = PureEnsemble(std::move(members));
  return out;
}

inline EntropyValue ensemble_avg_entanglement(const PureEnsemble& ens,
                                              const Bipartition& cut) {
  double total = 0.0;
  for (const auto& m : ens.members()) {
    total += m.prob * pure_entanglement(m.state, cut).bits;
  }
  return EntropyValue{total};
}

// Entropies of a state and of the two marginals of a two-block split,
// together with the margins of
//   |S(AB) - S(C)| <= S(ABC) <= S(AB) + S(C).
// Nonnegative margins mean the inequality holds.
struct InequalityReport {
  EntropyValue s_full;
  EntropyValue s_ab;
  EntropyValue s_c;
  double lower_margin = 0.0;
  double upper_margin = 0.0;
};

inline InequalityReport check_entropy_inequality(
    const DensityMatrix& rho, const std::vector<std::string>& part_ab,
    const std::vector<std::string>& part_c) {
  Bipartition split(rho.layout().canonical_subset(part_ab),
                    rho.layout().canonical_subset(part_c));
  split.validate(rho.layout());
  InequalityReport r;
  r.s_full = von_neumann_entropy(rho);
  r.s_ab = von_neumann_entropy(partial_trace(rho, part_ab));
  r.s_c = von_neumann_entropy(partial_trace(rho, part_c));
  r.lower_margin = r.s_full.bits - std::abs(r.s_ab.bits - r.s_c.bits);
  r.upper_margin = r.s_ab.bits + r.s_c.bits - r.s_full.bits;
  return r;
}

}  // namespace ebitflow
