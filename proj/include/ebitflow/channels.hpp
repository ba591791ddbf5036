#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebitflow/rng.hpp"
#include "ebitflow/states.hpp"
#include "ebitflow/tensor.hpp"

namespace ebitflow {

// Completely positive trace-preserving map in Kraus form. The Kraus operators
// are square with a common dimension and satisfy sum K^dag K = I within 1e-10.
class QuantumChannel {
 public:
  explicit QuantumChannel(std::vector<Matrix> kraus) : kraus_(std::move(kraus)) {
    if (kraus_.empty()) throw BadKraus("channel needs at least one Kraus operator");
    const Index d = kraus_.front().rows();
    Matrix acc = Matrix::Zero(d, d);
    for (const auto& k : kraus_) {
      if (k.rows() != d || k.cols() != d) {
        throw BadKraus("Kraus operators must be square with a common dimension");
      }
      acc += k.adjoint() * k;
    }
    acc -= Matrix::Identity(d, d);
    if (acc.cwiseAbs().maxCoeff() > kNormTol) {
      throw BadKraus("Kraus operators do not sum to the identity");
    }
  }

  const std::vector<Matrix>& kraus() const { return kraus_; }
  Index dim() const { return kraus_.front().rows(); }

  // Environment dimension of the Stinespring dilation, one level per Kraus
  // operator.
  Index env_dim() const { return static_cast<Index>(kraus_.size()); }

 private:
  std::vector<Matrix> kraus_;
};

// Applies the channel to one subsystem, leaving the rest untouched.
inline DensityMatrix apply_channel(const DensityMatrix& rho,
                                   const QuantumChannel& ch,
                                   const std::string& target) {
  if (rho.layout().dim(target) != ch.dim()) {
    throw DimensionMismatch("channel dimension does not match target " + target);
  }
  Matrix acc = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& k : ch.kraus()) {
    Matrix full = embed_operator(k, {target}, rho.layout());
    acc += full * rho.mat() * full.adjoint();
  }
  return validate_density(rho.layout(), acc);
}

// Isometry V = sum_e K_e (x) |e> from the system into system (x) environment,
// with the environment appended as the least significant factor: row index
// i * env_dim + e. V^dag V = I, and tracing the environment out of V rho V^dag
// recovers the channel.
struct StinespringDilation {
  Matrix isometry;
  Index env_dim = 0;

  // Completion of the isometry columns to a unitary on system (x) environment.
  // Column j * env_dim of the result equals isometry column j, so the unitary
  // reproduces the channel on inputs with the environment in level 0. The
  // remaining columns come from a QR factorization of the isometry, which
  // yields an orthonormal basis of the orthogonal complement.
  Matrix unitary() const {
    const Index big = isometry.rows();
    const Index d = isometry.cols();
    Matrix u = Matrix::Zero(big, big);
    std::vector<bool> taken(static_cast<std::size_t>(big), false);
    for (Index j = 0; j < d; ++j) {
      u.col(j * env_dim) = isometry.col(j);
      taken[static_cast<std::size_t>(j * env_dim)] = true;
    }
    if (big > d) {
      Eigen::HouseholderQR<Matrix> qr(isometry);
      Matrix q = qr.householderQ() * Matrix::Identity(big, big);
      Index next = 0;
      for (Index extra = d; extra < big; ++extra) {
        while (taken[static_cast<std::size_t>(next)]) ++next;
        u.col(next) = q.col(extra);
        taken[static_cast<std::size_t>(next)] = true;
      }
    }
    return u;
  }
};

inline StinespringDilation stinespring_dilate(const QuantumChannel& ch) {
  const Index d = ch.dim();
  const Index k = ch.env_dim();
  Matrix v = Matrix::Zero(d * k, d);
  for (Index e = 0; e < k; ++e) {
    const Matrix& op = ch.kraus()[static_cast<std::size_t>(e)];
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) {
        v(i * k + e, j) = op(i, j);
      }
    }
  }
  return StinespringDilation{std::move(v), k};
}

enum class ChannelKind { identity, depolarizing, amplitude_damping, phase_damping };

// Standard single-qubit channels. The parameter must lie in [0, 1]:
// depolarizing mixes toward the maximally mixed state, amplitude damping
// decays the excited level, phase damping removes coherences.
inline QuantumChannel named_channel(ChannelKind kind, double param) {
  if (param < 0.0 || param > 1.0) {
    throw BadParam("channel parameter must lie in [0, 1]");
  }
  switch (kind) {
    case ChannelKind::identity:
      return QuantumChannel({Matrix::Identity(2, 2)});
    case ChannelKind::depolarizing: {
      const double p = param;
      Matrix x = Matrix::Zero(2, 2);
      x(0, 1) = 1.0;
      x(1, 0) = 1.0;
      Matrix y = Matrix::Zero(2, 2);
      y(0, 1) = Complex(0.0, -1.0);
      y(1, 0) = Complex(0.0, 1.0);
      Matrix z = Matrix::Identity(2, 2);
      z(1, 1) = -1.0;
      std::vector<Matrix> ks;
      ks.push_back(std::sqrt(1.0 - 0.75 * p) * Matrix::Identity(2, 2));
      if (p > 0.0) {
        const double w = std::sqrt(0.25 * p);
        ks.push_back(w * x);
        ks.push_back(w * y);
        ks.push_back(w * z);
      }
      return QuantumChannel(std::move(ks));
    }
    case ChannelKind::amplitude_damping: {
      const double g = param;
      Matrix k0 = Matrix::Identity(2, 2);
      k0(1, 1) = std::sqrt(1.0 - g);
      Matrix k1 = Matrix::Zero(2, 2);
      k1(0, 1) = std::sqrt(g);
      return QuantumChannel({std::move(k0), std::move(k1)});
    }
    case ChannelKind::phase_damping: {
      const double l = param;
      Matrix k0 = Matrix::Identity(2, 2);
      k0(1, 1) = std::sqrt(1.0 - l);
      Matrix k1 = Matrix::Zero(2, 2);
      k1(1, 1) = std::sqrt(l);
      return QuantumChannel({std::move(k0), std::move(k1)});
    }
  }
  throw BadParam("unknown channel kind");
}

// Channel drawn by slicing a Haar unitary on system (x) environment into
// Kraus operators K_e[i][j] = U[(i, e), (j, 0)].
inline QuantumChannel random_channel(Index dim, Index env_dim,
                                     std::mt19937_64& rng) {
  if (dim < 2 || env_dim < 1) throw BadParam("random channel needs dim >= 2, env >= 1");
  Matrix u = detail::haar_isometry(dim * env_dim, dim * env_dim, rng);
  std::vector<Matrix> ks;
  ks.reserve(static_cast<std::size_t>(env_dim));
  for (Index e = 0; e < env_dim; ++e) {
    Matrix k(dim, dim);
    for (Index i = 0; i < dim; ++i) {
      for (Index j = 0; j < dim; ++j) {
        k(i, j) = u(i * env_dim + e, j * env_dim);
      }
    }
    ks.push_back(std::move(k));
  }
  return QuantumChannel(std::move(ks));
}

// Parsed form of a channel CLI string. Accepted shapes:
//   identity
//   depolarizing:P | amplitude_damping:P | phase_damping:P    with P in [0,1]
//   random:env_dim=K[:seed=S]
// A random spec without a seed draws a fresh channel from the caller's
// generator each time it is built.
struct ChannelSpec {
  bool is_random = false;
  ChannelKind kind = ChannelKind::identity;
  double param = 0.0;
  Index env_dim = 2;
  std::optional<std::uint64_t> seed;

  static ChannelSpec parse(const std::string& text) {
    ChannelSpec spec;
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t next = text.find(':', pos);
      if (next == std::string::npos) {
        parts.push_back(text.substr(pos));
        break;
      }
      parts.push_back(text.substr(pos, next - pos));
      pos = next + 1;
    }
    if (parts.empty() || parts.front().empty()) {
      throw ParseError("empty channel spec");
    }
    const std::string& head = parts.front();
    if (head == "random") {
      spec.is_random = true;
      bool have_env = false;
      for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) {
          throw ParseError("random channel option needs key=value: " + parts[i]);
        }
        const std::string key = parts[i].substr(0, eq);
        const std::string val = parts[i].substr(eq + 1);
        try {
          if (key == "env_dim") {
            spec.env_dim = static_cast<Index>(std::stoll(val));
            have_env = true;
          } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(std::stoull(val));
          } else {
            throw ParseError("unknown random channel option: " + key);
          }
        } catch (const std::invalid_argument&) {
          throw ParseError("bad number in channel spec: " + val);
        } catch (const std::out_of_range&) {
          throw ParseError("number out of range in channel spec: " + val);
        }
      }
      if (!have_env) throw ParseError("random channel spec needs env_dim");
      if (spec.env_dim < 1) throw ParseError("env_dim must be positive");
      return spec;
    }
    if (head == "identity") {
      spec.kind = ChannelKind::identity;
    } else if (head == "depolarizing") {
      spec.kind = ChannelKind::depolarizing;
    } else if (head == "amplitude_damping") {
      spec.kind = ChannelKind::amplitude_damping;
    } else if (head == "phase_damping") {
      spec.kind = ChannelKind::phase_damping;
    } else {
      throw ParseError("unknown channel kind: " + head);
    }
    if (spec.kind != ChannelKind::identity) {
      if (parts.size() != 2 || parts[1].empty()) {
        throw ParseError("channel spec needs a parameter: " + text);
      }
      try {
        spec.param = std::stod(parts[1]);
      } catch (const std::exception&) {
        throw ParseError("bad channel parameter: " + parts[1]);
      }
      if (spec.param < 0.0 || spec.param > 1.0) {
        throw ParseError("channel parameter must lie in [0, 1]");
      }
    } else if (parts.size() > 1) {
      throw ParseError("identity channel takes no parameter");
    }
    return spec;
  }

  // Qubit channel described by this spec. `rng` feeds seedless random specs.
  QuantumChannel build(std::mt19937_64& rng) const {
    if (!is_random) return named_channel(kind, param);
    if (seed) {
      auto own = make_rng(*seed);
      return random_channel(2, env_dim, own);
    }
    return random_channel(2, env_dim, rng);
  }
};

}  // namespace ebitflow
