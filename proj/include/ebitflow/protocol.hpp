#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ebitflow/channels.hpp"
#include "ebitflow/entanglement.hpp"
#include "ebitflow/states.hpp"
#include "ebitflow/unitaries.hpp"

namespace ebitflow {

// The protocol register: four qubits. A and B stay with the sender, D is
// transmitted first, C second, so the monitored cuts are ABC against D and
// AB against CD.
inline SubsystemLayout protocol_layout() {
  return SubsystemLayout::qubits({"A", "B", "C", "D"});
}

inline Bipartition cut_abc_d() {
  return Bipartition({"A", "B", "C"}, {"D"});
}

inline Bipartition cut_ab_cd() {
  return Bipartition({"A", "B"}, {"C", "D"});
}

enum class Regime { theorem1, theorem2, theorem3, theorem4 };

enum class EntMethod { pure_marginal, ensemble_avg, eof_variational, eof_two_qubit };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::theorem1: return "theorem1";
    case Regime::theorem2: return "theorem2";
    case Regime::theorem3: return "theorem3";
    case Regime::theorem4: return "theorem4";
  }
  return "?";
}

inline const char* to_string(EntMethod m) {
  switch (m) {
    case EntMethod::pure_marginal: return "pure_marginal";
    case EntMethod::ensemble_avg: return "ensemble_avg";
    case EntMethod::eof_variational: return "eof_variational";
    case EntMethod::eof_two_qubit: return "eof_two_qubit";
  }
  return "?";
}

// One protocol step: what happened, the state afterwards, and the
// entanglement measured across the step's cut. Step 1 has no cut because
// nothing has been transmitted yet and its E value is 0 by definition.
struct TraceStep {
  int id = 0;
  std::string action;
  std::optional<Bipartition> cut;
  double e_bits = 0.0;
  EntMethod method = EntMethod::pure_marginal;
  bool eof_converged = true;
  std::optional<StateVector> pure_state;
  std::optional<DensityMatrix> mixed_state;
  // closed-form two-qubit diagnostics on pair marginals, keyed "AD" and "BC"
  std::vector<std::pair<std::string, double>> pair_eof;
};

// A named inequality margin. Satisfied means margin >= -tol. Hard bounds are
// built from exact quantities; soft bounds involve variational upper bounds
// and carry the looser tolerance they were checked with.
struct BoundCheck {
  std::string name;
  double margin = 0.0;
  double tol = 0.0;
  bool hard = true;
};

struct ProtocolTrace {
  Regime regime = Regime::theorem1;
  std::vector<TraceStep> steps;
  std::vector<BoundCheck> bounds;
  // entropy of C's marginal after the final local operations, the capacity
  // of the second transmission
  double s_c4 = 0.0;

  double e(int id) const {
    for (const auto& s : steps) {
      if (s.id == id) return s.e_bits;
    }
    throw Error("trace has no step " + std::to_string(id));
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    for (const auto& b : bounds) {
      if (b.margin < -b.tol) out.push_back(b.name);
    }
    return out;
  }

  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : bounds) m = std::min(m, b.margin);
    return m;
  }
};

namespace detail {

inline UnitaryOp with_default_targets(const UnitaryOp& u,
                                      std::vector<std::string> targets,
                                      const SubsystemLayout& layout) {
  Index d = 1;
  for (const auto& l : targets) d *= layout.dim(l);
  if (u.dim() != d) {
    throw DimensionMismatch("unitary dimension does not fit its protocol slot");
  }
  if (u.targets().empty()) return UnitaryOp(u.mat(), std::move(targets));
  auto canon = layout.canonical_subset(u.targets());
  auto want = layout.canonical_subset(targets);
  if (canon != want) {
    throw DimensionMismatch("unitary targets do not match its protocol slot");
  }
  return u;
}

inline double pair_closed_eof(const DensityMatrix& rho, const std::string& x,
                              const std::string& y) {
  return eof_two_qubit(partial_trace(rho, {x, y})).value;
}

inline void add_pair_diagnostics(TraceStep& step, const DensityMatrix& rho) {
  step.pair_eof.emplace_back("AD", pair_closed_eof(rho, "A", "D"));
  step.pair_eof.emplace_back("BC", pair_closed_eof(rho, "B", "C"));
}

inline double pair_value(const TraceStep& step, const std::string& key) {
  for (const auto& [k, v] : step.pair_eof) {
    if (k == key) return v;
  }
  throw Error("no pair diagnostic " + key);
}

}  // namespace detail

// Pure four-step run from |0000>: prepare with u_prep, transmit D, apply
// u_abc (x) u_d, transmit C. All E values are exact marginal entropies. The
// recorded bounds certify that each transmitted qubit gains at most one ebit
// and that the second gain is capped by the carrier entropy S(rho_C).
inline ProtocolTrace run_pure_protocol(const UnitaryOp& u_prep,
                                       const UnitaryOp& u_abc,
                                       const UnitaryOp& u_d,
                                       double tol = 1e-9) {
  SubsystemLayout layout = protocol_layout();
  UnitaryOp prep = detail::with_default_targets(u_prep, {"A", "B", "C", "D"}, layout);
  UnitaryOp local_abc = detail::with_default_targets(u_abc, {"A", "B", "C"}, layout);
  UnitaryOp local_d = detail::with_default_targets(u_d, {"D"}, layout);

  StateVector psi1 = apply_unitary(StateVector::basis(layout, 0), prep);
  const double e2 = pure_entanglement(psi1, cut_abc_d()).bits;

  StateVector psi3 = apply_unitary(apply_unitary(psi1, local_abc), local_d);
  const double e3 = pure_entanglement(psi3, cut_abc_d()).bits;
  const double e4 = pure_entanglement(psi3, cut_ab_cd()).bits;
  const double s_c = pure_entanglement(psi3, Bipartition({"C"}, {"A", "B", "D"})).bits;

  ProtocolTrace t;
  t.regime = Regime::theorem1;
  t.s_c4 = s_c;
  t.steps.push_back({1, "prepare", std::nullopt, 0.0, EntMethod::pure_marginal,
                     true, psi1, std::nullopt, {}});
  t.steps.push_back({2, "transmit D", cut_abc_d(), e2, EntMethod::pure_marginal,
                     true, psi1, std::nullopt, {}});
  t.steps.push_back({3, "local unitaries", cut_abc_d(), e3,
                     EntMethod::pure_marginal, true, psi3, std::nullopt, {}});
  t.steps.push_back({4, "transmit C", cut_ab_cd(), e4, EntMethod::pure_marginal,
                     true, psi3, std::nullopt, {}});

  t.bounds.push_back({"transmit_d_gain", 1.0 - e2, tol, true});
  t.bounds.push_back({"local_step_invariance", -std::abs(e3 - e2), tol, true});
  t.bounds.push_back({"transmit_c_gain", e3 + 1.0 - e4, tol, true});
  t.bounds.push_back({"carrier_entropy_gain", s_c - (e4 - e3), tol, true});
  t.bounds.push_back({"chain_from_e2", e2 + 1.0 - e4, tol, true});
  t.bounds.push_back({"two_transmissions_total", 2.0 - e4, tol, true});
  return t;
}

// Per-member data of an ensemble run.
struct EnsembleTrace {
  PureEnsemble after_prep;
  PureEnsemble after_local;
  std::vector<double> member_e2;
  std::vector<double> member_e3;
  std::vector<double> member_e4;
  double avg_e2 = 0.0;
  double avg_e3 = 0.0;
  double avg_e4 = 0.0;
};

struct MixedProtocolResult {
  ProtocolTrace trace;
  EnsembleTrace ensemble;
};

// Ensemble run: every member follows the pure protocol, averages follow by
// convexity, and the mixture's entanglement of formation is additionally
// estimated variationally at the two transmission steps.
inline MixedProtocolResult run_mixed_protocol(const PureEnsemble& ens0,
                                              const UnitaryOp& u_prep,
                                              const UnitaryOp& u_abc,
                                              const UnitaryOp& u_d,
                                              double tol = 1e-9,
                                              double eps_var = 1e-3,
                                              const OptConfig& opt = OptConfig{}) {
  SubsystemLayout layout = protocol_layout();
  if (ens0.layout() != layout) {
    throw DimensionMismatch("ensemble does not live on the protocol register");
  }
  UnitaryOp prep = detail::with_default_targets(u_prep, {"A", "B", "C", "D"}, layout);
  UnitaryOp local_abc = detail::with_default_targets(u_abc, {"A", "B", "C"}, layout);
  UnitaryOp local_d = detail::with_default_targets(u_d, {"D"}, layout);

  std::vector<PureEnsemble::Member> prepped;
  std::vector<PureEnsemble::Member> local;
  std::vector<double> e2s, e3s, e4s;
  double a2 = 0.0, a3 = 0.0, a4 = 0.0;
  double worst_member_chain = std::numeric_limits<double>::infinity();
  for (const auto& m : ens0.members()) {
    StateVector phi = apply_unitary(m.state, prep);
    StateVector chi = apply_unitary(apply_unitary(phi, local_abc), local_d);
    const double e2 = pure_entanglement(phi, cut_abc_d()).bits;
    const double e3 = pure_entanglement(chi, cut_abc_d()).bits;
    const double e4 = pure_entanglement(chi, cut_ab_cd()).bits;
    e2s.push_back(e2);
    e3s.push_back(e3);
    e4s.push_back(e4);
    a2 += m.prob * e2;
    a3 += m.prob * e3;
    a4 += m.prob * e4;
    worst_member_chain = std::min(worst_member_chain, e2 + 1.0 - e4);
    prepped.push_back({m.prob, std::move(phi)});
    local.push_back({m.prob, std::move(chi)});
  }
  EnsembleTrace ens{PureEnsemble(std::move(prepped)),
                    PureEnsemble(std::move(local)),
                    std::move(e2s),
                    std::move(e3s),
                    std::move(e4s),
                    a2,
                    a3,
                    a4};

  DensityMatrix rho2 = ens.after_prep.average_state();
  DensityMatrix rho4 = ens.after_local.average_state();
  EofResult e2_var = eof_variational(rho2, cut_abc_d(), opt);
  EofResult e4_var = eof_variational(rho4, cut_ab_cd(), opt);

  ProtocolTrace t;
  t.regime = Regime::theorem2;
  t.s_c4 = von_neumann_entropy(partial_trace(rho4, {"C"})).bits;
  t.steps.push_back({1, "prepare ensemble", std::nullopt, 0.0,
                     EntMethod::ensemble_avg, true, std::nullopt, std::nullopt, {}});
  t.steps.push_back({2, "transmit D", cut_abc_d(), e2_var.value,
                     EntMethod::eof_variational, e2_var.converged, std::nullopt,
                     rho2, {}});
  // local product unitaries leave the formation value unchanged, the step-2
  // value carries over
  t.steps.push_back({3, "local unitaries", cut_abc_d(), e2_var.value,
                     EntMethod::eof_variational, e2_var.converged, std::nullopt,
                     std::nullopt, {}});
  t.steps.push_back({4, "transmit C", cut_ab_cd(), e4_var.value,
                     EntMethod::eof_variational, e4_var.converged, std::nullopt,
                     rho4, {}});

  t.bounds.push_back({"member_chain_min", worst_member_chain, tol, true});
  t.bounds.push_back({"avg_local_invariance", -std::abs(ens.avg_e3 - ens.avg_e2),
                      tol, true});
  t.bounds.push_back({"avg_chain", ens.avg_e2 + 1.0 - ens.avg_e4, tol, true});
  t.bounds.push_back({"var_e4_vs_avg_chain", ens.avg_e2 + 1.0 - e4_var.value,
                      eps_var, false});
  return {std::move(t), std::move(ens)};
}

// Noisy run: the transmissions of D and C pass through qubit channels and the
// E values are variational formation estimates. Exact closed-form bounds are
// still available on the two-qubit pair marginals: the channel on D cannot
// raise the AD pair's entanglement and leaves the BC pair untouched, and
// symmetrically for the channel on C.
inline ProtocolTrace run_noisy_protocol(const DensityMatrix& rho0,
                                        const UnitaryOp& u_prep,
                                        const UnitaryOp& u_abc,
                                        const UnitaryOp& u_d,
                                        const QuantumChannel& ch_d,
                                        const QuantumChannel& ch_c,
                                        double tol = 1e-9,
                                        double eps_var = 1e-3,
                                        const OptConfig& opt = OptConfig{}) {
  SubsystemLayout layout = protocol_layout();
  if (rho0.layout() != layout) {
    throw DimensionMismatch("state does not live on the protocol register");
  }
  UnitaryOp prep = detail::with_default_targets(u_prep, {"A", "B", "C", "D"}, layout);
  UnitaryOp local_abc = detail::with_default_targets(u_abc, {"A", "B", "C"}, layout);
  UnitaryOp local_d = detail::with_default_targets(u_d, {"D"}, layout);

  DensityMatrix rho1 = apply_unitary(rho0, prep);
  DensityMatrix rho2 = apply_channel(rho1, ch_d, "D");
  DensityMatrix rho3 = apply_unitary(apply_unitary(rho2, local_abc), local_d);
  DensityMatrix rho4 = apply_channel(rho3, ch_c, "C");

  EofResult e2 = eof_variational(rho2, cut_abc_d(), opt);
  EofResult e4 = eof_variational(rho4, cut_ab_cd(), opt);

  ProtocolTrace t;
  t.regime = Regime::theorem3;
  t.s_c4 = von_neumann_entropy(partial_trace(rho4, {"C"})).bits;
  t.steps.push_back({1, "prepare", std::nullopt, 0.0, EntMethod::eof_variational,
                     true, std::nullopt, rho1, {}});
  t.steps.push_back({2, "transmit D through channel", cut_abc_d(), e2.value,
                     EntMethod::eof_variational, e2.converged, std::nullopt,
                     rho2, {}});
  t.steps.push_back({3, "local unitaries", cut_abc_d(), e2.value,
                     EntMethod::eof_variational, e2.converged, std::nullopt,
                     rho3, {}});
  t.steps.push_back({4, "transmit C through channel", cut_ab_cd(), e4.value,
                     EntMethod::eof_variational, e4.converged, std::nullopt,
                     rho4, {}});
  detail::add_pair_diagnostics(t.steps[0], rho1);
  detail::add_pair_diagnostics(t.steps[1], rho2);
  detail::add_pair_diagnostics(t.steps[2], rho3);
  detail::add_pair_diagnostics(t.steps[3], rho4);

  const double ad1 = detail::pair_value(t.steps[0], "AD");
  const double ad2 = detail::pair_value(t.steps[1], "AD");
  const double bc1 = detail::pair_value(t.steps[0], "BC");
  const double bc2 = detail::pair_value(t.steps[1], "BC");
  const double ad3 = detail::pair_value(t.steps[2], "AD");
  const double ad4 = detail::pair_value(t.steps[3], "AD");
  const double bc3 = detail::pair_value(t.steps[2], "BC");
  const double bc4 = detail::pair_value(t.steps[3], "BC");

  t.bounds.push_back({"var_transmit_d_gain", 1.0 - e2.value, eps_var, false});
  t.bounds.push_back({"var_chain", e2.value + 1.0 - e4.value, eps_var, false});
  t.bounds.push_back({"pair_ad_channel_monotone", ad1 - ad2, tol, true});
  t.bounds.push_back({"pair_bc_untouched_by_ch_d", -std::abs(bc2 - bc1), tol, true});
  t.bounds.push_back({"pair_bc_channel_monotone", bc3 - bc4, tol, true});
  t.bounds.push_back({"pair_ad_untouched_by_ch_c", -std::abs(ad4 - ad3), tol, true});
  return t;
}

// Stochastic-local-operation run: step 3 applies a probabilistic mixture of
// product unitaries instead of a single one. Mixing cannot raise the
// formation value, so E3 <= E2 joins the recorded bounds.
inline ProtocolTrace run_locc_protocol(const DensityMatrix& rho0,
                                       const UnitaryOp& u_prep,
                                       const LoccMixture& mix,
                                       const QuantumChannel& ch_d,
                                       const QuantumChannel& ch_c,
                                       double tol = 1e-9,
                                       double eps_var = 1e-3,
                                       const OptConfig& opt = OptConfig{}) {
  SubsystemLayout layout = protocol_layout();
  if (rho0.layout() != layout) {
    throw DimensionMismatch("state does not live on the protocol register");
  }
  UnitaryOp prep = detail::with_default_targets(u_prep, {"A", "B", "C", "D"}, layout);
  for (const auto& term : mix.terms()) {
    auto a = layout.canonical_subset(term.a_side.targets());
    for (const auto& l : a) {
      if (l == "D") throw DimensionMismatch("sender side of the mixture touches D");
    }
    auto b = layout.canonical_subset(term.b_side.targets());
    if (b != std::vector<std::string>{"D"}) {
      throw DimensionMismatch("receiver side of the mixture must act on D");
    }
  }

  DensityMatrix rho1 = apply_unitary(rho0, prep);
  DensityMatrix rho2 = apply_channel(rho1, ch_d, "D");
  DensityMatrix rho3 = apply_locc_mixture(rho2, mix);
  DensityMatrix rho4 = apply_channel(rho3, ch_c, "C");

  EofResult e2 = eof_variational(rho2, cut_abc_d(), opt);
  EofResult e3 = eof_variational(rho3, cut_abc_d(), opt);
  EofResult e4 = eof_variational(rho4, cut_ab_cd(), opt);

  ProtocolTrace t;
  t.regime = Regime::theorem4;
  t.s_c4 = von_neumann_entropy(partial_trace(rho4, {"C"})).bits;
  t.steps.push_back({1, "prepare", std::nullopt, 0.0, EntMethod::eof_variational,
                     true, std::nullopt, rho1, {}});
  t.steps.push_back({2, "transmit D through channel", cut_abc_d(), e2.value,
                     EntMethod::eof_variational, e2.converged, std::nullopt,
                     rho2, {}});
  t.steps.push_back({3, "mixed local operations", cut_abc_d(), e3.value,
                     EntMethod::eof_variational, e3.converged, std::nullopt,
                     rho3, {}});
  t.steps.push_back({4, "transmit C through channel", cut_ab_cd(), e4.value,
                     EntMethod::eof_variational, e4.converged, std::nullopt,
                     rho4, {}});
  detail::add_pair_diagnostics(t.steps[0], rho1);
  detail::add_pair_diagnostics(t.steps[1], rho2);
  detail::add_pair_diagnostics(t.steps[2], rho3);
  detail::add_pair_diagnostics(t.steps[3], rho4);

  const double ad1 = detail::pair_value(t.steps[0], "AD");
  const double ad2 = detail::pair_value(t.steps[1], "AD");
  const double bc1 = detail::pair_value(t.steps[0], "BC");
  const double bc2 = detail::pair_value(t.steps[1], "BC");
  const double ad3 = detail::pair_value(t.steps[2], "AD");
  const double ad4 = detail::pair_value(t.steps[3], "AD");
  const double bc3 = detail::pair_value(t.steps[2], "BC");
  const double bc4 = detail::pair_value(t.steps[3], "BC");

  t.bounds.push_back({"var_transmit_d_gain", 1.0 - e2.value, eps_var, false});
  t.bounds.push_back({"var_mixture_no_increase", e2.value - e3.value, eps_var, false});
  t.bounds.push_back({"var_chain", e2.value + 1.0 - e4.value, eps_var, false});
  t.bounds.push_back({"pair_ad_channel_monotone", ad1 - ad2, tol, true});
  t.bounds.push_back({"pair_bc_untouched_by_ch_d", -std::abs(bc2 - bc1), tol, true});
  t.bounds.push_back({"pair_bc_channel_monotone", bc3 - bc4, tol, true});
  t.bounds.push_back({"pair_ad_untouched_by_ch_c", -std::abs(ad4 - ad3), tol, true});
  return t;
}

// Fixed preparation that saturates both transmissions: Bell pairs on AD and
// on BC give E2 = 1 and E4 = 2 exactly. The probe rotates the preparation by
// a small angle on A and C and must push E4 strictly below 2.
struct WitnessReport {
  StateVector prepared;
  ProtocolTrace trace;
  double probe_angle = 0.0;
  double perturbed_e4 = 0.0;
};

namespace detail {

inline Matrix hadamard() {
  Matrix h(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return h;
}

inline Matrix cnot() {
  Matrix c = Matrix::Zero(4, 4);
  c(0, 0) = 1.0;
  c(1, 1) = 1.0;
  c(2, 3) = 1.0;
  c(3, 2) = 1.0;
  return c;
}

// Generic Hermitian two-qubit generator for the witness probe. Products of
// Pauli operators alone can leave the Bell-pair preparation maximally
// entangled, a mixed sum does not.
inline Matrix probe_generator() {
  Matrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  z << 1, 0, 0, -1;
  return kron(x, x) + 0.5 * kron(y, z) + 0.25 * kron(z, y);
}

inline Matrix witness_preparation(const SubsystemLayout& layout) {
  Matrix h = hadamard();
  Matrix cx = cnot();
  Matrix u = embed_operator(h, {"A"}, layout);
  u = embed_operator(cx, {"A", "D"}, layout) * u;
  u = embed_operator(h, {"B"}, layout) * u;
  u = embed_operator(cx, {"B", "C"}, layout) * u;
  return u;
}

}  // namespace detail

inline WitnessReport equality_witness(double probe_angle = 0.01) {
  SubsystemLayout layout = protocol_layout();
  Matrix prep_mat = detail::witness_preparation(layout);
  UnitaryOp prep(prep_mat);
  UnitaryOp id_abc = UnitaryOp::identity(8, {"A", "B", "C"});
  UnitaryOp id_d = UnitaryOp::identity(2, {"D"});

  ProtocolTrace trace = run_pure_protocol(prep, id_abc, id_d);
  const double e2 = trace.e(2);
  const double e4 = trace.e(4);
  trace.bounds.push_back({"witness_e2_saturates", -std::abs(e2 - 1.0), 1e-10, true});
  trace.bounds.push_back({"witness_e4_saturates", -std::abs(e4 - 2.0), 1e-10, true});

  // probe: rotate the preparation on (A, C) and re-run
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::probe_generator());
  Vector phases(es.eigenvalues().size());
  for (Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::polar(1.0, -probe_angle * es.eigenvalues()(i));
  }
  Matrix rot = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  Matrix rot_full = embed_operator(rot, {"A", "C"}, layout);
  UnitaryOp perturbed_prep(rot_full * prep_mat);
  ProtocolTrace probe = run_pure_protocol(perturbed_prep, id_abc, id_d);

  WitnessReport w{*trace.steps[0].pure_state, std::move(trace), probe_angle,
                  probe.e(4)};
  w.trace.bounds.push_back(
      {"probe_strictly_below_two", 2.0 - 1e-9 - w.perturbed_e4, 0.0, true});
  return w;
}

}  // namespace ebitflow
