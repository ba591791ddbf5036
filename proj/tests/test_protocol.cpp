#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ebitflow/protocol.hpp"
#include "ebitflow/rng.hpp"

using namespace ebitflow;

namespace {

Vector random_state_vector(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = Complex(n(rng), n(rng));
  v.normalize();
  return v;
}

struct ProtocolOps {
  UnitaryOp prep;
  UnitaryOp abc;
  UnitaryOp d;
};

ProtocolOps identity_ops() {
  return {UnitaryOp::identity(16, {"A", "B", "C", "D"}),
          UnitaryOp::identity(8, {"A", "B", "C"}),
          UnitaryOp::identity(2, {"D"})};
}

ProtocolOps random_ops(std::mt19937_64& rng) {
  return {haar_unitary(16, rng, {"A", "B", "C", "D"}),
          haar_unitary(8, rng, {"A", "B", "C"}),
          haar_unitary(2, rng, {"D"})};
}

bool has_bound(const ProtocolTrace& t, const std::string& name) {
  for (const auto& b : t.bounds)
    if (b.name == name) return true;
  return false;
}

double bound_margin(const ProtocolTrace& t, const std::string& name) {
  for (const auto& b : t.bounds)
    if (b.name == name) return b.margin;
  throw std::runtime_error("missing bound " + name);
}

DensityMatrix vacuum_density() {
  return pure_to_density(StateVector::basis(protocol_layout(), 0));
}

OptConfig test_opt(std::uint64_t seed) {
  OptConfig opt;
  opt.max_ensemble = 16;
  opt.restarts = 2;
  opt.seed = seed;
  return opt;
}

}  // namespace

TEST_CASE("identity run carries no entanglement") {
  ProtocolOps ops = identity_ops();
  ProtocolTrace t = run_pure_protocol(ops.prep, ops.abc, ops.d);
  REQUIRE(t.regime == Regime::theorem1);
  REQUIRE(t.steps.size() == 4);
  for (int k = 1; k <= 4; ++k) REQUIRE(t.e(k) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(t.s_c4 == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(t.violations().empty());
  REQUIRE(bound_margin(t, "transmit_d_gain") == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(bound_margin(t, "two_transmissions_total") ==
          Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("pure runs satisfy every recorded bound") {
  auto rng = make_rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    ProtocolOps ops = random_ops(rng);
    ProtocolTrace t = run_pure_protocol(ops.prep, ops.abc, ops.d);
    REQUIRE(t.violations().empty());
    REQUIRE(t.min_margin() >= -1e-9);
    REQUIRE(t.e(2) <= 1.0 + 1e-9);
    REQUIRE(t.e(4) <= 2.0 + 1e-9);
    // the local step acts on one side of the cut only
    REQUIRE(std::abs(t.e(3) - t.e(2)) < 1e-9);
    for (const auto& name :
         {"transmit_d_gain", "local_step_invariance", "transmit_c_gain",
          "carrier_entropy_gain", "chain_from_e2", "two_transmissions_total"}) {
      REQUIRE(has_bound(t, name));
    }
  }
}

TEST_CASE("protocol slots reject mismatched unitaries") {
  ProtocolOps ops = identity_ops();
  UnitaryOp wrong_dim = UnitaryOp::identity(4);
  REQUIRE_THROWS_AS(run_pure_protocol(ops.prep, wrong_dim, ops.d),
                    DimensionMismatch);
  UnitaryOp wrong_slot = UnitaryOp::identity(8, {"A", "B", "D"});
  REQUIRE_THROWS_AS(run_pure_protocol(ops.prep, wrong_slot, ops.d),
                    DimensionMismatch);
}

TEST_CASE("witness saturates both transmissions") {
  WitnessReport w = equality_witness();
  REQUIRE(std::abs(w.trace.e(2) - 1.0) < 1e-10);
  REQUIRE(std::abs(w.trace.e(4) - 2.0) < 1e-10);
  REQUIRE(w.trace.violations().empty());
  REQUIRE(has_bound(w.trace, "witness_e2_saturates"));
  REQUIRE(has_bound(w.trace, "witness_e4_saturates"));
  REQUIRE(has_bound(w.trace, "probe_strictly_below_two"));
  REQUIRE(w.probe_angle == 0.01);
  REQUIRE(w.perturbed_e4 < 2.0 - 1e-9);

  // the circuit lands on two bell pairs: equal weight on 0000, 0110, 1001, 1111
  const Vector& amps = w.prepared.amps();
  for (Index i : {0, 6, 9, 15}) {
    REQUIRE(std::abs(amps(i) - Complex(0.5, 0.0)) < 1e-12);
  }
  REQUIRE(std::abs(amps.squaredNorm() - 1.0) < 1e-12);
}

TEST_CASE("a single-member ensemble reproduces the pure run") {
  auto rng = make_rng(62);
  ProtocolOps ops = random_ops(rng);
  ProtocolTrace pure = run_pure_protocol(ops.prep, ops.abc, ops.d);

  PureEnsemble ens({{1.0, StateVector::basis(protocol_layout(), 0)}});
  MixedProtocolResult mixed =
      run_mixed_protocol(ens, ops.prep, ops.abc, ops.d, 1e-9, 1e-3,
                         test_opt(101));
  for (int k = 2; k <= 4; ++k) {
    REQUIRE(std::abs(mixed.trace.e(k) - pure.e(k)) < 1e-9);
  }
  REQUIRE(mixed.ensemble.member_e2.size() == 1);
  REQUIRE(mixed.ensemble.avg_e2 ==
          Catch::Approx(mixed.ensemble.member_e2[0]).margin(1e-12));
  REQUIRE(mixed.trace.violations().empty());
}

TEST_CASE("random ensembles keep the averaged chain inside its budget") {
  auto rng = make_rng(63);
  SubsystemLayout layout = protocol_layout();
  for (int trial = 0; trial < 2; ++trial) {
    std::vector<PureEnsemble::Member> members;
    double probs[3] = {0.5, 0.3, 0.2};
    for (int m = 0; m < 3; ++m) {
      members.push_back({probs[m], StateVector(layout, random_state_vector(16, rng))});
    }
    PureEnsemble ens(members);
    ProtocolOps ops = random_ops(rng);
    MixedProtocolResult res =
        run_mixed_protocol(ens, ops.prep, ops.abc, ops.d, 1e-9, 1e-3,
                           test_opt(200 + static_cast<std::uint64_t>(trial)));
    REQUIRE(res.trace.violations().empty());
    REQUIRE(bound_margin(res.trace, "member_chain_min") >= -1e-9);
    REQUIRE(bound_margin(res.trace, "avg_local_invariance") >= -1e-9);
    REQUIRE(bound_margin(res.trace, "avg_chain") >= -1e-9);
    REQUIRE(bound_margin(res.trace, "var_e4_vs_avg_chain") >= -1e-3);
    REQUIRE(res.ensemble.member_e2.size() == 3);
  }
}

TEST_CASE("mixed runs reject ensembles on the wrong register") {
  SubsystemLayout ab = SubsystemLayout::qubits({"A", "B"});
  PureEnsemble ens({{1.0, StateVector::basis(ab, 0)}});
  ProtocolOps ops = identity_ops();
  REQUIRE_THROWS_AS(
      run_mixed_protocol(ens, ops.prep, ops.abc, ops.d),
      DimensionMismatch);
}

TEST_CASE("noiseless channels reproduce the pure run") {
  auto rng = make_rng(64);
  ProtocolOps ops = random_ops(rng);
  ProtocolTrace pure = run_pure_protocol(ops.prep, ops.abc, ops.d);

  QuantumChannel id = named_channel(ChannelKind::identity, 0.0);
  ProtocolTrace noisy =
      run_noisy_protocol(vacuum_density(), ops.prep, ops.abc, ops.d, id, id,
                         1e-9, 1e-3, test_opt(300));
  for (int k = 2; k <= 4; ++k) {
    REQUIRE(std::abs(noisy.e(k) - pure.e(k)) < 1e-9);
  }
  REQUIRE(noisy.violations().empty());
  for (const auto& step : noisy.steps) {
    if (step.id == 1) continue;
    bool saw_ad = false, saw_bc = false;
    for (const auto& [key, val] : step.pair_eof) {
      if (key == "AD") saw_ad = true;
      if (key == "BC") saw_bc = true;
      REQUIRE(val >= 0.0);
    }
    REQUIRE(saw_ad);
    REQUIRE(saw_bc);
  }
}

TEST_CASE("a fully depolarizing send wipes the transmitted entanglement") {
  UnitaryOp prep(detail::witness_preparation(protocol_layout()),
                 std::vector<std::string>{"A", "B", "C", "D"});
  QuantumChannel wipe = named_channel(ChannelKind::depolarizing, 1.0);
  QuantumChannel id = named_channel(ChannelKind::identity, 0.0);
  ProtocolTrace t = run_noisy_protocol(
      vacuum_density(), prep, UnitaryOp::identity(8, {"A", "B", "C"}),
      UnitaryOp::identity(2, {"D"}), wipe, id, 1e-9, 1e-3, test_opt(301));

  // D decouples: the state after the send is rho_ABC (x) I/2
  REQUIRE(t.e(2) < 1e-6);
  // the closed-form diagnostic on the (A, D) pair agrees exactly
  bool found = false;
  for (const auto& step : t.steps) {
    if (step.id != 2) continue;
    for (const auto& [key, val] : step.pair_eof) {
      if (key == "AD") {
        REQUIRE(val == 0.0);
        found = true;
      }
    }
  }
  REQUIRE(found);
  REQUIRE(t.violations().empty());
}

TEST_CASE("single-term mixture with clean channels equals the pure run") {
  auto rng = make_rng(65);
  ProtocolOps ops = random_ops(rng);
  ProtocolTrace pure = run_pure_protocol(ops.prep, ops.abc, ops.d);

  LoccMixture single({{1.0, ops.abc, ops.d}});
  QuantumChannel id = named_channel(ChannelKind::identity, 0.0);
  ProtocolTrace locc =
      run_locc_protocol(vacuum_density(), ops.prep, single, id, id, 1e-9,
                        1e-3, test_opt(302));
  REQUIRE(locc.regime == Regime::theorem4);
  for (int k = 2; k <= 4; ++k) {
    REQUIRE(std::abs(locc.e(k) - pure.e(k)) < 1e-9);
  }
  REQUIRE(locc.violations().empty());
}

TEST_CASE("dephasing the sent qubit cannot raise the shared entanglement") {
  // two-bell-pair preparation, then an equal mixture of I and Z on D
  UnitaryOp prep(detail::witness_preparation(protocol_layout()),
                 std::vector<std::string>{"A", "B", "C", "D"});
  Matrix z = Matrix::Identity(2, 2);
  z(1, 1) = -1.0;
  LoccMixture dephase({{0.5, UnitaryOp::identity(8, {"A", "B", "C"}),
                        UnitaryOp::identity(2, {"D"})},
                       {0.5, UnitaryOp::identity(8, {"A", "B", "C"}),
                        UnitaryOp(z, {"D"})}});
  QuantumChannel id = named_channel(ChannelKind::identity, 0.0);
  ProtocolTrace t =
      run_locc_protocol(vacuum_density(), prep, dephase, id, id, 1e-9, 1e-3,
                        test_opt(303));

  REQUIRE(std::abs(t.e(2) - 1.0) < 1e-9);  // bell pair on (A, D), still pure
  REQUIRE(t.e(3) < 1e-6);                  // dephased to a classical pair
  REQUIRE(std::abs(t.e(4) - 1.0) < 1e-3);  // only the (B, C) bell pair remains
  REQUIRE(bound_margin(t, "var_mixture_no_increase") >= -1e-3);
  REQUIRE(bound_margin(t, "var_chain") >= -1e-3);
  REQUIRE(t.violations().empty());
}

TEST_CASE("mixture sides must respect the sender-receiver split") {
  UnitaryOp prep = UnitaryOp::identity(16, {"A", "B", "C", "D"});
  QuantumChannel id = named_channel(ChannelKind::identity, 0.0);
  Matrix z = Matrix::Identity(2, 2);
  z(1, 1) = -1.0;

  LoccMixture touches_d({{1.0, UnitaryOp(z, {"D"}), UnitaryOp(z, {"D"})}});
  REQUIRE_THROWS_AS(run_locc_protocol(vacuum_density(), prep, touches_d, id,
                                      id),
                    DimensionMismatch);
  LoccMixture wrong_receiver({{1.0, UnitaryOp(z, {"A"}), UnitaryOp(z, {"B"})}});
  REQUIRE_THROWS_AS(run_locc_protocol(vacuum_density(), prep, wrong_receiver,
                                      id, id),
                    DimensionMismatch);
}
