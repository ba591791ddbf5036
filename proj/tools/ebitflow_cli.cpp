// Command-line front end. Subcommands: verify, entropy, schmidt, eof,
// witness. Exit codes: 0 success, 2 config or parse error, 3 validation
// error, 4 bound violation, 1 anything unexpected.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ebitflow/ebitflow.hpp"

namespace {

using namespace ebitflow;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitViolation = 4;
constexpr int kExitUnexpected = 1;

void emit(const Json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(out_path, j);
  }
}

struct VerifyArgs {
  ExperimentConfig cfg;
  std::string channel;
  std::string format = "json";
  int ensemble_size = 0;
};

int run_verify(VerifyArgs& args) {
  if (!args.channel.empty()) args.cfg.channel_spec = args.channel;
  if (args.ensemble_size > 0) args.cfg.ensemble_size = args.ensemble_size;
  if (args.format == "json") {
    args.cfg.format = OutputFormat::json;
  } else if (args.format == "csv") {
    args.cfg.format = OutputFormat::csv;
  } else {
    throw ConfigError("format must be json or csv");
  }

  ExperimentReport rep = run_experiment(args.cfg);

  if (args.cfg.output_path.empty()) {
    if (args.cfg.format == OutputFormat::json) {
      std::cout << to_json(rep).dump(2) << "\n";
    } else {
      std::cout << report_to_csv(rep);
    }
  } else {
    if (args.cfg.format == OutputFormat::json) {
      write_json_file(args.cfg.output_path, to_json(rep));
    } else {
      write_text_file(args.cfg.output_path, report_to_csv(rep));
    }
    std::cout << "theorem " << args.cfg.theorem << ": " << rep.trials.size()
              << " trials, min margin " << rep.min_margin << ", "
              << rep.violation_count << " violations, wrote "
              << args.cfg.output_path << "\n";
  }
  return rep.violation_count > 0 ? kExitViolation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ebitflow: entanglement bounds for a four-qubit transmission protocol"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  VerifyArgs v;
  CLI::App* verify = app.add_subcommand(
      "verify", "run seeded randomized trials of one theorem's bound chain");
  verify->add_option("--theorem", v.cfg.theorem, "theorem number, 1 to 4")
      ->required();
  verify->add_option("--trials", v.cfg.trials, "number of independent trials");
  verify->add_option("--seed", v.cfg.seed, "master seed, trial i uses a derived stream")
      ->envname("EBITFLOW_SEED");
  verify->add_option("--tol", v.cfg.tol, "tolerance for exact bounds");
  verify->add_option("--eps-var", v.cfg.eps_var, "slack for variational bounds");
  verify->add_option("--channel", v.channel,
                     "channel spec for theorems 3 and 4, e.g. depolarizing:0.3 "
                     "or random:env_dim=2");
  verify->add_option("--ensemble-size", v.ensemble_size,
                     "fixed member count for theorem 2 ensembles");
  verify->add_option("--jobs", v.cfg.jobs, "worker thread count");
  verify->add_option("--format", v.format, "report format: json or csv");
  verify->add_option("--out", v.cfg.output_path, "report file path, default stdout");
  verify->add_flag("--identity-ops", v.cfg.identity_ops,
                   "replace random unitaries with identities");
  verify->add_option("--restarts", v.cfg.opt.restarts, "optimizer restarts");
  verify->add_option("--max-ensemble", v.cfg.opt.max_ensemble,
                     "optimizer decomposition size cap, 0 = rank squared");
  verify->add_option("--max-iters", v.cfg.opt.max_iters,
                     "optimizer pair-rotation budget per restart");
  verify->add_option("--opt-tol", v.cfg.opt.tol, "optimizer sweep-gain stop");

  std::string in_path, cut_text, out_path;
  CLI::App* entropy = app.add_subcommand(
      "entropy", "entropy of the cut's left marginal of a state file");
  entropy->add_option("file", in_path, "state file (JSON)")->required();
  entropy->add_option("--cut", cut_text, "cut spec, e.g. A~B or A,B~C,D");
  entropy->add_option("--out", out_path, "write result here instead of stdout");

  bool with_bases = false;
  CLI::App* schmidt = app.add_subcommand(
      "schmidt", "Schmidt coefficients of a pure state across a cut");
  schmidt->add_option("file", in_path, "state file (JSON)")->required();
  schmidt->add_option("--cut", cut_text, "cut spec, default first label vs rest");
  schmidt->add_flag("--bases", with_bases, "include the Schmidt bases");
  schmidt->add_option("--out", out_path, "write result here instead of stdout");

  std::string method_text = "both";
  bool with_decomposition = false;
  OptConfig eof_opt;
  CLI::App* eof = app.add_subcommand(
      "eof", "entanglement of formation of a state file");
  eof->add_option("file", in_path, "state file (JSON)")->required();
  eof->add_option("--cut", cut_text, "cut spec, default first label vs rest");
  eof->add_option("--method", method_text, "closed, variational or both");
  eof->add_option("--seed", eof_opt.seed, "optimizer seed")->envname("EBITFLOW_SEED");
  eof->add_option("--restarts", eof_opt.restarts, "optimizer restarts");
  eof->add_option("--max-ensemble", eof_opt.max_ensemble,
                  "decomposition size cap, 0 = rank squared");
  eof->add_option("--max-iters", eof_opt.max_iters, "pair-rotation budget");
  eof->add_option("--opt-tol", eof_opt.tol, "sweep-gain stop");
  eof->add_flag("--decomposition", with_decomposition,
                "include the optimal decomposition found");
  eof->add_option("--out", out_path, "write result here instead of stdout");

  double probe_angle = 0.01;
  bool with_states = false;
  CLI::App* witness = app.add_subcommand(
      "witness", "run the exact equality witness and its perturbation probe");
  witness->add_option("--angle", probe_angle, "probe rotation angle");
  witness->add_flag("--states", with_states, "include state snapshots");
  witness->add_option("--out", out_path, "write result here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 returns 0 for --help/--version, anything else is a usage error
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (verify->parsed()) return run_verify(v);
    if (entropy->parsed()) {
      emit(cmd_entropy(in_path, cut_text), out_path);
      return kExitOk;
    }
    if (schmidt->parsed()) {
      emit(cmd_schmidt(in_path, cut_text, with_bases), out_path);
      return kExitOk;
    }
    if (eof->parsed()) {
      emit(cmd_eof(in_path, cut_text, parse_eof_method(method_text), eof_opt,
                   with_decomposition),
           out_path);
      return kExitOk;
    }
    if (witness->parsed()) {
      emit(cmd_witness(probe_angle, with_states), out_path);
      return kExitOk;
    }
    std::cerr << "no subcommand given\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const BoundViolation& e) {
    std::cerr << "bound violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitUnexpected;
  }
}
