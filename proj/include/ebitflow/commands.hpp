#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ebitflow/entanglement.hpp"
#include "ebitflow/experiment.hpp"
#include "ebitflow/io.hpp"
#include "ebitflow/protocol.hpp"

namespace ebitflow {

namespace detail {

inline std::vector<std::string> cut_side_labels(const std::string& text,
                                                const SubsystemLayout& layout) {
  if (text.empty()) throw ParseError("empty side in cut spec");
  std::vector<std::string> out;
  if (text.find(',') != std::string::npos) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t next = text.find(',', pos);
      const std::string piece = next == std::string::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, next - pos);
      if (piece.empty()) throw ParseError("empty label in cut spec");
      out.push_back(piece);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return out;
  }
  // no commas: a single known label, or a run of one-character labels
  if (layout.has(text)) return {text};
  for (char c : text) out.emplace_back(1, c);
  return out;
}

}  // namespace detail

// Cut spec syntax: LEFT~RIGHT with sides as comma-separated labels, or as
// runs of one-character labels ("AB~CD"). The right side may be omitted and
// defaults to the complement. The cut must cover the whole register.
inline Bipartition parse_cut(const std::string& text, const SubsystemLayout& layout) {
  try {
    const std::size_t tilde = text.find('~');
    if (tilde != std::string::npos &&
        text.find('~', tilde + 1) != std::string::npos) {
      throw ParseError("cut spec has more than one ~");
    }
    std::vector<std::string> left;
    std::vector<std::string> right;
    if (tilde == std::string::npos) {
      left = detail::cut_side_labels(text, layout);
      right = layout.complement(left);
    } else {
      left = detail::cut_side_labels(text.substr(0, tilde), layout);
      const std::string rest = text.substr(tilde + 1);
      right = rest.empty() ? layout.complement(left)
                           : detail::cut_side_labels(rest, layout);
    }
    Bipartition cut(std::move(left), std::move(right));
    cut.validate(layout);
    return cut;
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError("bad cut spec \"" + text + "\": " + e.what());
  }
}

// First label against the rest.
inline Bipartition default_cut(const SubsystemLayout& layout) {
  if (layout.size() < 2) {
    throw ParseError("register has a single subsystem, no cut available");
  }
  return Bipartition::split(layout, {layout.labels().front()});
}

namespace detail {

inline const SubsystemLayout& layout_of(const AnyState& st) {
  if (std::holds_alternative<StateVector>(st)) {
    return std::get<StateVector>(st).layout();
  }
  return std::get<DensityMatrix>(st).layout();
}

}  // namespace detail

// Entropy of the cut's left marginal; for pure input this is the cut's
// entanglement in ebits.
inline Json cmd_entropy(const std::string& path, const std::string& cut_text) {
  AnyState st = load_state_file(path);
  const SubsystemLayout& layout = detail::layout_of(st);
  Bipartition cut = cut_text.empty() ? default_cut(layout)
                                     : parse_cut(cut_text, layout);
  Json j;
  if (std::holds_alternative<StateVector>(st)) {
    j["state_type"] = "pure";
    j["entropy_bits"] = pure_entanglement(std::get<StateVector>(st), cut).bits;
  } else {
    const DensityMatrix& rho = std::get<DensityMatrix>(st);
    j["state_type"] = "density";
    j["entropy_bits"] =
        von_neumann_entropy(partial_trace(rho, cut.left())).bits;
    j["full_state_entropy_bits"] = von_neumann_entropy(rho).bits;
  }
  j["cut"] = to_json(cut);
  return j;
}

inline Json cmd_schmidt(const std::string& path, const std::string& cut_text,
                        bool include_bases = false) {
  AnyState st = load_state_file(path);
  if (!std::holds_alternative<StateVector>(st)) {
    throw ValidationError("Schmidt decomposition needs a pure state");
  }
  const StateVector& psi = std::get<StateVector>(st);
  Bipartition cut = cut_text.empty() ? default_cut(psi.layout())
                                     : parse_cut(cut_text, psi.layout());
  SchmidtForm s = schmidt_decompose(psi, cut);
  Json j = to_json(s, include_bases);
  RealVector squares = s.coeffs.array().square();
  j["entropy_bits"] = detail::entropy_of_eigenvalues(squares);
  return j;
}

enum class EofCmdMethod { closed, variational, both };

inline EofCmdMethod parse_eof_method(const std::string& text) {
  if (text == "closed") return EofCmdMethod::closed;
  if (text == "variational") return EofCmdMethod::variational;
  if (text == "both") return EofCmdMethod::both;
  throw ConfigError("method must be closed, variational or both");
}

inline Json cmd_eof(const std::string& path, const std::string& cut_text,
                    EofCmdMethod method, const OptConfig& opt,
                    bool include_decomposition = false) {
  AnyState st = load_state_file(path);
  DensityMatrix rho = std::holds_alternative<StateVector>(st)
                          ? pure_to_density(std::get<StateVector>(st))
                          : std::get<DensityMatrix>(st);
  Bipartition cut = cut_text.empty() ? default_cut(rho.layout())
                                     : parse_cut(cut_text, rho.layout());
  Json j;
  j["cut"] = to_json(cut);
  std::optional<double> closed;
  std::optional<EofResult> var;
  if (method == EofCmdMethod::closed || method == EofCmdMethod::both) {
    closed = eof_two_qubit(rho).value;
    j["closed_form"] = *closed;
  }
  if (method == EofCmdMethod::variational || method == EofCmdMethod::both) {
    var = eof_variational(rho, cut, opt);
    j["variational"] = to_json(*var, include_decomposition);
  }
  if (closed && var) j["difference"] = var->value - *closed;
  return j;
}

inline Json cmd_witness(double probe_angle, bool include_states = false) {
  return to_json(equality_witness(probe_angle), include_states);
}

}  // namespace ebitflow
