#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ebitflow/entanglement.hpp"
#include "ebitflow/protocol.hpp"
#include "ebitflow/states.hpp"

namespace ebitflow {

using Json = nlohmann::json;

// File format conventions: complex numbers are [re, im] pairs (a bare number
// is accepted on input and read as real), matrices are row-major arrays of
// rows, a register is {"labels": [...], "dims": [...]}.

namespace detail {

inline const Json& get_field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw ParseError(std::string("missing field \"") + name + "\"");
  }
  return *it;
}

inline Complex complex_from_json(const Json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return Complex(j[0].get<double>(), j[1].get<double>());
  }
  throw ParseError("expected a number or an [re, im] pair");
}

inline Json complex_to_json(const Complex& z) {
  return Json::array({z.real(), z.imag()});
}

}  // namespace detail

inline Json to_json(const SubsystemLayout& layout) {
  Json j;
  j["labels"] = layout.labels();
  std::vector<Index> dims;
  for (const auto& l : layout.labels()) dims.push_back(layout.dim(l));
  j["dims"] = dims;
  return j;
}

inline SubsystemLayout layout_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("register description must be an object");
  const Json& jl = detail::get_field(j, "labels");
  const Json& jd = detail::get_field(j, "dims");
  if (!jl.is_array() || !jd.is_array() || jl.size() != jd.size()) {
    throw ParseError("labels and dims must be arrays of equal length");
  }
  std::vector<std::string> labels;
  std::vector<Index> dims;
  for (std::size_t i = 0; i < jl.size(); ++i) {
    if (!jl[i].is_string() || !jd[i].is_number_integer()) {
      throw ParseError("labels must be strings and dims integers");
    }
    labels.push_back(jl[i].get<std::string>());
    dims.push_back(jd[i].get<Index>());
  }
  try {
    return SubsystemLayout(std::move(labels), std::move(dims));
  } catch (const Error& e) {
    throw ParseError(std::string("bad register: ") + e.what());
  }
}

inline Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(detail::complex_to_json(v(i)));
  return arr;
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(detail::complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector_from_json(const Json& j, Index expected_size) {
  if (!j.is_array() || static_cast<Index>(j.size()) != expected_size) {
    throw ParseError("amplitude list has the wrong length");
  }
  Vector v(expected_size);
  for (Index i = 0; i < expected_size; ++i) {
    v(i) = detail::complex_from_json(j[static_cast<std::size_t>(i)]);
  }
  return v;
}

inline Matrix matrix_from_json(const Json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw ParseError("matrix has the wrong number of rows");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ParseError("matrix row has the wrong length");
    }
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = detail::complex_from_json(row[static_cast<std::size_t>(k)]);
    }
  }
  return m;
}

inline Json to_json(const StateVector& psi) {
  Json j;
  j["type"] = "pure";
  j["register"] = to_json(psi.layout());
  j["amplitudes"] = to_json(psi.amps());
  return j;
}

inline Json to_json(const DensityMatrix& rho) {
  Json j;
  j["type"] = "density";
  j["register"] = to_json(rho.layout());
  j["matrix"] = to_json(rho.mat());
  return j;
}

using AnyState = std::variant<StateVector, DensityMatrix>;

inline AnyState state_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("state description must be an object");
  SubsystemLayout layout = layout_from_json(detail::get_field(j, "register"));
  std::string type = detail::get_field(j, "type").get<std::string>();
  if (type == "pure") {
    Vector amps = vector_from_json(detail::get_field(j, "amplitudes"),
                                   layout.total_dim());
    return StateVector(layout, amps);
  }
  if (type == "density") {
    Matrix m = matrix_from_json(detail::get_field(j, "matrix"),
                                layout.total_dim(), layout.total_dim());
    return validate_density(layout, m);
  }
  throw ParseError("state type must be \"pure\" or \"density\"");
}

inline AnyState load_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open state file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return state_from_json(j);
}

inline Json to_json(const Bipartition& cut) {
  Json j;
  j["left"] = cut.left();
  j["right"] = cut.right();
  return j;
}

inline Json to_json(const SchmidtForm& s, bool include_bases = false) {
  Json j;
  j["cut"] = to_json(s.cut);
  Json coeffs = Json::array();
  for (Index i = 0; i < s.coeffs.size(); ++i) coeffs.push_back(s.coeffs(i));
  j["coefficients"] = std::move(coeffs);
  j["rank"] = s.coeffs.size();
  if (include_bases) {
    j["left_basis"] = to_json(s.left_basis);
    j["right_basis"] = to_json(s.right_basis);
  }
  return j;
}

inline Json to_json(const PureEnsemble& ens) {
  Json members = Json::array();
  for (const auto& m : ens.members()) {
    Json jm;
    jm["prob"] = m.prob;
    jm["amplitudes"] = to_json(m.state.amps());
    members.push_back(std::move(jm));
  }
  Json j;
  j["register"] = to_json(ens.layout());
  j["members"] = std::move(members);
  return j;
}

inline Json to_json(const EofResult& r, bool include_decomposition = false) {
  Json j;
  j["value"] = r.value;
  j["method"] = r.method == EofMethod::closed_form ? "closed_form" : "variational";
  j["converged"] = r.converged;
  j["restarts_used"] = r.restarts_used;
  if (include_decomposition && r.decomposition) {
    j["decomposition"] = to_json(*r.decomposition);
  }
  return j;
}

inline Json to_json(const BoundCheck& b) {
  Json j;
  j["name"] = b.name;
  j["margin"] = b.margin;
  j["tol"] = b.tol;
  j["hard"] = b.hard;
  j["satisfied"] = b.margin >= -b.tol;
  return j;
}

inline Json to_json(const TraceStep& s, bool include_states = false) {
  Json j;
  j["id"] = s.id;
  j["action"] = s.action;
  if (s.cut) {
    j["cut"] = to_json(*s.cut);
  } else {
    j["cut"] = nullptr;
  }
  j["e_bits"] = s.e_bits;
  j["method"] = to_string(s.method);
  j["eof_converged"] = s.eof_converged;
  if (!s.pair_eof.empty()) {
    Json p = Json::object();
    for (const auto& [k, v] : s.pair_eof) p[k] = v;
    j["pair_eof"] = std::move(p);
  }
  if (include_states) {
    if (s.pure_state) j["state"] = to_json(*s.pure_state);
    if (s.mixed_state) j["state"] = to_json(*s.mixed_state);
  }
  return j;
}

inline Json to_json(const ProtocolTrace& t, bool include_states = false) {
  Json j;
  j["regime"] = to_string(t.regime);
  Json steps = Json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s, include_states));
  j["steps"] = std::move(steps);
  Json bounds = Json::array();
  for (const auto& b : t.bounds) bounds.push_back(to_json(b));
  j["bounds"] = std::move(bounds);
  j["s_c4"] = t.s_c4;
  j["min_margin"] = t.min_margin();
  j["violations"] = t.violations();
  return j;
}

inline Json to_json(const WitnessReport& w, bool include_states = false) {
  Json j;
  j["trace"] = to_json(w.trace, include_states);
  j["prepared"] = to_json(w.prepared);
  j["probe_angle"] = w.probe_angle;
  j["perturbed_e4"] = w.perturbed_e4;
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
  if (!out) throw ConfigError("failed writing " + path);
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace ebitflow
