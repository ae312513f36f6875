#include "fibdim/ensemble_io.hpp"

#include "fibdim/error.hpp"

#include <fstream>
#include <set>

namespace fibdim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw Error(ErrorKind::InvalidSpec, where + ": unknown key '" + item.key() + "'");
    }
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorKind::InvalidSpec, where + ": missing key '" + key + "'");
  return j.at(key);
}

Matrix matrix_from_json(const json& j, int d, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw Error(ErrorKind::InvalidSpec, where + ": expected " + std::to_string(d) + " rows");
  }
  Matrix m(d, d);
  for (int r = 0; r < d; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw Error(ErrorKind::InvalidSpec, where + ": row " + std::to_string(r) + " must have " +
                                              std::to_string(d) + " entries");
    }
    for (int c = 0; c < d; ++c) {
      if (!row[c].is_number()) throw Error(ErrorKind::InvalidSpec, where + ": non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

Vector vector_from_json(const json& j, int d, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw Error(ErrorKind::InvalidSpec, where + ": expected " + std::to_string(d) + " entries");
  }
  Vector v(d);
  for (int k = 0; k < d; ++k) {
    if (!j[k].is_number()) throw Error(ErrorKind::InvalidSpec, where + ": non-numeric entry");
    v(k) = j[k].get<double>();
  }
  return v;
}

std::vector<Atom> atoms_from_json(const json& j, int d) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidSpec, "ensemble.atoms must be a list");
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string where = "ensemble.atoms[" + std::to_string(k) + "]";
    reject_unknown_keys(j[k], {"matrix", "probability"}, where);
    const json& p = require(j[k], "probability", where);
    if (!p.is_number()) throw Error(ErrorKind::InvalidSpec, where + ": probability must be a number");
    atoms.push_back(Atom{matrix_from_json(require(j[k], "matrix", where), d, where + ".matrix"),
                         p.get<double>()});
  }
  return atoms;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json atoms_to_json(const std::vector<Atom>& atoms) {
  json a = json::array();
  for (const Atom& atom : atoms) {
    a.push_back({{"matrix", matrix_to_json(atom.matrix)}, {"probability", atom.probability}});
  }
  return a;
}

}  // namespace

EnsembleSpec ensemble_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidSpec, "ensemble must be an object");
  if (j.contains("benchmark")) {
    reject_unknown_keys(j, {"benchmark"}, "ensemble");
    if (!j["benchmark"].is_string()) throw Error(ErrorKind::InvalidSpec, "ensemble.benchmark must be a string");
    return benchmark_ensemble(j["benchmark"].get<std::string>());
  }
  const json& version = require(j, "schema_version", "ensemble");
  if (!version.is_number_integer() || version.get<int>() != kEnsembleSchemaVersion) {
    throw Error(ErrorKind::InvalidSpec, "ensemble: unsupported schema_version");
  }
  const json& kind_j = require(j, "kind", "ensemble");
  const json& dim_j = require(j, "dim", "ensemble");
  if (!kind_j.is_string()) throw Error(ErrorKind::InvalidSpec, "ensemble.kind must be a string");
  if (!dim_j.is_number_integer() || dim_j.get<int>() < 2) {
    throw Error(ErrorKind::InvalidSpec, "ensemble.dim must be an integer >= 2");
  }
  const std::string kind = kind_j.get<std::string>();
  const int d = dim_j.get<int>();
  EnsembleSpec spec;
  spec.dim = d;
  spec.name = j.value("name", kind);
  const std::set<std::string> common{"schema_version", "name", "dim", "kind"};
  auto allowed = [&](std::initializer_list<std::string> extra) {
    std::set<std::string> s = common;
    s.insert(extra);
    return s;
  };
  if (kind == "finite_support") {
    reject_unknown_keys(j, allowed({"atoms"}), "ensemble");
    spec.kind = FiniteSupport{atoms_from_json(require(j, "atoms", "ensemble"), d)};
  } else if (kind == "rotation_invariant") {
    reject_unknown_keys(j, allowed({"stretch"}), "ensemble");
    spec.kind = RotationInvariant{matrix_from_json(require(j, "stretch", "ensemble"), d, "ensemble.stretch")};
  } else if (kind == "diagonal") {
    reject_unknown_keys(j, allowed({"log_mean", "log_sd"}), "ensemble");
    spec.kind = DiagonalLogNormal{vector_from_json(require(j, "log_mean", "ensemble"), d, "ensemble.log_mean"),
                                  vector_from_json(require(j, "log_sd", "ensemble"), d, "ensemble.log_sd")};
  } else if (kind == "perturbed") {
    reject_unknown_keys(j, allowed({"atoms", "angle"}), "ensemble");
    const json& angle = require(j, "angle", "ensemble");
    if (!angle.is_number()) throw Error(ErrorKind::InvalidSpec, "ensemble.angle must be a number");
    spec.kind = Perturbed{atoms_from_json(require(j, "atoms", "ensemble"), d), angle.get<double>()};
  } else {
    throw Error(ErrorKind::InvalidSpec, "ensemble: unknown kind '" + kind + "'");
  }
  return spec;
}

json ensemble_to_json(const EnsembleSpec& spec) {
  json j = {{"schema_version", kEnsembleSchemaVersion},
            {"name", spec.name},
            {"dim", spec.dim},
            {"kind", kind_name(spec)}};
  if (const auto* fs = std::get_if<FiniteSupport>(&spec.kind)) {
    j["atoms"] = atoms_to_json(fs->atoms);
  } else if (const auto* ri = std::get_if<RotationInvariant>(&spec.kind)) {
    j["stretch"] = matrix_to_json(ri->stretch);
  } else if (const auto* dl = std::get_if<DiagonalLogNormal>(&spec.kind)) {
    j["log_mean"] = vector_to_json(dl->log_mean);
    j["log_sd"] = vector_to_json(dl->log_sd);
  } else if (const auto* pt = std::get_if<Perturbed>(&spec.kind)) {
    j["atoms"] = atoms_to_json(pt->atoms);
    j["angle"] = pt->angle;
  }
  return j;
}

EnsembleSpec load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open ensemble file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidSpec, "ensemble file '" + path + "': " + e.what());
  }
  return ensemble_from_json(j);
}

}  // namespace fibdim
