#include "imsynth/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "imsynth/errors.hpp"

namespace imsynth::serialize {

using json = nlohmann::json;

namespace {

json matrix_json(const numkit::Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

numkit::Matrix matrix_from(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw FormatError(std::string("algorithm file: field '") + key + "' must be a nested array");
  }
  const json& rows = doc[key];
  const auto r = rows.size();
  const auto c = r == 0 ? 0 : rows[0].size();
  numkit::Matrix m(static_cast<int>(r), static_cast<int>(c));
  for (std::size_t i = 0; i < r; ++i) {
    if (!rows[i].is_array() || rows[i].size() != c) {
      throw FormatError(std::string("algorithm file: rows of '") + key + "' have unequal lengths");
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (!rows[i][j].is_number()) {
        throw FormatError(std::string("algorithm file: non-numeric entry in '") + key + "'");
      }
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

double number_from(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw FormatError(std::string("algorithm file: field '") + key + "' must be a number");
  }
  return doc[key].get<double>();
}

}  // namespace

std::string algorithm_to_json(const plant::Algorithm& alg) {
  const auto& info = alg.info();
  json doc;
  doc["format"] = "imsynth-algorithm";
  doc["version"] = 1;
  doc["A"] = matrix_json(alg.A());
  doc["B"] = matrix_json(alg.B());
  doc["C"] = matrix_json(alg.C());
  doc["mu"] = info.mu;
  doc["L"] = info.L;
  doc["rho"] = info.rho;
  json hs = json::array();
  for (const auto& w : info.harmonics) hs.push_back({w.real(), w.imag()});
  doc["harmonics"] = std::move(hs);
  doc["provenance"] = json::object();
  for (const auto& [k, v] : info.provenance) doc["provenance"][k] = v;
  return doc.dump(2) + "\n";
}

plant::Algorithm algorithm_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("algorithm file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("algorithm file: top level must be an object");
  if (doc.value("format", std::string()) != "imsynth-algorithm") {
    throw FormatError("algorithm file: missing or wrong 'format' (expected imsynth-algorithm)");
  }
  if (!doc.contains("version") || doc["version"] != 1) {
    throw FormatError("algorithm file: unsupported version");
  }
  plant::AlgorithmInfo info;
  info.mu = number_from(doc, "mu");
  info.L = number_from(doc, "L");
  info.rho = doc.contains("rho") ? number_from(doc, "rho") : 0.0;
  if (doc.contains("harmonics")) {
    if (!doc["harmonics"].is_array()) throw FormatError("algorithm file: 'harmonics' must be an array");
    for (const auto& h : doc["harmonics"]) {
      if (!h.is_array() || h.size() != 2 || !h[0].is_number() || !h[1].is_number()) {
        throw FormatError("algorithm file: harmonics must be [re, im] pairs");
      }
      info.harmonics.emplace_back(h[0].get<double>(), h[1].get<double>());
    }
  }
  if (doc.contains("provenance")) {
    if (!doc["provenance"].is_object()) throw FormatError("algorithm file: 'provenance' must be an object");
    for (const auto& [k, v] : doc["provenance"].items()) {
      info.provenance[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return plant::Algorithm(matrix_from(doc, "A"), matrix_from(doc, "B"), matrix_from(doc, "C"), info);
}

void save_algorithm(const std::filesystem::path& path, const plant::Algorithm& alg) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << algorithm_to_json(alg);
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

plant::Algorithm load_algorithm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open algorithm file '" + path.string() + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return algorithm_from_json(buf.str());
}

}  // namespace imsynth::serialize
