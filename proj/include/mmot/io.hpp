#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmot/assembly.hpp"
#include "mmot/ggr.hpp"
#include "mmot/mesh.hpp"

namespace mmot::io {

using nlohmann::json;

// ---- Mesh <-> JSON -------------------------------------------------------

inline json mesh_to_json(const Mesh& mesh) {
  json elems = json::array();
  for (int id = 0; id < mesh.size(); ++id) {
    const Element& e = mesh.elements[id];
    json b = mesh.dim == 1 ? json::array({e.bounds[0], e.bounds[1]})
                           : json::array({e.bounds[0], e.bounds[1], e.bounds[2],
                                          e.bounds[3]});
    json bary = mesh.dim == 1
                    ? json::array({e.barycenter[0]})
                    : json::array({e.barycenter[0], e.barycenter[1]});
    elems.push_back({{"id", id},
                     {"bounds", b},
                     {"volume", e.volume},
                     {"barycenter", bary},
                     {"parent", e.parent}});
  }
  return {{"dim", mesh.dim}, {"level", mesh.level}, {"elements", elems}};
}

inline Mesh mesh_from_json(const json& j) {
  Mesh mesh;
  mesh.dim = j.at("dim").get<int>();
  mesh.level = j.at("level").get<int>();
  for (const auto& ej : j.at("elements")) {
    Element e;
    const auto& b = ej.at("bounds");
    e.bounds = {b[0].get<double>(), b[1].get<double>(),
                b.size() > 2 ? b[2].get<double>() : 0.0,
                b.size() > 3 ? b[3].get<double>() : 0.0};
    e.volume = ej.at("volume").get<double>();
    const auto& bc = ej.at("barycenter");
    e.barycenter = {bc[0].get<double>(),
                    bc.size() > 1 ? bc[1].get<double>() : 0.0};
    e.parent = ej.at("parent").get<int>();
    mesh.elements.push_back(e);
  }
  return mesh;
}

// ---- PlanSet <-> binary --------------------------------------------------

inline void save_plan(const PlanSet& Z, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  const char magic[8] = {'M', 'M', 'O', 'T', 'P', 'L', 'N', '1'};
  f.write(magic, 8);
  const std::int64_t nb = Z.block_count(), K = Z.K();
  f.write(reinterpret_cast<const char*>(&nb), 8);
  f.write(reinterpret_cast<const char*>(&K), 8);
  for (const auto& X : Z.blocks)
    f.write(reinterpret_cast<const char*>(X.data()),
            static_cast<std::streamsize>(sizeof(double) * K * K));
  if (!f) throw Error("short write to " + path);
}

inline PlanSet load_plan(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::string(magic, 8) != "MMOTPLN1")
    throw Error(path + " is not a plan file");
  std::int64_t nb = 0, K = 0;
  f.read(reinterpret_cast<char*>(&nb), 8);
  f.read(reinterpret_cast<char*>(&K), 8);
  if (nb <= 0 || K <= 0 || nb > 64 || K > (1 << 20))
    throw Error(path + " has an implausible plan header");
  PlanSet Z = PlanSet::zero(static_cast<int>(nb), static_cast<int>(K));
  for (auto& X : Z.blocks)
    f.read(reinterpret_cast<char*>(X.data()),
           static_cast<std::streamsize>(sizeof(double) * K * K));
  if (!f) throw Error("short read from " + path);
  return Z;
}

// ---- ProblemData <-> JSON ------------------------------------------------

inline json problem_to_json(const ProblemData& p) {
  json C = json::array();
  for (int j = 0; j < p.K; ++j) {
    json row = json::array();
    for (int k = 0; k < p.K; ++k) row.push_back(p.C(j, k));
    C.push_back(row);
  }
  return {{"K", p.K},
          {"N", p.N},
          {"beta", p.beta},
          {"varrho", std::vector<double>(p.varrho.data(), p.varrho.data() + p.K)},
          {"vol", std::vector<double>(p.vol.data(), p.vol.data() + p.K)},
          {"C", C}};
}

inline ProblemData problem_from_json(const json& j) {
  ProblemData p;
  p.N = j.at("N").get<int>();
  p.beta = j.at("beta").get<double>();
  const auto rho = j.at("varrho").get<std::vector<double>>();
  const auto vol = j.at("vol").get<std::vector<double>>();
  const int K = static_cast<int>(vol.size());
  p.varrho = Eigen::Map<const VectorXd>(rho.data(), K);
  p.vol = Eigen::Map<const VectorXd>(vol.data(), K);
  p.C = MatrixXd::Zero(K, K);
  const auto& C = j.at("C");
  for (int r = 0; r < K; ++r)
    for (int c = 0; c < K; ++c) p.C(r, c) = C[r][c].get<double>();
  p.finalize();
  return p;
}

// ---- Reports -------------------------------------------------------------

inline json level_to_json(const LevelResult& lr, bool with_timing) {
  json j{{"level", lr.level},
         {"K", lr.K},
         {"beta", lr.beta},
         {"eps_outer", lr.eps_outer},
         {"E", lr.energy},
         {"E_penalized", lr.penalized_energy},
         {"comp_violation", lr.comp},
         {"feas", lr.feas},
         {"kkt", lr.kkt},
         {"err_s", lr.err_s ? json(*lr.err_s) : json(nullptr)},
         {"err_e", lr.err_e ? json(*lr.err_e) : json(nullptr)},
         {"sweeps", lr.sweeps},
         {"termination", lr.termination}};
  if (lr.multistart_n > 0) {
    j["multistart_n"] = lr.multistart_n;
    j["multistart_winner"] = lr.multistart_winner;
  }
  if (with_timing) j["time"] = lr.wall_seconds;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error("short write to " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---- CSV emitters --------------------------------------------------------

inline std::string csv_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

inline void write_maps_csv(const MapTable& maps, const Mesh& mesh,
                           const std::string& path) {
  std::ostringstream ss;
  if (mesh.dim == 1)
    ss << "block,row,barycenter_x,map_x\n";
  else
    ss << "block,row,barycenter_x,barycenter_y,map_x,map_y\n";
  for (std::size_t i = 0; i < maps.points.size(); ++i)
    for (int j = 0; j < mesh.size(); ++j) {
      const auto& pt = maps.points[i][j];
      if (!pt) continue;
      ss << (i + 2) << ',' << j << ','
         << csv_double(mesh.elements[j].barycenter[0]);
      if (mesh.dim == 2) ss << ',' << csv_double(mesh.elements[j].barycenter[1]);
      ss << ',' << csv_double((*pt)[0]);
      if (mesh.dim == 2) ss << ',' << csv_double((*pt)[1]);
      ss << '\n';
    }
  write_text(path, ss.str());
}

inline void append_trace_csv(std::ostringstream& ss, int level,
                             const SolveReport& rep) {
  for (std::size_t s = 0; s < rep.penalized_energies.size(); ++s) {
    ss << level << ',' << (s + 1) << ',' << csv_double(rep.energies[s]) << ','
       << csv_double(rep.penalized_energies[s]) << ','
       << csv_double(rep.comp_violations[s]) << ','
       << csv_double(rep.feasibilities[s]) << ','
       << csv_double(rep.kkt_violations[s]) << ','
       << csv_double(rep.iterate_gaps[s]) << ','
       << csv_double(rep.sweep_seconds[s]) << '\n';
  }
}

inline void write_slices_csv(const std::vector<SlicePoints>& slices,
                             const std::string& path) {
  std::ostringstream ss;
  ss << "slice,set,x,y\n";
  for (std::size_t s = 0; s < slices.size(); ++s) {
    for (const auto& pt : slices[s].omega)
      ss << s << ",omega," << csv_double(pt[0]) << ',' << csv_double(pt[1])
         << '\n';
    for (std::size_t i = 0; i < slices[s].images.size(); ++i)
      for (const auto& pt : slices[s].images[i])
        ss << s << ",T" << (i + 2) << ',' << csv_double(pt[0]) << ','
           << csv_double(pt[1]) << '\n';
  }
  write_text(path, ss.str());
}

}  // namespace mmot::io
