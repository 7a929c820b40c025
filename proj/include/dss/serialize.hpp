#ifndef DSS_SERIALIZE_HPP
#define DSS_SERIALIZE_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "dss/errors.hpp"
#include "dss/field.hpp"

namespace dss {

using ordered_json = nlohmann::ordered_json;

/// Self-describing JSON container for a field: versioned header, grid
/// metadata, and the flat sample array. Closures do not survive a round
/// trip; loaded fields evaluate through interpolation.
inline ordered_json field_to_json(const DssField& f) {
  ordered_json j;
  j["format"] = "dss-field";
  j["version"] = 1;
  j["name"] = f.name;
  j["roughness_tag"] = f.roughness_tag;
  j["lambda"] = f.grid.lambda;
  j["n_radial"] = f.grid.n_radial;
  j["sphere_nz"] = f.grid.sphere.nz;
  j["sphere_nphi"] = f.grid.sphere.nphi;
  j["interp_order"] = f.grid.interp_order;
  ordered_json samples = ordered_json::array();
  for (const Vec3& s : f.samples) {
    samples.push_back(s.x);
    samples.push_back(s.y);
    samples.push_back(s.z);
  }
  j["samples"] = std::move(samples);
  return j;
}

inline DssField field_from_json(const ordered_json& j) {
  if (j.value("format", "") != "dss-field")
    throw error(errc::io, "not a field container");
  if (j.value("version", 0) != 1)
    throw error(errc::io, "unsupported field container version");
  GridSpec g;
  g.lambda = j.at("lambda").get<double>();
  g.n_radial = j.at("n_radial").get<int>();
  g.interp_order = j.at("interp_order").get<int>();
  g.radial_nodes.resize(g.n_radial);
  for (int i = 0; i < g.n_radial; ++i)
    g.radial_nodes[i] = std::pow(g.lambda, static_cast<double>(i) / g.n_radial);
  g.sphere = make_sphere_mesh(j.at("sphere_nz").get<int>(),
                              j.at("sphere_nphi").get<int>());
  DssField f = make_field(g);
  f.name = j.value("name", "");
  f.roughness_tag = j.value("roughness_tag", "");
  const auto& s = j.at("samples");
  if (s.size() != 3 * f.samples.size())
    throw error(errc::io, "sample array length does not match the grid");
  for (size_t i = 0; i < f.samples.size(); ++i)
    f.samples[i] = Vec3{s[3 * i].get<double>(), s[3 * i + 1].get<double>(),
                        s[3 * i + 2].get<double>()};
  return f;
}

inline ordered_json cell_to_json(const SpaceTimeCell& c) {
  ordered_json j;
  j["format"] = "dss-cell";
  j["version"] = 1;
  j["name"] = c.name;
  j["lambda"] = c.grid.lambda;
  j["n_radial"] = c.grid.n_radial;
  j["sphere_nz"] = c.grid.sphere.nz;
  j["sphere_nphi"] = c.grid.sphere.nphi;
  j["interp_order"] = c.grid.interp_order;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["n_shell"] = c.n_shell();
  j["n_time"] = c.n_time();
  j["envelope"] = ordered_json{{"C", c.envelope.C},
                               {"alpha", c.envelope.alpha},
                               {"beta", c.envelope.beta},
                               {"R0", c.envelope.R0},
                               {"core_bound", c.envelope.core_bound},
                               {"valid", c.envelope.valid}};
  ordered_json samples = ordered_json::array();
  for (const Vec3& s : c.samples) {
    samples.push_back(s.x);
    samples.push_back(s.y);
    samples.push_back(s.z);
  }
  j["samples"] = std::move(samples);
  return j;
}

inline SpaceTimeCell cell_from_json(const ordered_json& j) {
  if (j.value("format", "") != "dss-cell")
    throw error(errc::io, "not a cell container");
  if (j.value("version", 0) != 1)
    throw error(errc::io, "unsupported cell container version");
  GridSpec g;
  g.lambda = j.at("lambda").get<double>();
  g.n_radial = j.at("n_radial").get<int>();
  g.interp_order = j.at("interp_order").get<int>();
  g.radial_nodes.resize(g.n_radial);
  for (int i = 0; i < g.n_radial; ++i)
    g.radial_nodes[i] = std::pow(g.lambda, static_cast<double>(i) / g.n_radial);
  g.sphere = make_sphere_mesh(j.at("sphere_nz").get<int>(),
                              j.at("sphere_nphi").get<int>());
  SpaceTimeCell c = make_cell(g, j.at("r_min").get<double>(),
                              j.at("r_max").get<double>(),
                              j.at("n_shell").get<int>(),
                              j.at("n_time").get<int>());
  c.name = j.value("name", "");
  const auto& e = j.at("envelope");
  c.envelope.C = e.at("C").get<double>();
  c.envelope.alpha = e.at("alpha").get<double>();
  c.envelope.beta = e.at("beta").get<double>();
  c.envelope.R0 = e.at("R0").get<double>();
  c.envelope.core_bound = e.at("core_bound").get<double>();
  c.envelope.valid = e.at("valid").get<bool>();
  const auto& s = j.at("samples");
  if (s.size() != 3 * c.samples.size())
    throw error(errc::io, "sample array length does not match the cell");
  for (size_t i = 0; i < c.samples.size(); ++i)
    c.samples[i] = Vec3{s[3 * i].get<double>(), s[3 * i + 1].get<double>(),
                        s[3 * i + 2].get<double>()};
  return c;
}

inline void write_json_file(const ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error(errc::io, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io, "cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw error(errc::io, std::string("malformed JSON in ") + path + ": " + e.what());
  }
  return j;
}

/// Flat CSV of the fundamental-annulus samples for plotting.
inline void write_field_csv(const DssField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error(errc::io, "cannot open " + path + " for writing");
  out << "r,dir_x,dir_y,dir_z,u_x,u_y,u_z,speed\n";
  out.precision(12);
  for (int ir = 0; ir < f.grid.n_radial; ++ir)
    for (int ia = 0; ia < f.grid.n_angular(); ++ia) {
      const Vec3 d = f.grid.sphere.direction(ia);
      const Vec3& u = f.sample(ir, ia);
      out << f.grid.radial_nodes[ir] << ',' << d.x << ',' << d.y << ',' << d.z
          << ',' << u.x << ',' << u.y << ',' << u.z << ',' << norm(u) << "\n";
    }
}

inline void write_cell_csv(const SpaceTimeCell& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error(errc::io, "cannot open " + path + " for writing");
  out << "t,r,dir_x,dir_y,dir_z,u_x,u_y,u_z,speed\n";
  out.precision(12);
  for (int it = 0; it < c.n_time(); ++it)
    for (int ir = 0; ir < c.n_shell(); ++ir)
      for (int ia = 0; ia < c.grid.n_angular(); ++ia) {
        const Vec3 d = c.grid.sphere.direction(ia);
        const Vec3& u = c.sample(it, ir, ia);
        out << c.time_nodes[it] << ',' << c.shell_radii[ir] << ',' << d.x
            << ',' << d.y << ',' << d.z << ',' << u.x << ',' << u.y << ','
            << u.z << ',' << norm(u) << "\n";
      }
}

}  // namespace dss

#endif
