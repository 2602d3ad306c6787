// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/dfn_io.hpp"

#include "dfnpart/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dfnpart {

namespace {

using nlohmann::json;

json point_json(Vec3 p) { return json::array({p.x, p.y, p.z}); }

const json& field(const json& obj, const char* key, const std::string& path)
{
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(path + ": missing field \"" + key + "\"");
  return obj.at(key);
}

Vec3 parse_point(const json& j, const std::string& path)
{
  if (!j.is_array() || j.size() != 3 || !std::all_of(j.begin(), j.end(), [](const json& x) { return x.is_number(); }))
    throw ParseError(path + ": expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

int parse_int(const json& j, const std::string& path)
{
  if (!j.is_number_integer())
    throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

template <std::size_t N>
std::array<int, N> parse_ints(const json& j, const std::string& path)
{
  if (!j.is_array() || j.size() != N)
    throw ParseError(path + ": expected an array of " + std::to_string(N) + " integers");
  std::array<int, N> out{};
  for (std::size_t i = 0; i < N; ++i)
    out[i] = parse_int(j[i], path + "[" + std::to_string(i) + "]");
  return out;
}

const json& array_field(const json& obj, const char* key, const std::string& path)
{
  const json& a = field(obj, key, path);
  if (!a.is_array())
    throw ParseError(path + "." + key + ": expected an array");
  return a;
}

} // namespace

std::string dfn_to_string(const Dfn& dfn)
{
  json root;
  root["eps_geom"] = dfn.eps_geom();
  json fr = json::array();
  for (const Fracture& f : dfn.fractures()) {
    json verts = json::array();
    for (const Vec3& p : f.vertices)
      verts.push_back(point_json(p));
    fr.push_back({{"id", f.id}, {"vertices", verts}, {"transmissivity", f.transmissivity}});
  }
  root["fractures"] = fr;
  json tr = json::array();
  for (const Trace& t : dfn.traces())
    tr.push_back({{"id", t.id},
                  {"endpoints", json::array({point_json(t.endpoints[0]), point_json(t.endpoints[1])})},
                  {"it_pair", json::array({t.it_pair.first, t.it_pair.second})}});
  root["traces"] = tr;
  json cps = json::array();
  for (const CrossPoint& c : dfn.cross_points())
    cps.push_back({{"id", c.id},
                   {"point", point_json(c.point)},
                   {"icp_triple", c.icp_triple},
                   {"incident_traces", c.incident_traces}});
  root["cross_points"] = cps;
  return root.dump(1) + "\n";
}

Dfn dfn_from_string(std::string_view text)
{
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  }
  catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
  if (!root.is_object())
    throw ParseError("top level: expected an object");

  const json& jf = array_field(root, "fractures", "top level");
  std::vector<std::vector<Vec3>> polygons;
  std::vector<double> transmissivity;
  for (std::size_t i = 0; i < jf.size(); ++i) {
    const std::string path = "fractures[" + std::to_string(i) + "]";
    const int id = parse_int(field(jf[i], "id", path), path + ".id");
    if (id != static_cast<int>(i) + 1)
      throw ParseError(path + ".id: expected " + std::to_string(i + 1) + " (ids must be contiguous from 1)");
    const json& jv = array_field(jf[i], "vertices", path);
    std::vector<Vec3> verts;
    for (std::size_t k = 0; k < jv.size(); ++k)
      verts.push_back(parse_point(jv[k], path + ".vertices[" + std::to_string(k) + "]"));
    polygons.push_back(std::move(verts));
    double tm = 1.0;
    if (jf[i].contains("transmissivity")) {
      if (!jf[i]["transmissivity"].is_number())
        throw ParseError(path + ".transmissivity: expected a number");
      tm = jf[i]["transmissivity"].get<double>();
    }
    transmissivity.push_back(tm);
  }

  double eps = default_eps_geom(polygons);
  if (root.contains("eps_geom")) {
    if (!root["eps_geom"].is_number() || !(root["eps_geom"].get<double>() > 0.0))
      throw ParseError("eps_geom: expected a positive number");
    eps = root["eps_geom"].get<double>();
  }
  std::vector<Fracture> fractures;
  for (std::size_t i = 0; i < polygons.size(); ++i)
    fractures.push_back(make_fracture(static_cast<int>(i) + 1, polygons[i], transmissivity[i], eps));

  if (!root.contains("traces")) {
    if (root.contains("cross_points"))
      throw ParseError("cross_points given without traces");
    return build_dfn(std::move(fractures), eps);
  }

  const json& jt = array_field(root, "traces", "top level");
  std::vector<Trace> traces;
  for (std::size_t i = 0; i < jt.size(); ++i) {
    const std::string path = "traces[" + std::to_string(i) + "]";
    Trace t;
    t.id = parse_int(field(jt[i], "id", path), path + ".id");
    const json& je = array_field(jt[i], "endpoints", path);
    if (je.size() != 2)
      throw ParseError(path + ".endpoints: expected 2 points");
    t.endpoints = {parse_point(je[0], path + ".endpoints[0]"), parse_point(je[1], path + ".endpoints[1]")};
    const auto pair = parse_ints<2>(field(jt[i], "it_pair", path), path + ".it_pair");
    t.it_pair = {pair[0], pair[1]};
    traces.push_back(t);
  }

  std::vector<CrossPoint> cps;
  if (root.contains("cross_points")) {
    const json& jc = array_field(root, "cross_points", "top level");
    for (std::size_t i = 0; i < jc.size(); ++i) {
      const std::string path = "cross_points[" + std::to_string(i) + "]";
      CrossPoint c;
      c.id = parse_int(field(jc[i], "id", path), path + ".id");
      c.point = parse_point(field(jc[i], "point", path), path + ".point");
      c.icp_triple = parse_ints<3>(field(jc[i], "icp_triple", path), path + ".icp_triple");
      c.incident_traces = parse_ints<3>(field(jc[i], "incident_traces", path), path + ".incident_traces");
      cps.push_back(c);
    }
  }
  else {
    cps = detect_cross_points(fractures, traces, eps);
  }
  return Dfn(std::move(fractures), std::move(traces), std::move(cps), eps);
}

Dfn load_dfn(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return dfn_from_string(ss.str());
  }
  catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_dfn(const Dfn& dfn, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << dfn_to_string(dfn);
}

} // namespace dfnpart
