#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pstbem/core.hpp"

namespace pstbem {

/// Analytic surface used to project newly created vertices.
struct SurfaceTag {
  enum class Kind { sphere, ellipsoid };
  Kind kind = Kind::sphere;
  double radius = 1.0;
  double a = 1.0, b = 1.0, c = 1.0;

  Vec3 project(const Vec3& p) const {
    if (kind == Kind::sphere) {
      const double n = p.norm();
      return n > 0 ? Vec3(p * (radius / n)) : p;
    }
    Vec3 q(p.x() / a, p.y() / b, p.z() / c);
    const double n = q.norm();
    if (n == 0) return p;
    q /= n;
    return {q.x() * a, q.y() * b, q.z() * c};
  }
};

namespace detail {
struct EdgeKey {
  int lo, hi;
  EdgeKey(int u, int v) : lo(std::min(u, v)), hi(std::max(u, v)) {}
  bool operator<(const EdgeKey& o) const {
    return lo != o.lo ? lo < o.lo : hi < o.hi;
  }
  bool operator==(const EdgeKey& o) const { return lo == o.lo && hi == o.hi; }
};
}  // namespace detail

/// Closed oriented triangulation of the unit-object surface. Immutable after
/// construction; refinement returns a new mesh.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::optional<SurfaceTag> surface;

  /// Index of an overlapping triangle in the mesh this one was refined from
  /// (-1 at level 0).
  std::vector<int> parent;
  /// Conforming-closure bisection partner, or -1 for regularly refined
  /// triangles.
  std::vector<int> green_sibling;

  std::size_t triangle_count() const { return triangles.size(); }
  std::size_t vertex_count() const { return vertices.size(); }

  const Vec3& corner(std::size_t t, int k) const {
    return vertices[static_cast<std::size_t>(triangles[t][k])];
  }

  Vec3 centroid(std::size_t t) const {
    return (corner(t, 0) + corner(t, 1) + corner(t, 2)) / 3.0;
  }

  Vec3 scaled_normal(std::size_t t) const {  // length = 2 * area
    return (corner(t, 1) - corner(t, 0)).cross(corner(t, 2) - corner(t, 0));
  }

  double area(std::size_t t) const { return 0.5 * scaled_normal(t).norm(); }

  Vec3 unit_normal(std::size_t t) const {
    const Vec3 n = scaled_normal(t);
    return n / n.norm();
  }

  double diameter(std::size_t t) const {
    return std::max({(corner(t, 1) - corner(t, 0)).norm(),
                     (corner(t, 2) - corner(t, 1)).norm(),
                     (corner(t, 0) - corner(t, 2)).norm()});
  }

  double max_diameter() const {
    double h = 0;
    for (std::size_t t = 0; t < triangles.size(); ++t) h = std::max(h, diameter(t));
    return h;
  }

  double bounding_box_diagonal() const {
    if (vertices.empty()) return 0;
    Vec3 lo = vertices[0], hi = vertices[0];
    for (const auto& v : vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    if (!vertices.empty())
      h = fnv1a(vertices.data(), vertices.size() * sizeof(Vec3), h);
    if (!triangles.empty())
      h = fnv1a(triangles.data(), triangles.size() * sizeof(triangles[0]), h);
    return h;
  }
};

struct ValidationIssue {
  std::string what;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
  bool ok() const { return issues.empty(); }
};

inline ValidationReport validate(const SurfaceMesh& mesh) {
  ValidationReport report;
  report.vertex_count = mesh.vertex_count();
  report.triangle_count = mesh.triangle_count();
  auto issue = [&report](const std::string& s) { report.issues.push_back({s}); };

  const int nv = static_cast<int>(mesh.vertex_count());
  const double diag = mesh.bounding_box_diagonal();
  const double area_floor = 1e-12 * diag * diag;

  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    bool bad_index = false;
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv) bad_index = true;
    if (bad_index) {
      issue("triangle " + std::to_string(t) + ": vertex index out of range");
      continue;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0]) {
      issue("triangle " + std::to_string(t) + ": repeated vertex");
      continue;
    }
    if (mesh.area(t) < area_floor)
      issue("triangle " + std::to_string(t) + ": degenerate (area below threshold)");
  }
  if (!report.issues.empty()) return report;

  // Each undirected edge must be used exactly twice, once per direction.
  std::map<detail::EdgeKey, std::array<int, 3>> edges;  // {fwd count, bwd count, a triangle}
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int u = tri[k], v = tri[(k + 1) % 3];
      auto& rec = edges[detail::EdgeKey(u, v)];
      ++rec[u < v ? 0 : 1];
      rec[2] = static_cast<int>(t);
    }
  }
  for (const auto& [key, rec] : edges) {
    const int total = rec[0] + rec[1];
    std::ostringstream os;
    if (total == 1) {
      os << "open surface: edge (" << key.lo << "," << key.hi << ") used once";
      issue(os.str());
    } else if (total > 2) {
      os << "non-manifold edge (" << key.lo << "," << key.hi << ") used " << total
         << " times";
      issue(os.str());
    } else if (rec[0] != 1 || rec[1] != 1) {
      os << "inconsistent orientation at triangle " << rec[2] << ": edge (" << key.lo
         << "," << key.hi << ") traversed twice in the same direction";
      issue(os.str());
    }
  }
  if (!report.issues.empty()) return report;

  double signed_volume = 0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    signed_volume +=
        mesh.corner(t, 0).dot(mesh.corner(t, 1).cross(mesh.corner(t, 2))) / 6.0;
  if (!(signed_volume > 0))
    issue("normals point inward (signed volume " + std::to_string(signed_volume) + ")");
  return report;
}

inline void require_valid(const SurfaceMesh& mesh) {
  const ValidationReport report = validate(mesh);
  if (!report.ok()) throw MeshError(report.issues.front().what);
}

/// Divergence-theorem volume of the enclosed solid.
inline double enclosed_volume(const SurfaceMesh& mesh) {
  std::map<detail::EdgeKey, int> edges;
  for (const auto& tri : mesh.triangles)
    for (int k = 0; k < 3; ++k) ++edges[detail::EdgeKey(tri[k], tri[(k + 1) % 3])];
  for (const auto& [key, count] : edges)
    if (count != 2)
      throw MeshError("enclosed_volume: mesh is not watertight at edge (" +
                      std::to_string(key.lo) + "," + std::to_string(key.hi) + ")");
  double volume = 0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    volume += mesh.corner(t, 0).dot(mesh.corner(t, 1).cross(mesh.corner(t, 2))) / 6.0;
  return volume;
}

inline double surface_area(const SurfaceMesh& mesh) {
  double a = 0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) a += mesh.area(t);
  return a;
}

/// Centroid of the enclosed solid, |B|^-1 int_B x dV, via the divergence
/// theorem; the edge-midpoint rule is exact for the quadratic integrand.
inline Vec3 volume_centroid(const SurfaceMesh& mesh) {
  const double volume = enclosed_volume(mesh);
  Vec3 first_moment = Vec3::Zero();
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec3 n = mesh.scaled_normal(t);  // unit normal times 2 area
    Vec3 m = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      const Vec3 mid = 0.5 * (mesh.corner(t, k) + mesh.corner(t, (k + 1) % 3));
      m += mid.cwiseProduct(mid);
    }
    first_moment += (1.0 / 12.0) * m.cwiseProduct(n);
  }
  return first_moment / volume;
}

namespace detail {

inline Vec3 maybe_project(const std::optional<SurfaceTag>& tag, const Vec3& p) {
  return tag ? tag->project(p) : p;
}

}  // namespace detail

inline SurfaceMesh uniform_refine(const SurfaceMesh& mesh) {
  SurfaceMesh out;
  out.vertices = mesh.vertices;
  out.surface = mesh.surface;
  out.triangles.reserve(4 * mesh.triangle_count());
  out.parent.reserve(4 * mesh.triangle_count());

  std::map<detail::EdgeKey, int> midpoint;
  auto mid = [&](int u, int v) {
    const detail::EdgeKey key(u, v);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Vec3 m = detail::maybe_project(
        mesh.surface, 0.5 * (mesh.vertices[static_cast<std::size_t>(u)] +
                             mesh.vertices[static_cast<std::size_t>(v)]));
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(m);
    midpoint.emplace(key, id);
    return id;
  };

  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto [a, b, c] = mesh.triangles[t];
    const int mab = mid(a, b), mbc = mid(b, c), mca = mid(c, a);
    const int p = static_cast<int>(t);
    out.triangles.push_back({a, mab, mca});
    out.triangles.push_back({mab, b, mbc});
    out.triangles.push_back({mca, mbc, c});
    out.triangles.push_back({mab, mbc, mca});
    out.parent.insert(out.parent.end(), {p, p, p, p});
  }
  out.green_sibling.assign(out.triangle_count(), -1);
  return out;
}

namespace detail {

/// One triangle of the regular (green-dissolved) mesh.
struct RedTriangle {
  std::array<int, 3> verts;
  int source;             // input-mesh triangle overlapping this one
  int presplit_edge = -1;  // local edge k already carrying a midpoint
  int presplit_mid = -1;
};

inline int cyclic_successor(const std::array<int, 3>& tri, int v) {
  for (int k = 0; k < 3; ++k)
    if (tri[k] == v) return tri[(k + 1) % 3];
  return -1;
}

}  // namespace detail

/// Red refinement of the marked triangles with green conformity closure.
/// Green triangles are dissolved back into their parents before refining, so
/// bisections never stack. The closure promotes a triangle to red when two of
/// its edges are split, or when a half of an already-split edge is split again
/// by a finer neighbour; promoted children re-enter the worklist until the
/// mesh is conforming.
inline SurfaceMesh local_refine(const SurfaceMesh& mesh,
                                const std::vector<int>& marked) {
  if (marked.empty()) return mesh;
  for (int t : marked)
    if (t < 0 || t >= static_cast<int>(mesh.triangle_count()))
      throw MeshError("local_refine: marked triangle " + std::to_string(t) +
                      " out of range");

  const bool has_green =
      !mesh.green_sibling.empty() &&
      std::any_of(mesh.green_sibling.begin(), mesh.green_sibling.end(),
                  [](int s) { return s >= 0; });

  // Dissolve green pairs into their parent triangles.
  struct WorkTriangle {
    std::array<int, 3> verts;
    int source;
    bool dead = false;
  };
  std::vector<WorkTriangle> work;
  std::vector<int> work_of(mesh.triangle_count(), -1);
  std::map<detail::EdgeKey, int> split;  // edge -> existing midpoint vertex
  work.reserve(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const int sib = has_green ? mesh.green_sibling[t] : -1;
    if (sib < 0) {
      work_of[t] = static_cast<int>(work.size());
      work.push_back({mesh.triangles[t], static_cast<int>(t), false});
      continue;
    }
    if (static_cast<int>(t) > sib) continue;  // handled with the partner
    const auto& ta = mesh.triangles[t];
    const auto& tb = mesh.triangles[static_cast<std::size_t>(sib)];
    // Children are (a, m, c) and (m, b, c); the shared vertices are {m, c}.
    int a = -1, b = -1;
    for (int k = 0; k < 3; ++k) {
      if (ta[k] != tb[0] && ta[k] != tb[1] && ta[k] != tb[2]) a = ta[k];
      if (tb[k] != ta[0] && tb[k] != ta[1] && tb[k] != ta[2]) b = tb[k];
    }
    const int m = detail::cyclic_successor(ta, a);
    int c = -1;
    for (int k = 0; k < 3; ++k)
      if (ta[k] != a && ta[k] != m) c = ta[k];
    if (a < 0 || b < 0 || m < 0 || c < 0)
      throw MeshError("local_refine: inconsistent green pair at triangle " +
                      std::to_string(t));
    const int idx = static_cast<int>(work.size());
    work_of[t] = idx;
    work_of[static_cast<std::size_t>(sib)] = idx;
    work.push_back({{a, b, c}, static_cast<int>(t), false});
    split.emplace(detail::EdgeKey(a, b), m);
  }

  SurfaceMesh out;
  out.vertices = mesh.vertices;
  out.surface = mesh.surface;

  auto midpoint_of = [&split](int u, int v) {
    const auto it = split.find(detail::EdgeKey(u, v));
    return it == split.end() ? -1 : it->second;
  };
  auto split_edge = [&](int u, int v) {
    const detail::EdgeKey key(u, v);
    auto it = split.find(key);
    if (it != split.end()) return it->second;
    const Vec3 m = detail::maybe_project(
        mesh.surface, 0.5 * (out.vertices[static_cast<std::size_t>(key.lo)] +
                             out.vertices[static_cast<std::size_t>(key.hi)]));
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(m);
    split.emplace(key, id);
    return id;
  };
  auto promote = [&](std::size_t w) {
    const auto [a, b, c] = work[w].verts;
    const int mab = split_edge(a, b);
    const int mbc = split_edge(b, c);
    const int mca = split_edge(c, a);
    const int source = work[w].source;
    work[w].dead = true;
    work.push_back({{a, mab, mca}, source, false});
    work.push_back({{mab, b, mbc}, source, false});
    work.push_back({{mca, mbc, c}, source, false});
    work.push_back({{mab, mbc, mca}, source, false});
  };

  std::vector<char> forced(work.size(), 0);
  for (int t : marked) forced[static_cast<std::size_t>(work_of[static_cast<std::size_t>(t)])] = 1;

  // Worklist closure. A triangle is refined red when it is marked, has two
  // split edges, or its single split edge carries further splits on a half.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t w = 0; w < work.size(); ++w) {
      if (work[w].dead) continue;
      const auto [a, b, c] = work[w].verts;
      const int mab = midpoint_of(a, b), mbc = midpoint_of(b, c), mca = midpoint_of(c, a);
      const int n_split = (mab >= 0) + (mbc >= 0) + (mca >= 0);
      bool refine = (w < forced.size() && forced[w]) || n_split >= 2;
      if (!refine && n_split == 1) {
        const int u = mab >= 0 ? a : (mbc >= 0 ? b : c);
        const int v = mab >= 0 ? b : (mbc >= 0 ? c : a);
        const int m = std::max({mab, mbc, mca});
        refine = midpoint_of(u, m) >= 0 || midpoint_of(m, v) >= 0;
      }
      if (refine) {
        promote(w);
        changed = true;
      }
    }
  }

  for (const auto& wt : work) {
    if (wt.dead) continue;
    const auto [a, b, c] = wt.verts;
    const int mab = midpoint_of(a, b), mbc = midpoint_of(b, c), mca = midpoint_of(c, a);
    const int n_split = (mab >= 0) + (mbc >= 0) + (mca >= 0);
    const int p = wt.source;
    if (n_split == 0) {
      out.triangles.push_back(wt.verts);
      out.parent.push_back(p);
      out.green_sibling.push_back(-1);
    } else if (n_split == 1) {
      const int first = static_cast<int>(out.triangles.size());
      if (mab >= 0) {
        out.triangles.push_back({a, mab, c});
        out.triangles.push_back({mab, b, c});
      } else if (mbc >= 0) {
        out.triangles.push_back({b, mbc, a});
        out.triangles.push_back({mbc, c, a});
      } else {
        out.triangles.push_back({c, mca, b});
        out.triangles.push_back({mca, a, b});
      }
      out.parent.insert(out.parent.end(), {p, p});
      out.green_sibling.insert(out.green_sibling.end(), {first + 1, first});
    } else {
      throw MeshError("local_refine: conformity closure failed to converge");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interchange formats: OFF text and a JSON mesh schema
// ---------------------------------------------------------------------------
namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline void export_off(const SurfaceMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_off: cannot open " + path);
  out << "OFF\n"
      << mesh.vertex_count() << " " << mesh.triangle_count() << " 0\n";
  for (const auto& v : mesh.vertices)
    out << detail::format_double(v.x()) << " " << detail::format_double(v.y()) << " "
        << detail::format_double(v.z()) << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  if (!out) throw IoError("export_off: write failed for " + path);
}

inline SurfaceMesh import_off(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("import_off: cannot open " + path);
  std::string token;
  if (!(in >> token) || token != "OFF")
    throw IoError("import_off: missing OFF header in " + path);
  std::size_t nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne)) throw IoError("import_off: malformed counts in " + path);
  SurfaceMesh mesh;
  mesh.vertices.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!(in >> mesh.vertices[i].x() >> mesh.vertices[i].y() >> mesh.vertices[i].z()))
      throw IoError("import_off: malformed vertex " + std::to_string(i));
  }
  mesh.triangles.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    int arity = 0;
    if (!(in >> arity)) throw IoError("import_off: malformed face " + std::to_string(i));
    if (arity != 3)
      throw IoError("import_off: face " + std::to_string(i) + " is not a triangle");
    if (!(in >> mesh.triangles[i][0] >> mesh.triangles[i][1] >> mesh.triangles[i][2]))
      throw IoError("import_off: malformed face " + std::to_string(i));
  }
  mesh.parent.assign(mesh.triangle_count(), -1);
  mesh.green_sibling.assign(mesh.triangle_count(), -1);
  return mesh;
}

inline nlohmann::ordered_json mesh_to_json(const SurfaceMesh& mesh) {
  nlohmann::ordered_json j;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) verts.push_back({v.x(), v.y(), v.z()});
  auto& tris = j["triangles"] = nlohmann::json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  if (mesh.surface) {
    auto& s = j["surface"];
    if (mesh.surface->kind == SurfaceTag::Kind::sphere) {
      s["type"] = "sphere";
      s["radius"] = mesh.surface->radius;
    } else {
      s["type"] = "ellipsoid";
      s["a"] = mesh.surface->a;
      s["b"] = mesh.surface->b;
      s["c"] = mesh.surface->c;
    }
  }
  return j;
}

inline SurfaceMesh mesh_from_json(const nlohmann::json& j) {
  SurfaceMesh mesh;
  for (const auto& v : j.at("vertices"))
    mesh.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>(),
                             v.at(2).get<double>()});
  for (const auto& t : j.at("triangles"))
    mesh.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
  if (j.contains("surface")) {
    const auto& s = j.at("surface");
    SurfaceTag tag;
    const std::string type = s.at("type").get<std::string>();
    if (type == "sphere") {
      tag.kind = SurfaceTag::Kind::sphere;
      tag.radius = s.at("radius").get<double>();
    } else if (type == "ellipsoid") {
      tag.kind = SurfaceTag::Kind::ellipsoid;
      tag.a = s.at("a").get<double>();
      tag.b = s.at("b").get<double>();
      tag.c = s.at("c").get<double>();
    } else {
      throw IoError("mesh_from_json: unknown surface type '" + type + "'");
    }
    mesh.surface = tag;
  }
  mesh.parent.assign(mesh.triangle_count(), -1);
  mesh.green_sibling.assign(mesh.triangle_count(), -1);
  return mesh;
}

inline void export_json(const SurfaceMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_json: cannot open " + path);
  out << mesh_to_json(mesh).dump(2) << "\n";
  if (!out) throw IoError("export_json: write failed for " + path);
}

inline SurfaceMesh import_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("import_json: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("import_json: " + std::string(e.what()));
  }
  return mesh_from_json(j);
}

/// Imports an OFF or JSON mesh (by extension) and validates every invariant.
inline SurfaceMesh import_mesh(const std::string& path) {
  SurfaceMesh mesh;
  if (detail::ends_with(path, ".off") || detail::ends_with(path, ".OFF"))
    mesh = import_off(path);
  else if (detail::ends_with(path, ".json"))
    mesh = import_json(path);
  else
    throw IoError("import_mesh: unknown format for " + path +
                  " (expected .off or .json)");
  require_valid(mesh);
  return mesh;
}

inline void export_mesh(const SurfaceMesh& mesh, const std::string& path) {
  if (detail::ends_with(path, ".off") || detail::ends_with(path, ".OFF"))
    export_off(mesh, path);
  else if (detail::ends_with(path, ".json"))
    export_json(mesh, path);
  else
    throw IoError("export_mesh: unknown format for " + path +
                  " (expected .off or .json)");
}

// ---------------------------------------------------------------------------
// Primitive geometries
// ---------------------------------------------------------------------------

struct GeometrySpec {
  enum class Kind { sphere, ellipsoid, cube, lshape, tetrahedron, key, external };
  Kind kind = Kind::sphere;
  double radius = 1.0;
  double a = 1.0, b = 1.0, c = 1.0;
  std::array<Vec3, 4> tet{};
  std::string path;
  int resolution = 0;

  static GeometrySpec sphere(double radius, int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::sphere;
    s.radius = radius;
    s.resolution = resolution;
    return s;
  }
  static GeometrySpec ellipsoid(double a, double b, double c, int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::ellipsoid;
    s.a = a;
    s.b = b;
    s.c = c;
    s.resolution = resolution;
    return s;
  }
  static GeometrySpec cube(int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::cube;
    s.resolution = resolution;
    return s;
  }
  static GeometrySpec lshape(int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::lshape;
    s.resolution = resolution;
    return s;
  }
  static GeometrySpec tetrahedron(const std::array<Vec3, 4>& v, int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::tetrahedron;
    s.tet = v;
    s.resolution = resolution;
    return s;
  }
  static GeometrySpec key(int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::key;
    s.resolution = resolution;
    return s;
  }
  static GeometrySpec external(const std::string& path, int resolution = 0) {
    GeometrySpec s;
    s.kind = Kind::external;
    s.path = path;
    s.resolution = resolution;
    return s;
  }
};

namespace detail {

inline SurfaceMesh icosahedron() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  SurfaceMesh mesh;
  mesh.vertices = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                   {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                   {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return mesh;
}

/// Triangulated prism over a simple polygon in the xy-plane (CCW loop), with
/// caps at z0 and z1. Ear clipping keeps the boundary edges intact so caps
/// and walls are conforming.
inline SurfaceMesh prism_over_polygon(const std::vector<std::array<double, 2>>& loop,
                                      double z0, double z1) {
  const int n = static_cast<int>(loop.size());
  SurfaceMesh mesh;
  mesh.vertices.reserve(2 * static_cast<std::size_t>(n));
  for (const auto& p : loop) mesh.vertices.push_back({p[0], p[1], z0});
  for (const auto& p : loop) mesh.vertices.push_back({p[0], p[1], z1});

  // Ear clipping on the CCW loop.
  std::vector<int> ring(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ring[static_cast<std::size_t>(i)] = i;
  std::vector<std::array<int, 3>> cap;
  auto cross2 = [&](int i, int j, int k) {
    const auto &p = loop[static_cast<std::size_t>(i)],
               &q = loop[static_cast<std::size_t>(j)],
               &r = loop[static_cast<std::size_t>(k)];
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
  };
  auto inside = [&](int i, int j, int k, int v) {
    const double d1 = cross2(i, j, v), d2 = cross2(j, k, v), d3 = cross2(k, i, v);
    return d1 >= 0 && d2 >= 0 && d3 >= 0;
  };
  while (ring.size() > 3) {
    bool clipped = false;
    for (std::size_t s = 0; s < ring.size(); ++s) {
      const int i = ring[(s + ring.size() - 1) % ring.size()];
      const int j = ring[s];
      const int k = ring[(s + 1) % ring.size()];
      if (cross2(i, j, k) <= 1e-14) continue;  // reflex or collinear corner
      bool ear = true;
      for (int v : ring) {
        if (v == i || v == j || v == k) continue;
        if (inside(i, j, k, v)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      cap.push_back({i, j, k});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(s));
      clipped = true;
      break;
    }
    if (!clipped) throw MeshError("prism_over_polygon: ear clipping failed");
  }
  cap.push_back({ring[0], ring[1], ring[2]});

  for (const auto& [i, j, k] : cap) mesh.triangles.push_back({i, k, j});  // bottom, -z
  for (const auto& [i, j, k] : cap) mesh.triangles.push_back({i + n, j + n, k + n});
  for (int i = 0; i < n; ++i) {  // side walls
    const int j = (i + 1) % n;
    mesh.triangles.push_back({i, j, j + n});
    mesh.triangles.push_back({i, j + n, i + n});
  }
  return mesh;
}

inline SurfaceMesh box(const Vec3& lo, const Vec3& hi) {
  return prism_over_polygon(
      {{lo.x(), lo.y()}, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {lo.x(), hi.y()}},
      lo.z(), hi.z());
}

inline SurfaceMesh lshape_base() {
  // Prism over the L cross-section [0,7.8]x[0,2] U [0,2.2]x[2,5.6], z in [0,1.5].
  return prism_over_polygon(
      {{0, 0}, {7.8, 0}, {7.8, 2}, {2.2, 2}, {2.2, 5.6}, {0, 5.6}}, 0.0, 1.5);
}

inline SurfaceMesh key_base() {
  // Bow [-7,7]x[3,15], shoulder [-4,4]x[0,4] and blade [-3.25,3.25]x[-19,0],
  // all z in [-1.25,1.25]. Two rectangular notches of depth 1.5 and height 2
  // are cut from the +x side of the blade.
  const std::vector<std::array<double, 2>> outline = {
      {-3.25, -19}, {3.25, -19},
      {3.25, -16},  {1.75, -16}, {1.75, -14}, {3.25, -14},
      {3.25, -12},  {1.75, -12}, {1.75, -10}, {3.25, -10},
      {3.25, 0},    {4, 0},      {4, 3},      {7, 3},
      {7, 15},      {-7, 15},    {-7, 3},     {-4, 3},
      {-4, 0},      {-3.25, 0}};
  return prism_over_polygon(outline, -1.25, 1.25);
}

inline SurfaceMesh tetrahedron_base(const std::array<Vec3, 4>& v) {
  const double det = (v[1] - v[0]).cross(v[2] - v[0]).dot(v[3] - v[0]);
  if (std::abs(det) < 1e-12)
    throw MeshError("tetrahedron: vertices are coplanar");
  SurfaceMesh mesh;
  mesh.vertices = {v[0], v[1], v[2], v[3]};
  if (det > 0)
    mesh.triangles = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  else
    mesh.triangles = {{0, 1, 2}, {0, 3, 1}, {1, 3, 2}, {0, 2, 3}};
  return mesh;
}

}  // namespace detail

inline SurfaceMesh build_primitive(const GeometrySpec& spec, int resolution);

inline SurfaceMesh build_primitive(const GeometrySpec& spec) {
  return build_primitive(spec, spec.resolution);
}

inline SurfaceMesh build_primitive(const GeometrySpec& spec, int resolution) {
  if (resolution < 0) throw MeshError("build_primitive: resolution must be >= 0");
  SurfaceMesh mesh;
  switch (spec.kind) {
    case GeometrySpec::Kind::sphere: {
      if (!(spec.radius > 0)) throw MeshError("sphere: radius must be positive");
      mesh = detail::icosahedron();
      mesh.surface = SurfaceTag{SurfaceTag::Kind::sphere, spec.radius, 1, 1, 1};
      for (auto& v : mesh.vertices) v = mesh.surface->project(v);
      break;
    }
    case GeometrySpec::Kind::ellipsoid: {
      if (!(spec.c > 0 && spec.c <= spec.b && spec.b <= spec.a))
        throw MeshError("ellipsoid: axes must satisfy 0 < c <= b <= a");
      mesh = detail::icosahedron();
      mesh.surface =
          SurfaceTag{SurfaceTag::Kind::ellipsoid, 1, spec.a, spec.b, spec.c};
      for (auto& v : mesh.vertices) v = mesh.surface->project(v);
      break;
    }
    case GeometrySpec::Kind::cube:
      mesh = detail::box({0, 0, 0}, {1, 1, 1});
      break;
    case GeometrySpec::Kind::lshape:
      mesh = detail::lshape_base();
      break;
    case GeometrySpec::Kind::tetrahedron:
      mesh = detail::tetrahedron_base(spec.tet);
      break;
    case GeometrySpec::Kind::key:
      mesh = detail::key_base();
      break;
    case GeometrySpec::Kind::external:
      mesh = import_mesh(spec.path);
      break;
  }
  mesh.parent.assign(mesh.triangle_count(), -1);
  mesh.green_sibling.assign(mesh.triangle_count(), -1);
  require_valid(mesh);
  for (int s = 0; s < resolution; ++s) mesh = uniform_refine(mesh);
  return mesh;
}

/// Vertices of the benchmark tetrahedron.
inline std::array<Vec3, 4> benchmark_tetrahedron_vertices() {
  return {Vec3{0, 0, 0}, Vec3{7, 0, 0}, Vec3{5.5, 4.6, 0}, Vec3{3.3, 2.0, 5.0}};
}

}  // namespace pstbem
