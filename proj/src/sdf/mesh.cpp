#include "graspd/sdf/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "graspd/errors.hpp"

namespace graspd::sdf {

void TriMesh::bounding_box(Vec3d& mn, Vec3d& mx) const {
  if (vertices.empty()) throw ValidationError("bounding_box: empty mesh");
  mn = mx = vertices[0];
  for (const Vec3d& v : vertices) {
    mn.x = std::min(mn.x, v.x); mn.y = std::min(mn.y, v.y); mn.z = std::min(mn.z, v.z);
    mx.x = std::max(mx.x, v.x); mx.y = std::max(mx.y, v.y); mx.z = std::max(mx.z, v.z);
  }
}

namespace {

int parse_obj_index(const std::string& token, std::size_t vertex_count,
                    const std::string& path) {
  // "f 3", "f 3/1", "f 3//2", "f 3/1/2" all reference vertex 3.
  std::size_t slash = token.find('/');
  std::string head = slash == std::string::npos ? token : token.substr(0, slash);
  long idx = 0;
  try {
    idx = std::stol(head);
  } catch (const std::exception&) {
    throw ValidationError(path + ": malformed face index '" + token + "'");
  }
  if (idx < 0) idx = static_cast<long>(vertex_count) + idx + 1;  // negative = relative
  if (idx < 1 || idx > static_cast<long>(vertex_count))
    throw ValidationError(path + ": face index " + head + " out of range");
  return static_cast<int>(idx - 1);
}

}  // namespace

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OBJ file: " + path);
  TriMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3d v;
      if (!(ss >> v.x >> v.y >> v.z))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string t;
      while (ss >> t) tokens.push_back(t);
      if (tokens.size() != 3)
        throw ValidationError(path + ":" + std::to_string(line_no) +
                              ": only triangular faces are supported");
      std::array<int, 3> f;
      for (int i = 0; i < 3; ++i)
        f[i] = parse_obj_index(tokens[i], mesh.vertices.size(), path);
      mesh.faces.push_back(f);
    }
    // v/vt/vn/usemtl/o/g/s/# silently ignored
  }
  if (mesh.vertices.empty() || mesh.faces.empty())
    throw ValidationError(path + ": no triangles found");
  return mesh;
}

void save_obj(const std::string& path, const TriMesh& mesh,
              const std::vector<std::pair<std::string, std::size_t>>& groups) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write OBJ file: " + path);
  out.precision(9);
  for (const Vec3d& v : mesh.vertices)
    out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  std::size_t gi = 0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    while (gi < groups.size() && groups[gi].second == f) {
      out << "g " << groups[gi].first << '\n';
      ++gi;
    }
    const auto& face = mesh.faces[f];
    out << "f " << face[0] + 1 << ' ' << face[1] + 1 << ' ' << face[2] + 1 << '\n';
  }
  // Trailing empty groups still get their marker.
  while (gi < groups.size() && groups[gi].second >= mesh.faces.size()) {
    out << "g " << groups[gi].first << '\n';
    ++gi;
  }
  if (!out) throw IoError("failed while writing OBJ file: " + path);
}

TriMesh make_icosphere(double radius, int subdivisions) {
  if (radius <= 0.0) throw ValidationError("icosphere radius must be positive");
  if (subdivisions < 0 || subdivisions > 6)
    throw ValidationError("icosphere subdivisions out of range");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3d& v : verts) v = v / norm(v);

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3d m = (verts[a] + verts[b]) * 0.5;
      m = m / norm(m);
      verts.push_back(m);
      int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }

  TriMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const Vec3d& v : verts) mesh.vertices.push_back(v * radius);
  mesh.faces = std::move(faces);
  return mesh;
}

TriMesh make_box_mesh(const Vec3d& h) {
  if (h.x <= 0.0 || h.y <= 0.0 || h.z <= 0.0)
    throw ValidationError("box half extents must be positive");
  TriMesh mesh;
  for (int corner = 0; corner < 8; ++corner)
    mesh.vertices.push_back({(corner & 1) ? h.x : -h.x, (corner & 2) ? h.y : -h.y,
                             (corner & 4) ? h.z : -h.z});
  // Outward-oriented (counter-clockwise from outside).
  mesh.faces = {{0, 2, 3}, {0, 3, 1},   // -z
                {4, 5, 7}, {4, 7, 6},   // +z
                {0, 1, 5}, {0, 5, 4},   // -y
                {2, 6, 7}, {2, 7, 3},   // +y
                {0, 4, 6}, {0, 6, 2},   // -x
                {1, 3, 7}, {1, 7, 5}};  // +x
  return mesh;
}

}  // namespace graspd::sdf
