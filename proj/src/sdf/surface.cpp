#include "graspd/sdf/surface.hpp"

#include <cstdint>
#include <unordered_map>

namespace graspd::sdf {

namespace {

// Six tetrahedra per cube sharing the 0-7 main diagonal; all positively
// oriented so triangle winding is consistent.
constexpr int kTets[6][4] = {{0, 5, 1, 7}, {0, 1, 3, 7}, {0, 3, 2, 7},
                             {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}};

struct EdgeKeyHash {
  std::size_t operator()(std::uint64_t k) const { return std::hash<std::uint64_t>{}(k); }
};

}  // namespace

TriMesh extract_level_set(const SdfGrid& grid, double iso) {
  const auto& dims = grid.dims();
  TriMesh mesh;
  std::unordered_map<std::uint64_t, int, EdgeKeyHash> edge_vertex;

  auto node_id = [&](int i, int j, int k) -> std::uint64_t {
    return static_cast<std::uint64_t>(i) +
           static_cast<std::uint64_t>(dims[0]) *
               (static_cast<std::uint64_t>(j) + static_cast<std::uint64_t>(dims[1]) * k);
  };

  // One interpolated vertex per lattice edge, keyed by the (ordered) node-id
  // pair so shared edges reuse the exact same vertex.
  auto edge_point = [&](std::uint64_t na, double va, Vec3d pa, std::uint64_t nb,
                        double vb, Vec3d pb) -> int {
    if (na > nb) {
      std::swap(na, nb);
      std::swap(va, vb);
      std::swap(pa, pb);
    }
    std::uint64_t key = (na << 32) | nb;  // node ids stay well under 2^32
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    double t = (iso - va) / (vb - va);
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    Vec3d p = pa + (pb - pa) * t;
    mesh.vertices.push_back(grid.pose().apply(p));
    int idx = static_cast<int>(mesh.vertices.size()) - 1;
    edge_vertex.emplace(key, idx);
    return idx;
  };

  int corner_off[8][3];
  for (int c = 0; c < 8; ++c) {
    corner_off[c][0] = c & 1;
    corner_off[c][1] = (c >> 1) & 1;
    corner_off[c][2] = (c >> 2) & 1;
  }

  for (int k = 0; k + 1 < dims[2]; ++k) {
    for (int j = 0; j + 1 < dims[1]; ++j) {
      for (int i = 0; i + 1 < dims[0]; ++i) {
        double cv[8];
        Vec3d cp[8];
        std::uint64_t cid[8];
        for (int c = 0; c < 8; ++c) {
          int ci = i + corner_off[c][0], cj = j + corner_off[c][1],
              ck = k + corner_off[c][2];
          cv[c] = grid.at(ci, cj, ck);
          cp[c] = grid.node_position(ci, cj, ck);
          cid[c] = node_id(ci, cj, ck);
        }
        for (const auto& tet : kTets) {
          int a = tet[0], b = tet[1], c = tet[2], d = tet[3];
          bool neg[4] = {cv[a] < iso, cv[b] < iso, cv[c] < iso, cv[d] < iso};
          int inside = neg[0] + neg[1] + neg[2] + neg[3];
          if (inside == 0 || inside == 4) continue;

          auto ev = [&](int u, int v) {
            return edge_point(cid[u], cv[u], cp[u], cid[v], cv[v], cp[v]);
          };

          // Orient by putting the "inside" vertices first.
          int in[4], out[4], ni = 0, no = 0;
          int verts[4] = {a, b, c, d};
          for (int v : verts) (cv[v] < iso ? in[ni++] : out[no++]) = v;

          if (inside == 1) {
            mesh.faces.push_back({ev(in[0], out[0]), ev(in[0], out[1]), ev(in[0], out[2])});
          } else if (inside == 3) {
            mesh.faces.push_back({ev(out[0], in[0]), ev(out[0], in[2]), ev(out[0], in[1])});
          } else {
            int v00 = ev(in[0], out[0]), v01 = ev(in[0], out[1]);
            int v10 = ev(in[1], out[0]), v11 = ev(in[1], out[1]);
            mesh.faces.push_back({v00, v10, v11});
            mesh.faces.push_back({v00, v11, v01});
          }
        }
      }
    }
  }
  return mesh;
}

}  // namespace graspd::sdf
