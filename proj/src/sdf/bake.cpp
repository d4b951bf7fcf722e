#include "graspd/sdf/bake.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "graspd/errors.hpp"
#include "graspd/log.hpp"

namespace graspd::sdf {

namespace {

struct Aabb {
  Vec3d mn{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::max()};
  Vec3d mx{-std::numeric_limits<double>::max(), -std::numeric_limits<double>::max(),
           -std::numeric_limits<double>::max()};

  void grow(const Vec3d& p) {
    mn.x = std::min(mn.x, p.x); mn.y = std::min(mn.y, p.y); mn.z = std::min(mn.z, p.z);
    mx.x = std::max(mx.x, p.x); mx.y = std::max(mx.y, p.y); mx.z = std::max(mx.z, p.z);
  }
  void grow(const Aabb& o) { grow(o.mn); grow(o.mx); }

  double squared_distance(const Vec3d& p) const {
    auto axis = [](double v, double lo, double hi) {
      if (v < lo) return lo - v;
      if (v > hi) return v - hi;
      return 0.0;
    };
    double dx = axis(p.x, mn.x, mx.x), dy = axis(p.y, mn.y, mx.y),
           dz = axis(p.z, mn.z, mx.z);
    return dx * dx + dy * dy + dz * dz;
  }

  // Slab test for a ray p + t d, t in [0, inf).
  bool hit_by(const Vec3d& p, const Vec3d& inv_d) const {
    double t0 = 0.0, t1 = std::numeric_limits<double>::max();
    for (int a = 0; a < 3; ++a) {
      double lo = ((a == 0 ? mn.x : a == 1 ? mn.y : mn.z) - p[a]) * inv_d[a];
      double hi = ((a == 0 ? mx.x : a == 1 ? mx.y : mx.z) - p[a]) * inv_d[a];
      if (lo > hi) std::swap(lo, hi);
      t0 = std::max(t0, lo);
      t1 = std::min(t1, hi);
      if (t0 > t1) return false;
    }
    return true;
  }
};

// Ericson, Real-Time Collision Detection, closest point on triangle.
Vec3d closest_point_on_triangle(const Vec3d& p, const Vec3d& a, const Vec3d& b,
                                const Vec3d& c) {
  Vec3d ab = b - a, ac = c - a, ap = p - a;
  double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  Vec3d bp = p - b;
  double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  Vec3d cp = p - c;
  double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }
  double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Moller-Trumbore; returns true for t > eps hits.
bool ray_hits_triangle(const Vec3d& origin, const Vec3d& dir, const Vec3d& a,
                       const Vec3d& b, const Vec3d& c) {
  constexpr double eps = 1e-13;
  Vec3d e1 = b - a, e2 = c - a;
  Vec3d pvec = cross(dir, e2);
  double det = dot(e1, pvec);
  if (std::abs(det) < eps) return false;
  double inv_det = 1.0 / det;
  Vec3d tvec = origin - a;
  double u = dot(tvec, pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  Vec3d qvec = cross(tvec, e1);
  double v = dot(dir, qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  double t = dot(e2, qvec) * inv_det;
  return t > eps;
}

class TriangleTree {
 public:
  explicit TriangleTree(const TriMesh& mesh) : mesh_(mesh) {
    const std::size_t n = mesh.faces.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    boxes_.resize(n);
    centers_.resize(n);
    for (std::size_t f = 0; f < n; ++f) {
      const auto& face = mesh.faces[f];
      Aabb box;
      for (int v : face) box.grow(mesh.vertices[v]);
      boxes_[f] = box;
      centers_[f] = (box.mn + box.mx) * 0.5;
    }
    nodes_.reserve(2 * n);
    build(0, n);
  }

  double squared_distance(const Vec3d& p) const {
    double best = std::numeric_limits<double>::max();
    descend_distance(0, p, best);
    return best;
  }

  int count_crossings(const Vec3d& origin, const Vec3d& dir) const {
    Vec3d inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
    int count = 0;
    descend_ray(0, origin, dir, inv, count);
    return count;
  }

 private:
  struct Node {
    Aabb box;
    std::int32_t left = -1, right = -1;  // children, or
    std::int32_t first = -1, count = 0;  // leaf triangle range in order_
  };

  std::int32_t build(std::size_t begin, std::size_t end) {
    auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    for (std::size_t i = begin; i < end; ++i) box.grow(boxes_[order_[i]]);
    nodes_[id].box = box;
    if (end - begin <= 4) {
      nodes_[id].first = static_cast<std::int32_t>(begin);
      nodes_[id].count = static_cast<std::int32_t>(end - begin);
      return id;
    }
    Vec3d extent = box.mx - box.mn;
    int axis = extent.x >= extent.y ? (extent.x >= extent.z ? 0 : 2)
                                    : (extent.y >= extent.z ? 1 : 2);
    std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t l, std::size_t r) {
                       return centers_[l][axis] < centers_[r][axis];
                     });
    std::int32_t left = build(begin, mid);
    std::int32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void descend_distance(std::int32_t id, const Vec3d& p, double& best) const {
    const Node& node = nodes_[id];
    if (node.box.squared_distance(p) >= best) return;
    if (node.count > 0) {
      for (std::int32_t i = 0; i < node.count; ++i) {
        const auto& face = mesh_.faces[order_[node.first + i]];
        Vec3d q = closest_point_on_triangle(p, mesh_.vertices[face[0]],
                                            mesh_.vertices[face[1]],
                                            mesh_.vertices[face[2]]);
        best = std::min(best, squared_norm(p - q));
      }
      return;
    }
    // Nearer child first.
    double dl = nodes_[node.left].box.squared_distance(p);
    double dr = nodes_[node.right].box.squared_distance(p);
    if (dl <= dr) {
      descend_distance(node.left, p, best);
      descend_distance(node.right, p, best);
    } else {
      descend_distance(node.right, p, best);
      descend_distance(node.left, p, best);
    }
  }

  void descend_ray(std::int32_t id, const Vec3d& origin, const Vec3d& dir,
                   const Vec3d& inv, int& count) const {
    const Node& node = nodes_[id];
    if (!node.box.hit_by(origin, inv)) return;
    if (node.count > 0) {
      for (std::int32_t i = 0; i < node.count; ++i) {
        const auto& face = mesh_.faces[order_[node.first + i]];
        if (ray_hits_triangle(origin, dir, mesh_.vertices[face[0]],
                              mesh_.vertices[face[1]], mesh_.vertices[face[2]]))
          ++count;
      }
      return;
    }
    descend_ray(node.left, origin, dir, inv, count);
    descend_ray(node.right, origin, dir, inv, count);
  }

  const TriMesh& mesh_;
  std::vector<std::size_t> order_;
  std::vector<Aabb> boxes_;
  std::vector<Vec3d> centers_;
  std::vector<Node> nodes_;
};

// Fixed, slightly tilted directions; axis-aligned rays graze axis-aligned
// geometry too easily.
const Vec3d kRayDirs[3] = {
    normalized_or_zero(Vec3d{1.0, 0.037, 0.071}),
    normalized_or_zero(Vec3d{0.059, 1.0, 0.043}),
    normalized_or_zero(Vec3d{0.047, 0.067, 1.0}),
};

}  // namespace

SdfGrid bake(const TriMesh& mesh, const BakeOptions& options) {
  if (mesh.faces.empty()) throw ValidationError("bake: mesh has no triangles");
  for (int a = 0; a < 3; ++a)
    if (options.dims[a] < 2) throw ValidationError("bake: dims must be at least 2");
  if (options.padding <= 0.0) throw ValidationError("bake: padding must be positive");

  Vec3d mn, mx;
  mesh.bounding_box(mn, mx);
  const Vec3d pad{options.padding, options.padding, options.padding};
  mn -= pad;
  mx += pad;

  TriangleTree tree(mesh);

  const auto& dims = options.dims;
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<double> values(total);
  std::vector<std::uint8_t> disagreement(total, 0);
  Vec3d h{(mx.x - mn.x) / (dims[0] - 1), (mx.y - mn.y) / (dims[1] - 1),
          (mx.z - mn.z) / (dims[2] - 1)};

  int n_threads = options.threads > 0
                      ? options.threads
                      : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next_slab{0};
  auto worker = [&]() {
    for (;;) {
      int k = next_slab.fetch_add(1);
      if (k >= dims[2]) return;
      for (int j = 0; j < dims[1]; ++j) {
        for (int i = 0; i < dims[0]; ++i) {
          Vec3d p{mn.x + h.x * i, mn.y + h.y * j, mn.z + h.z * k};
          double dist = std::sqrt(tree.squared_distance(p));
          int inside_votes = 0;
          for (const Vec3d& dir : kRayDirs)
            if (tree.count_crossings(p, dir) % 2 == 1) ++inside_votes;
          std::size_t idx = static_cast<std::size_t>(i) +
                            static_cast<std::size_t>(dims[0]) *
                                (static_cast<std::size_t>(j) +
                                 static_cast<std::size_t>(dims[1]) * k);
          values[idx] = inside_votes >= 2 ? -dist : dist;
          if (inside_votes == 1 || inside_votes == 2) disagreement[idx] = 1;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::size_t bad = 0;
  for (std::uint8_t d : disagreement) bad += d;
  if (static_cast<double>(bad) > options.max_parity_disagreement * total) {
    std::ostringstream msg;
    msg << "bake: mesh does not look watertight; ray parity disagrees at " << bad
        << " of " << total << " nodes. First offenders:";
    int listed = 0;
    for (int k = 0; k < dims[2] && listed < 8; ++k)
      for (int j = 0; j < dims[1] && listed < 8; ++j)
        for (int i = 0; i < dims[0] && listed < 8; ++i) {
          std::size_t idx = static_cast<std::size_t>(i) +
                            static_cast<std::size_t>(dims[0]) *
                                (static_cast<std::size_t>(j) +
                                 static_cast<std::size_t>(dims[1]) * k);
          if (disagreement[idx]) {
            msg << " (" << i << "," << j << "," << k << ")";
            ++listed;
          }
        }
    throw ValidationError(msg.str());
  }
  if (bad > 0)
    log::debug("bake: tolerated %zu grazing parity disagreements", bad);

  return SdfGrid(dims, mn, mx, std::move(values));
}

}  // namespace graspd::sdf
