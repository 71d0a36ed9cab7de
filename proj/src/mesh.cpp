#include "gradctrl/mesh.hpp"

#include <cmath>

namespace gradctrl {

namespace {

void finalize_free_maps(Mesh& mesh) {
  const int n = mesh.node_count();
  mesh.free_index.assign(n, -1);
  mesh.free_nodes.clear();
  for (int i = 0; i < n; ++i) {
    if (!mesh.is_dirichlet(i)) {
      mesh.free_index[i] = static_cast<int>(mesh.free_nodes.size());
      mesh.free_nodes.push_back(i);
    }
  }
}

Element make_segment(int left, int right, double h) {
  Element e;
  e.vertices = {left, right, -1};
  e.measure = h;
  e.basis_gradients(0, 0) = -1.0 / h;
  e.basis_gradients(0, 1) = 1.0 / h;
  return e;
}

Element make_triangle(const Eigen::Matrix2Xd& nodes, int v0, int v1, int v2) {
  Element e;
  e.vertices = {v0, v1, v2};
  const Vector2 p0 = nodes.col(v0), p1 = nodes.col(v1), p2 = nodes.col(v2);
  const double twice_area =
      (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  e.measure = 0.5 * twice_area;
  // grad phi_i = rot90(p_{i+2} - p_{i+1}) / (2A), rot90(v) = (-v_y, v_x)
  const std::array<Vector2, 3> p = {p0, p1, p2};
  for (int i = 0; i < 3; ++i) {
    const Vector2 edge = p[(i + 2) % 3] - p[(i + 1) % 3];
    e.basis_gradients(0, i) = -edge.y() / twice_area;
    e.basis_gradients(1, i) = edge.x() / twice_area;
  }
  return e;
}

}  // namespace

Vector Mesh::restrict_free(const Vector& full) const {
  Vector out(free_count());
  for (int i = 0; i < free_count(); ++i) out(i) = full(free_nodes[i]);
  return out;
}

Vector Mesh::scatter_free(const Vector& free) const {
  Vector out = Vector::Zero(node_count());
  for (int i = 0; i < free_count(); ++i) out(free_nodes[i]) = free(i);
  return out;
}

Side side_from_string(const std::string& name) {
  if (name == "left") return Side::Left;
  if (name == "right") return Side::Right;
  if (name == "bottom") return Side::Bottom;
  if (name == "top") return Side::Top;
  throw std::invalid_argument("unknown mesh side: " + name);
}

Mesh build_mesh(int dimension, const std::vector<double>& extents, int nx, int ny,
                const std::set<Side>& dirichlet_sides) {
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("mesh dimension must be 1 or 2");
  if (extents.empty() || extents.size() < static_cast<size_t>(dimension))
    throw std::invalid_argument("mesh extents must provide one length per dimension");
  for (double L : extents)
    if (!(L > 0.0)) throw std::invalid_argument("mesh extents must be positive");
  if (nx < 1) throw std::invalid_argument("mesh divisions nx must be >= 1");
  if (dimension == 2 && ny < 1) throw std::invalid_argument("mesh divisions ny must be >= 1");

  Mesh mesh;
  mesh.dimension = dimension;
  mesh.nx = nx;
  mesh.lx = extents[0];

  if (dimension == 1) {
    const double h = mesh.lx / nx;
    mesh.nodes.resize(2, nx + 1);
    for (int i = 0; i <= nx; ++i) mesh.nodes.col(i) = Vector2(i * h, 0.0);
    mesh.elements.reserve(nx);
    for (int i = 0; i < nx; ++i) mesh.elements.push_back(make_segment(i, i + 1, h));

    mesh.tags.assign(nx + 1, BoundaryTag::Interior);
    mesh.tags[0] = dirichlet_sides.count(Side::Left) ? BoundaryTag::Dirichlet
                                                     : BoundaryTag::Neumann;
    mesh.tags[nx] = dirichlet_sides.count(Side::Right) ? BoundaryTag::Dirichlet
                                                       : BoundaryTag::Neumann;
    mesh.domain_measure = mesh.lx;
  } else {
    mesh.ny = ny;
    mesh.ly = extents[1];
    const double hx = mesh.lx / nx, hy = mesh.ly / ny;
    const int n_nodes = (nx + 1) * (ny + 1);
    mesh.nodes.resize(2, n_nodes);
    auto id = [nx](int i, int j) { return i + j * (nx + 1); };
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) mesh.nodes.col(id(i, j)) = Vector2(i * hx, j * hy);

    // Each cell splits along the ll-ur diagonal, same orientation mesh-wide.
    mesh.elements.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int ll = id(i, j), lr = id(i + 1, j), ul = id(i, j + 1), ur = id(i + 1, j + 1);
        mesh.elements.push_back(make_triangle(mesh.nodes, ll, lr, ur));
        mesh.elements.push_back(make_triangle(mesh.nodes, ll, ur, ul));
      }
    }

    mesh.tags.assign(n_nodes, BoundaryTag::Interior);
    auto on_side = [&](int i, int j, Side s) {
      switch (s) {
        case Side::Left: return i == 0;
        case Side::Right: return i == nx;
        case Side::Bottom: return j == 0;
        case Side::Top: return j == ny;
      }
      return false;
    };
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const bool boundary = i == 0 || i == nx || j == 0 || j == ny;
        if (!boundary) continue;
        bool dirichlet = false;
        for (Side s : dirichlet_sides) dirichlet = dirichlet || on_side(i, j, s);
        mesh.tags[id(i, j)] = dirichlet ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
      }
    }
    mesh.domain_measure = mesh.lx * mesh.ly;
  }

  finalize_free_maps(mesh);
  return mesh;
}

}  // namespace gradctrl
