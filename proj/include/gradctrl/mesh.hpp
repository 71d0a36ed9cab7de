#pragma once

#include <array>
#include <set>
#include <vector>

#include "gradctrl/types.hpp"

namespace gradctrl {

enum class BoundaryTag { Interior, Dirichlet, Neumann };

enum class Side { Left, Right, Bottom, Top };

/// Simplex element with constant P1 basis gradients. In 1D only the first
/// two vertex slots and the first gradient row are used.
struct Element {
  std::array<int, 3> vertices{-1, -1, -1};
  double measure = 0.0;
  Eigen::Matrix<double, 2, 3> basis_gradients =
      Eigen::Matrix<double, 2, 3>::Zero();  // column v: grad of hat function v

  int vertex_count(int dimension) const { return dimension + 1; }
};

/// Structured simplicial mesh on [0,Lx] (1D) or [0,Lx]x[0,Ly] (2D, squares
/// split along the lower-left/upper-right diagonal), with a per-boundary-node
/// Dirichlet/Neumann partition.
class Mesh {
 public:
  int dimension = 1;
  int nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;
  Eigen::Matrix2Xd nodes;  // column per node; second row zero in 1D
  std::vector<Element> elements;
  std::vector<BoundaryTag> tags;  // per node
  std::vector<int> free_nodes;    // non-Dirichlet node indices, ascending
  std::vector<int> free_index;    // node -> slot in free_nodes, or -1
  double domain_measure = 0.0;

  int node_count() const { return static_cast<int>(nodes.cols()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int free_count() const { return static_cast<int>(free_nodes.size()); }
  bool is_dirichlet(int node) const { return tags[node] == BoundaryTag::Dirichlet; }

  /// Gather the free entries of a full nodal vector.
  Vector restrict_free(const Vector& full) const;
  /// Scatter a free vector into a full nodal vector, zero on Dirichlet nodes.
  Vector scatter_free(const Vector& free) const;
};

Mesh build_mesh(int dimension, const std::vector<double>& extents, int nx, int ny,
                const std::set<Side>& dirichlet_sides);

Side side_from_string(const std::string& name);

}  // namespace gradctrl
