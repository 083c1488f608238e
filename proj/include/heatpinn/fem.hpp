#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <vector>

#include "heatpinn/geometry.hpp"
#include "heatpinn/physics.hpp"

namespace heatpinn {

/// Structured triangulation of the rectangle: nx-by-ny cells, each split
/// into two counter-clockwise triangles along the cell diagonal.
struct FemMesh {
    double hx = 0.0, hy = 0.0; ///< cell size in x and y (mm)
    int nx = 0, ny = 0;        ///< cell counts

    std::vector<double> node_x, node_y;
    std::vector<std::array<int, 3>> triangles;

    struct BoundaryEdge {
        int a = 0, b = 0;
        EdgeId edge = EdgeId::AD;
    };
    std::vector<BoundaryEdge> boundary_edges;

    int node_count() const { return static_cast<int>(node_x.size()); }
    int node_id(int ix, int iy) const { return iy * (nx + 1) + ix; }
    double triangle_area(int t) const;
};

/// Compressed-sparse-row symmetric matrix with a fixed pattern.
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr, cols;
    std::vector<double> vals;

    static CsrMatrix from_triplets(int n, std::vector<std::array<int, 2>> pattern);

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
    double coeff(int i, int j) const; ///< 0 if outside pattern
    Eigen::VectorXd diagonal() const;
    bool is_symmetric(double tol = 1e-12) const;
};

/// Scalar field sampled during load assembly (volumetric source term).
using ScalarField = std::function<double(double x, double y, double t)>;

struct FemSettings {
    double h = 0.25;      ///< target element size (mm)
    double dt = 0.05;     ///< backward Euler step (s)
    double cg_tol = 1e-10;
    bool lumped_mass = false;

    void validate() const;
};

/// Nodal temperature trajectory on a uniform time grid t_n = n * dt.
struct FemSolution {
    FemMesh mesh;
    double dt = 0.0;
    std::vector<Eigen::VectorXd> steps;

    double t_end() const { return dt * static_cast<double>(steps.size() - 1); }
};

FemMesh generate_mesh(const DomainSpec& d, double h);

/// Structured mesh directly from cell counts and sizes (used when reloading
/// saved trajectories; generate_mesh derives these from the domain and h).
FemMesh build_structured_mesh(int nx, int ny, double hx, double hy);

/// Consistent (or lumped) mass matrix M and stiffness matrix K, sharing one
/// sparsity pattern. Element formulas: Ke = k/(4A) (b b^T + c c^T),
/// Me = gamma A/12 [[2,1,1],[1,2,1],[1,1,2]].
void assemble(const FemMesh& mesh, const MaterialProps& m, bool lumped_mass, CsrMatrix& mass,
              CsrMatrix& stiffness);

/// Load vector at time t: volumetric source integrated with the 3-point
/// mid-edge rule per triangle, plus Neumann edge terms q*len/2 per endpoint.
Eigen::VectorXd assemble_load(const FemMesh& mesh, const DomainSpec& d, const ScalarField& source,
                              double t);

/// Nodes on Dirichlet edges of the domain, with their prescribed values.
void dirichlet_nodes(const FemMesh& mesh, const DomainSpec& d, std::vector<int>& nodes,
                     std::vector<double>& values);

/// Jacobi-preconditioned conjugate gradients: ||Ax - b|| / ||b|| < tol.
/// Iteration cap 10*n (or max_iter if positive). An optional initial guess
/// warm-starts the iteration (time steppers pass the previous solution).
Eigen::VectorXd cg_solve(const CsrMatrix& a, const Eigen::VectorXd& b, double tol,
                         int max_iter = 0, const Eigen::VectorXd* x0 = nullptr);

/// Called after each completed time step (step in 1..nsteps).
using StepCallback = std::function<void(int step, int nsteps)>;

/// Backward Euler march: (M + dt K) u^{n+1} = M u^n + dt F(t^{n+1}), with
/// symmetric Dirichlet elimination. u0 must already satisfy the Dirichlet
/// values.
FemSolution backward_euler_solve(const FemMesh& mesh, const CsrMatrix& mass,
                                 const CsrMatrix& stiffness, const ScalarField& source,
                                 const DomainSpec& d, const Eigen::VectorXd& u0, double dt,
                                 double t_total, double cg_tol,
                                 const StepCallback& on_step = {});

/// End-to-end transient solve of the moving-source problem with a uniform
/// initial temperature.
FemSolution solve_heat(const DomainSpec& d, const MaterialProps& m, const SourceSpec& src,
                       const FemSettings& s, double t_total, double u0_value,
                       const StepCallback& on_step = {});

/// As solve_heat but with an arbitrary volumetric source field and initial
/// nodal vector (used by manufactured-solution studies).
FemSolution solve_transient(const DomainSpec& d, const MaterialProps& m,
                            const ScalarField& source, const FemSettings& s, double t_total,
                            const Eigen::VectorXd& u0);

/// Barycentric-in-space, linear-in-time interpolation of the trajectory.
double interpolate(const FemSolution& sol, const SpaceTimePoint& p);

} // namespace heatpinn
