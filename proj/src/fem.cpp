#include "heatpinn/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace heatpinn {

double FemMesh::triangle_area(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const double x1 = node_x[tri[0]], y1 = node_y[tri[0]];
    const double x2 = node_x[tri[1]], y2 = node_y[tri[1]];
    const double x3 = node_x[tri[2]], y3 = node_y[tri[2]];
    return 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1));
}

void FemSettings::validate() const {
    if (!(h > 0.0)) throw Error("fem.h must be > 0");
    if (!(dt > 0.0)) throw Error("fem.dt must be > 0");
    if (!(cg_tol > 0.0)) throw Error("fem.cg_tol must be > 0");
}

FemMesh generate_mesh(const DomainSpec& d, double h) {
    if (!(h > 0.0)) throw Error("generate_mesh: h must be > 0");
    const int nx = std::max(1, static_cast<int>(std::lround(d.length / h)));
    const int ny = std::max(1, static_cast<int>(std::lround(d.width / h)));
    return build_structured_mesh(nx, ny, d.length / nx, d.width / ny);
}

FemMesh build_structured_mesh(int nx, int ny, double hx, double hy) {
    if (nx < 1 || ny < 1 || !(hx > 0.0) || !(hy > 0.0))
        throw Error("build_structured_mesh: invalid grid parameters");
    FemMesh mesh;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.hx = hx;
    mesh.hy = hy;

    const int nnx = mesh.nx + 1, nny = mesh.ny + 1;
    mesh.node_x.resize(static_cast<std::size_t>(nnx) * nny);
    mesh.node_y.resize(static_cast<std::size_t>(nnx) * nny);
    for (int iy = 0; iy < nny; ++iy)
        for (int ix = 0; ix < nnx; ++ix) {
            const int id = mesh.node_id(ix, iy);
            mesh.node_x[id] = ix * mesh.hx;
            mesh.node_y[id] = iy * mesh.hy;
        }

    mesh.triangles.reserve(2u * mesh.nx * mesh.ny);
    for (int iy = 0; iy < mesh.ny; ++iy)
        for (int ix = 0; ix < mesh.nx; ++ix) {
            const int n00 = mesh.node_id(ix, iy);
            const int n10 = mesh.node_id(ix + 1, iy);
            const int n01 = mesh.node_id(ix, iy + 1);
            const int n11 = mesh.node_id(ix + 1, iy + 1);
            mesh.triangles.push_back({n00, n10, n11});
            mesh.triangles.push_back({n00, n11, n01});
        }

    for (int iy = 0; iy < mesh.ny; ++iy) {
        mesh.boundary_edges.push_back({mesh.node_id(0, iy), mesh.node_id(0, iy + 1), EdgeId::AD});
        mesh.boundary_edges.push_back(
            {mesh.node_id(mesh.nx, iy), mesh.node_id(mesh.nx, iy + 1), EdgeId::BC});
    }
    for (int ix = 0; ix < mesh.nx; ++ix) {
        mesh.boundary_edges.push_back({mesh.node_id(ix, 0), mesh.node_id(ix + 1, 0), EdgeId::AB});
        mesh.boundary_edges.push_back(
            {mesh.node_id(ix, mesh.ny), mesh.node_id(ix + 1, mesh.ny), EdgeId::CD});
    }
    return mesh;
}

CsrMatrix CsrMatrix::from_triplets(int n, std::vector<std::array<int, 2>> pattern) {
    std::sort(pattern.begin(), pattern.end());
    pattern.erase(std::unique(pattern.begin(), pattern.end()), pattern.end());
    CsrMatrix a;
    a.n = n;
    a.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    a.cols.reserve(pattern.size());
    for (const auto& rc : pattern) {
        ++a.row_ptr[static_cast<std::size_t>(rc[0]) + 1];
        a.cols.push_back(rc[1]);
    }
    for (int i = 0; i < n; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
    a.vals.assign(a.cols.size(), 0.0);
    return a;
}

Eigen::VectorXd CsrMatrix::multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += vals[p] * x[cols[p]];
        y[i] = s;
    }
    return y;
}

double CsrMatrix::coeff(int i, int j) const {
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        if (cols[p] == j) return vals[p];
    return 0.0;
}

Eigen::VectorXd CsrMatrix::diagonal() const {
    Eigen::VectorXd dg = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) dg[i] = coeff(i, i);
    return dg;
}

bool CsrMatrix::is_symmetric(double tol) const {
    for (int i = 0; i < n; ++i)
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
            if (std::abs(vals[p] - coeff(cols[p], i)) > tol) return false;
    return true;
}

namespace {

struct ElementGeometry {
    double area = 0.0;
    std::array<double, 3> b{}, c{};
};

ElementGeometry element_geometry(const FemMesh& mesh, int t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const double x[3] = {mesh.node_x[tri[0]], mesh.node_x[tri[1]], mesh.node_x[tri[2]]};
    const double y[3] = {mesh.node_y[tri[0]], mesh.node_y[tri[1]], mesh.node_y[tri[2]]};
    ElementGeometry g;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        g.b[i] = y[j] - y[k];
        g.c[i] = x[k] - x[j];
    }
    g.area = 0.5 * ((x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]));
    if (!(g.area > 0.0)) {
        std::ostringstream msg;
        msg << "degenerate element " << t << " (area " << g.area << ")";
        throw Error(msg.str());
    }
    return g;
}

int csr_slot(const CsrMatrix& a, int i, int j) {
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
        if (a.cols[p] == j) return p;
    throw Error("assembly pattern missing entry");
}

} // namespace

void assemble(const FemMesh& mesh, const MaterialProps& m, bool lumped_mass, CsrMatrix& mass,
              CsrMatrix& stiffness) {
    const int n = mesh.node_count();
    std::vector<std::array<int, 2>> pattern;
    pattern.reserve(9 * mesh.triangles.size());
    for (const auto& tri : mesh.triangles)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) pattern.push_back({tri[i], tri[j]});
    mass = CsrMatrix::from_triplets(n, pattern);
    stiffness = CsrMatrix::from_triplets(n, std::move(pattern));

    const double gamma = m.gamma();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(t));
        const double ks = m.k / (4.0 * g.area);
        const double ms = gamma * g.area / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int slot = csr_slot(stiffness, tri[i], tri[j]);
                stiffness.vals[slot] += ks * (g.b[i] * g.b[j] + g.c[i] * g.c[j]);
                double me = ms * (i == j ? 2.0 : 1.0);
                if (lumped_mass) me = (i == j) ? gamma * g.area / 3.0 : 0.0;
                mass.vals[csr_slot(mass, tri[i], tri[j])] += me;
            }
    }
}

Eigen::VectorXd assemble_load(const FemMesh& mesh, const DomainSpec& d, const ScalarField& source,
                              double t) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.node_count());

    // 3-point mid-edge rule: quadrature at edge midpoints with weight A/3;
    // linear shape functions take value 1/2 on the two adjacent nodes.
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.triangle_area(static_cast<int>(e)) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const int a = tri[q], b = tri[(q + 1) % 3];
            const double mx = 0.5 * (mesh.node_x[a] + mesh.node_x[b]);
            const double my = 0.5 * (mesh.node_y[a] + mesh.node_y[b]);
            const double fv = w * source(mx, my, t);
            f[a] += 0.5 * fv;
            f[b] += 0.5 * fv;
        }
    }

    for (const auto& be : mesh.boundary_edges) {
        const BoundaryCondition& bc = d.bc_of(be.edge);
        if (bc.kind != BoundaryCondition::Kind::neumann || bc.value == 0.0) continue;
        const double len = std::hypot(mesh.node_x[be.b] - mesh.node_x[be.a],
                                      mesh.node_y[be.b] - mesh.node_y[be.a]);
        f[be.a] += 0.5 * bc.value * len;
        f[be.b] += 0.5 * bc.value * len;
    }
    return f;
}

void dirichlet_nodes(const FemMesh& mesh, const DomainSpec& d, std::vector<int>& nodes,
                     std::vector<double>& values) {
    std::vector<char> seen(static_cast<std::size_t>(mesh.node_count()), 0);
    std::vector<double> value_of(static_cast<std::size_t>(mesh.node_count()), 0.0);
    for (const auto& be : mesh.boundary_edges) {
        const BoundaryCondition& bc = d.bc_of(be.edge);
        if (bc.kind != BoundaryCondition::Kind::dirichlet) continue;
        for (int nid : {be.a, be.b}) {
            seen[nid] = 1;
            value_of[nid] = bc.value;
        }
    }
    nodes.clear();
    values.clear();
    for (int i = 0; i < mesh.node_count(); ++i)
        if (seen[i]) {
            nodes.push_back(i);
            values.push_back(value_of[i]);
        }
}

Eigen::VectorXd cg_solve(const CsrMatrix& a, const Eigen::VectorXd& b, double tol, int max_iter,
                         const Eigen::VectorXd* x0) {
    const int n = a.n;
    if (b.size() != n) throw Error("cg_solve: dimension mismatch");
    if (x0 && x0->size() != n) throw Error("cg_solve: initial guess size mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) return Eigen::VectorXd::Zero(n);
    Eigen::VectorXd x = x0 ? *x0 : Eigen::VectorXd::Zero(n);

    Eigen::VectorXd inv_diag = a.diagonal();
    for (int i = 0; i < n; ++i) {
        if (!(inv_diag[i] > 0.0)) throw Error("cg_solve: non-positive diagonal entry");
        inv_diag[i] = 1.0 / inv_diag[i];
    }

    Eigen::VectorXd r = x0 ? Eigen::VectorXd(b - a.multiply(x)) : b;
    Eigen::VectorXd z = inv_diag.array() * r.array();
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const int cap = max_iter > 0 ? max_iter : 10 * n;
    for (int it = 0; it < cap; ++it) {
        if (r.norm() / bnorm < tol) return x;
        const Eigen::VectorXd ap = a.multiply(p);
        const double alpha = rz / p.dot(ap);
        x += alpha * p;
        r -= alpha * ap;
        z = inv_diag.array() * r.array();
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    if (r.norm() / bnorm < tol) return x;
    std::ostringstream msg;
    msg << "cg_solve: no convergence in " << cap << " iterations (relative residual "
        << r.norm() / bnorm << ")";
    throw Error(msg.str());
}

namespace {

/// Zero Dirichlet rows and columns of A (diagonal set to 1) so the reduced
/// operator stays symmetric positive definite.
void eliminate_dirichlet(CsrMatrix& a, const std::vector<char>& fixed) {
    for (int i = 0; i < a.n; ++i)
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            const int j = a.cols[p];
            if (fixed[i] || fixed[j]) a.vals[p] = (i == j) ? 1.0 : 0.0;
        }
}

} // namespace

FemSolution backward_euler_solve(const FemMesh& mesh, const CsrMatrix& mass,
                                 const CsrMatrix& stiffness, const ScalarField& source,
                                 const DomainSpec& d, const Eigen::VectorXd& u0, double dt,
                                 double t_total, double cg_tol, const StepCallback& on_step) {
    const int n = mesh.node_count();
    if (u0.size() != n) throw Error("backward_euler_solve: initial vector size mismatch");
    if (!(dt > 0.0)) throw Error("backward_euler_solve: dt must be > 0");
    const int nsteps = std::max(1, static_cast<int>(std::lround(t_total / dt)));

    // A = M + dt K, then symmetric Dirichlet elimination with RHS correction.
    CsrMatrix a = mass;
    for (std::size_t p = 0; p < a.vals.size(); ++p) a.vals[p] += dt * stiffness.vals[p];

    std::vector<int> dnodes;
    std::vector<double> dvalues;
    dirichlet_nodes(mesh, d, dnodes, dvalues);
    std::vector<char> fixed(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < dnodes.size(); ++i) {
        fixed[dnodes[i]] = 1;
        g[dnodes[i]] = dvalues[i];
    }
    const Eigen::VectorXd correction = a.multiply(g);
    eliminate_dirichlet(a, fixed);

    FemSolution sol;
    sol.mesh = mesh;
    sol.dt = dt;
    sol.steps.reserve(static_cast<std::size_t>(nsteps) + 1);
    sol.steps.push_back(u0);

    Eigen::VectorXd u = u0;
    for (int step = 1; step <= nsteps; ++step) {
        const double t_next = dt * step;
        Eigen::VectorXd rhs = mass.multiply(u) + dt * assemble_load(mesh, d, source, t_next);
        for (int i = 0; i < n; ++i) rhs[i] = fixed[i] ? g[i] : rhs[i] - correction[i];
        u = cg_solve(a, rhs, cg_tol, 0, &u); // warm start from the previous step
        sol.steps.push_back(u);
        if (on_step) on_step(step, nsteps);
    }
    return sol;
}

FemSolution solve_heat(const DomainSpec& d, const MaterialProps& m, const SourceSpec& src,
                       const FemSettings& s, double t_total, double u0_value,
                       const StepCallback& on_step) {
    const ScalarField field = [&src](double x, double y, double t) {
        return source_value(src, {x, y, t});
    };
    const FemMesh mesh = generate_mesh(d, s.h);
    Eigen::VectorXd u0 = Eigen::VectorXd::Constant(mesh.node_count(), u0_value);
    // enforce the Dirichlet values on the initial vector
    std::vector<int> dnodes;
    std::vector<double> dvalues;
    dirichlet_nodes(mesh, d, dnodes, dvalues);
    for (std::size_t i = 0; i < dnodes.size(); ++i) u0[dnodes[i]] = dvalues[i];

    CsrMatrix mass, stiffness;
    assemble(mesh, m, s.lumped_mass, mass, stiffness);
    return backward_euler_solve(mesh, mass, stiffness, field, d, u0, s.dt, t_total, s.cg_tol,
                                on_step);
}

FemSolution solve_transient(const DomainSpec& d, const MaterialProps& m,
                            const ScalarField& source, const FemSettings& s, double t_total,
                            const Eigen::VectorXd& u0) {
    const FemMesh mesh = generate_mesh(d, s.h);
    CsrMatrix mass, stiffness;
    assemble(mesh, m, s.lumped_mass, mass, stiffness);
    return backward_euler_solve(mesh, mass, stiffness, source, d, u0, s.dt, t_total, s.cg_tol);
}

double interpolate(const FemSolution& sol, const SpaceTimePoint& p) {
    const FemMesh& mesh = sol.mesh;
    if (sol.steps.empty()) throw Error("interpolate: empty solution");
    const double lx = mesh.hx * mesh.nx, ly = mesh.hy * mesh.ny;
    const double eps = 1e-12 * std::max(lx, ly);
    if (p.x < -eps || p.x > lx + eps || p.y < -eps || p.y > ly + eps)
        throw Error("interpolate: point outside domain");
    const double t_end = sol.t_end();
    if (p.t < -1e-12 || p.t > t_end + 1e-9) throw Error("interpolate: time outside solution range");

    const double cx = std::clamp(p.x, 0.0, lx);
    const double cy = std::clamp(p.y, 0.0, ly);
    int ix = std::min(static_cast<int>(cx / mesh.hx), mesh.nx - 1);
    int iy = std::min(static_cast<int>(cy / mesh.hy), mesh.ny - 1);
    const double xi = (cx - ix * mesh.hx) / mesh.hx;
    const double eta = (cy - iy * mesh.hy) / mesh.hy;

    // cell diagonal runs n00 -> n11; lower triangle (n00,n10,n11) covers xi >= eta
    const int n00 = mesh.node_id(ix, iy);
    const int n10 = mesh.node_id(ix + 1, iy);
    const int n01 = mesh.node_id(ix, iy + 1);
    const int n11 = mesh.node_id(ix + 1, iy + 1);

    const auto value_at = [&](const Eigen::VectorXd& u) {
        if (xi >= eta) // shape functions on (n00, n10, n11)
            return u[n00] * (1.0 - xi) + u[n10] * (xi - eta) + u[n11] * eta;
        return u[n00] * (1.0 - eta) + u[n11] * xi + u[n01] * (eta - xi);
    };

    if (sol.steps.size() == 1) return value_at(sol.steps.front());
    const double tc = std::clamp(p.t, 0.0, t_end);
    const double s = tc / sol.dt;
    const int k = std::min(static_cast<int>(s), static_cast<int>(sol.steps.size()) - 2);
    const double w = s - k;
    return (1.0 - w) * value_at(sol.steps[k]) + w * value_at(sol.steps[k + 1]);
}

} // namespace heatpinn
