#include "pdflow/problem.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

void check_feasible(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size())
    throw DimensionMismatch("constraint matrix has " + std::to_string(A.rows()) +
                            " rows but rhs has " + std::to_string(b.size()) +
                            " entries");
  if (A.rows() == 0) return;
  const Vector x_ls = A.colPivHouseholderQr().solve(b);
  const double res = (A * x_ls - b).norm();
  if (res > 1e-10 * (1.0 + b.norm()))
    throw InfeasibleConstraints("no x satisfies Ax = b (least-squares residual " +
                                std::to_string(res) + ")");
}

}  // namespace

ProblemInstance make_instance(std::function<double(const Vector&)> objective,
                              std::function<Vector(const Vector&)> gradient,
                              std::function<Matrix(const Vector&)> hessian,
                              Matrix A, Vector b) {
  check_feasible(A, b);
  ProblemInstance inst;
  inst.dim_primal = static_cast<int>(A.cols());
  inst.dim_dual = static_cast<int>(A.rows());
  inst.objective = std::move(objective);
  inst.gradient = std::move(gradient);
  inst.hessian = std::move(hessian);
  inst.constraint_matrix = std::move(A);
  inst.constraint_rhs = std::move(b);
  return inst;
}

ProblemInstance build_quadratic(const Matrix& Q, const Vector& q, double r,
                                const Matrix& A, const Vector& b) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n) throw DimensionMismatch("Q must be square");
  if (q.size() != n) throw DimensionMismatch("linear term does not match Q");
  if (A.cols() != n && A.rows() != 0)
    throw DimensionMismatch("constraint matrix does not match Q");
  if (n > 0) {
    const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) throw NotPsd("Q is not symmetric (max asymmetry " +
                                   std::to_string(asym) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> eigs(Q);
    if (eigs.eigenvalues().minCoeff() < -1e-10)
      throw NotPsd("Q has eigenvalue " + std::to_string(eigs.eigenvalues().minCoeff()));
  }
  check_feasible(A, b);

  QuadraticObjective quad{Q, q, r};
  ProblemInstance inst;
  inst.dim_primal = static_cast<int>(n);
  inst.dim_dual = static_cast<int>(A.rows());
  inst.objective = [Q, q, r](const Vector& x) {
    return 0.5 * x.dot(Q * x) + q.dot(x) + r;
  };
  inst.gradient = [Q, q](const Vector& x) -> Vector { return Q * x + q; };
  inst.hessian = [Q](const Vector&) -> Matrix { return Q; };
  inst.constraint_matrix = A.rows() == 0 ? Matrix(0, n) : A;
  inst.constraint_rhs = b;
  inst.quadratic = std::move(quad);
  return inst;
}

ProblemInstance build_reference_problem() {
  Matrix A(1, 3);
  A << 1.0, -1.0, 1.0;
  Vector b(1);
  b << 2.0;

  ProblemInstance inst;
  inst.dim_primal = 3;
  inst.dim_dual = 1;
  inst.objective = [](const Vector& x) {
    const double d = x(0) - x(1);
    return d * d + x(2) * x(2);
  };
  inst.gradient = [](const Vector& x) -> Vector {
    const double d = x(0) - x(1);
    Vector g(3);
    g << 2.0 * d, -2.0 * d, 2.0 * x(2);
    return g;
  };
  inst.hessian = [](const Vector&) -> Matrix {
    Matrix H(3, 3);
    H << 2.0, -2.0, 0.0, -2.0, 2.0, 0.0, 0.0, 0.0, 2.0;
    return H;
  };
  inst.constraint_matrix = A;
  inst.constraint_rhs = b;

  Matrix Q(3, 3);
  Q << 2.0, -2.0, 0.0, -2.0, 2.0, 0.0, 0.0, 0.0, 2.0;
  inst.quadratic = QuadraticObjective{Q, Vector::Zero(3), 0.0};

  SolutionOracle oracle;
  oracle.min_norm_primal = Vector(3);
  oracle.min_norm_primal << 0.5, -0.5, 1.0;
  oracle.min_norm_dual = Vector(1);
  oracle.min_norm_dual << -2.0;
  oracle.optimal_value = 2.0;
  inst.oracle = std::move(oracle);
  return inst;
}

ProblemInstance with_oracle(ProblemInstance instance, SolutionOracle oracle) {
  if (oracle.min_norm_primal.size() != instance.dim_primal ||
      oracle.min_norm_dual.size() != instance.dim_dual)
    throw DimensionMismatch("oracle dimensions do not match instance");
  const Vector stat = instance.gradient(oracle.min_norm_primal) +
                      instance.constraint_matrix.transpose() * oracle.min_norm_dual;
  const Vector feas =
      instance.constraint_matrix * oracle.min_norm_primal - instance.constraint_rhs;
  if (stat.norm() > 1e-9 || feas.norm() > 1e-9)
    throw KktInconsistent("supplied oracle violates the KKT conditions");
  instance.oracle = std::move(oracle);
  return instance;
}

SolutionOracle solve_min_norm_kkt(const ProblemInstance& instance) {
  if (!instance.quadratic)
    throw Error("min-norm KKT solve requires a quadratic objective");
  const QuadraticObjective& quad = *instance.quadratic;
  const Eigen::Index n = instance.dim_primal;
  const Eigen::Index m = instance.dim_dual;

  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = quad.Q;
  if (m > 0) {
    K.topRightCorner(n, m) = instance.constraint_matrix.transpose();
    K.bottomLeftCorner(m, n) = instance.constraint_matrix;
  }
  Vector rhs(n + m);
  rhs.head(n) = -quad.linear_term;
  if (m > 0) rhs.tail(m) = instance.constraint_rhs;

  const LeastNormSolution sol = least_norm_solve(K, rhs);
  if (sol.residual > 1e-9 * (1.0 + rhs.norm()))
    throw KktInconsistent("KKT system has no solution (residual " +
                          std::to_string(sol.residual) + ")");

  SolutionOracle oracle;
  oracle.min_norm_primal = sol.z.head(n);
  oracle.min_norm_dual = sol.z.tail(m);
  oracle.optimal_value = instance.objective(oracle.min_norm_primal);
  return oracle;
}

double gradient_max_rel_error(const ProblemInstance& instance, int n_points,
                              unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < n_points; ++k) {
    Vector x(instance.dim_primal);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = dist(rng);
    const double h = 1e-6 * (1.0 + x.norm());
    Vector fd(instance.dim_primal);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd(i) = (instance.objective(xp) - instance.objective(xm)) / (2.0 * h);
    }
    const Vector g = instance.gradient(x);
    worst = std::max(worst, (fd - g).norm() / (1.0 + g.norm()));
  }
  return worst;
}

ProblemInstance parse_instance(const config::Document& doc) {
  for (const auto& [key, value] : doc.entries()) {
    if (key != "Q" && key != "q" && key != "r" && key != "A" && key != "b" &&
        key != "oracle.x_star" && key != "oracle.lambda_star" &&
        key != "oracle.f_star")
      throw ConfigInvalid("unknown instance key '" + key + "'");
  }
  const Vector q = config::get_vector(doc, "q");
  const Vector b = config::get_vector(doc, "b");
  const Vector q_flat = config::get_vector(doc, "Q");
  const Vector a_flat = config::get_vector(doc, "A");
  const Eigen::Index n = q.size();
  const Eigen::Index m = b.size();
  if (q_flat.size() != n * n)
    throw ConfigInvalid("Q must have " + std::to_string(n * n) +
                        " row-major entries");
  if (a_flat.size() != m * n)
    throw ConfigInvalid("A must have " + std::to_string(m * n) +
                        " row-major entries");
  Matrix Q(n, n), A(m, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Q(i, j) = q_flat(i * n + j);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = a_flat(i * n + j);
  const double r = config::get_double_or(doc, "r", 0.0);

  ProblemInstance inst = build_quadratic(Q, q, r, A, b);
  if (doc.has("oracle.x_star")) {
    SolutionOracle oracle;
    oracle.min_norm_primal = config::get_vector(doc, "oracle.x_star");
    oracle.min_norm_dual = config::get_vector(doc, "oracle.lambda_star");
    oracle.optimal_value = config::get_double(doc, "oracle.f_star");
    inst = with_oracle(std::move(inst), std::move(oracle));
  }
  return inst;
}

ProblemInstance load_instance(const std::string& path) {
  return parse_instance(config::Document::parse_file(path));
}

config::Document instance_to_document(const ProblemInstance& instance) {
  if (!instance.quadratic)
    throw Error("only quadratic instances have a file representation");
  const QuadraticObjective& quad = *instance.quadratic;
  config::Document doc;
  std::string qflat, aflat;
  for (Eigen::Index i = 0; i < quad.Q.rows(); ++i)
    for (Eigen::Index j = 0; j < quad.Q.cols(); ++j) {
      if (!qflat.empty()) qflat += ' ';
      qflat += config::format_double(quad.Q(i, j));
    }
  for (Eigen::Index i = 0; i < instance.constraint_matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < instance.constraint_matrix.cols(); ++j) {
      if (!aflat.empty()) aflat += ' ';
      aflat += config::format_double(instance.constraint_matrix(i, j));
    }
  doc.set("Q", qflat);
  doc.set("q", config::format_vector(quad.linear_term));
  doc.set("r", config::format_double(quad.constant_term));
  doc.set("A", aflat);
  doc.set("b", config::format_vector(instance.constraint_rhs));
  if (instance.oracle) {
    doc.set("oracle.x_star", config::format_vector(instance.oracle->min_norm_primal));
    doc.set("oracle.lambda_star",
            config::format_vector(instance.oracle->min_norm_dual));
    doc.set("oracle.f_star", config::format_double(instance.oracle->optimal_value));
  }
  return doc;
}

void save_instance(const std::string& path, const ProblemInstance& instance) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write instance file '" + path + "'");
  out << instance_to_document(instance).dump();
}

}  // namespace pdflow
