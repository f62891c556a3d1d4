#include "gpbandits/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace gpb {

namespace {
constexpr double kSqrt5 = 2.23606797749978969;
}

FeatureKernelParams::FeatureKernelParams(double outputscale_, Vector lengthscales_)
    : outputscale(outputscale_), lengthscales(std::move(lengthscales_)) {
  if (!(outputscale > 0.0)) {
    throw std::invalid_argument("FeatureKernelParams: outputscale must be > 0");
  }
  if (lengthscales.size() < 1) {
    throw std::invalid_argument("FeatureKernelParams: need >= 1 lengthscale");
  }
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0)) {
      throw std::invalid_argument("FeatureKernelParams: lengthscales must be > 0");
    }
  }
}

GraphKernelParams::GraphKernelParams(double nu, double kappa, double sigma)
    : nu_g(nu), kappa_g(kappa), sigma_g(sigma) {
  if (!(nu_g > 0.0 && kappa_g > 0.0 && sigma_g > 0.0)) {
    throw std::invalid_argument("GraphKernelParams: all parameters must be > 0");
  }
}

double GramMatrix::entry(int e1, int e2) const {
  if (e1 < 0 || e2 < 0 || e1 >= size() || e2 >= size()) {
    std::ostringstream msg;
    msg << "GramMatrix: edge index out of range (" << e1 << ", " << e2
        << ") for size " << size();
    throw std::invalid_argument(msg.str());
  }
  return cov(e1, e2);
}

double feature_distance(const Vector& x, const Vector& xp,
                        const FeatureKernelParams& params) {
  if (x.size() != xp.size() || x.size() != params.lengthscales.size()) {
    throw std::invalid_argument(
        "feature_distance: context/lengthscale dimension mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = (x[i] - xp[i]) / params.lengthscales[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double matern52(const Vector& x, const Vector& xp,
                const FeatureKernelParams& params) {
  const double d = feature_distance(x, xp, params);
  const double t = kSqrt5 * d;
  return params.outputscale * (1.0 + t + t * t / 3.0) * std::exp(-t);
}

Matrix incidence_laplacian(int num_edges,
                           const std::vector<WeightedConnection>& connections) {
  Matrix b = Matrix::Zero(num_edges, static_cast<Eigen::Index>(connections.size()));
  for (std::size_t c = 0; c < connections.size(); ++c) {
    const auto& conn = connections[c];
    if (conn.from < 0 || conn.from >= num_edges || conn.to < 0 ||
        conn.to >= num_edges) {
      std::ostringstream msg;
      msg << "incidence_laplacian: connection " << c << " references edge ("
          << conn.from << ", " << conn.to << ") outside [0, " << num_edges
          << ")";
      throw std::invalid_argument(msg.str());
    }
    if (conn.from == conn.to) {
      std::ostringstream msg;
      msg << "incidence_laplacian: connection " << c << " is a self-loop on edge "
          << conn.from;
      throw std::invalid_argument(msg.str());
    }
    b(conn.from, static_cast<Eigen::Index>(c)) = -conn.weight;
    b(conn.to, static_cast<Eigen::Index>(c)) = conn.weight;
  }
  Matrix lap = b * b.transpose();
  return 0.5 * (lap + lap.transpose());
}

GramMatrix graph_matern_gram(int num_edges,
                             const std::vector<WeightedConnection>& connections,
                             const GraphKernelParams& params) {
  if (num_edges < 1) {
    throw std::invalid_argument("graph_matern_gram: need at least one edge");
  }
  const Matrix lap = incidence_laplacian(num_edges, connections);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(lap);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "graph_matern_gram: eigendecomposition of the " << num_edges << "x"
        << num_edges << " incidence Laplacian did not converge (status "
        << static_cast<int>(solver.info()) << ")";
    throw NumericError(msg.str());
  }
  const double shift = 2.0 * params.nu_g / (params.kappa_g * params.kappa_g);
  Vector scaled = solver.eigenvalues();
  for (Eigen::Index i = 0; i < scaled.size(); ++i) {
    // Eigenvalues of B B^T can round slightly below zero.
    const double lambda = std::max(scaled[i], 0.0);
    scaled[i] = std::pow(shift + lambda, -params.nu_g);
  }
  const Matrix& u = solver.eigenvectors();
  Matrix cov = params.sigma_g * (u * scaled.asDiagonal() * u.transpose());
  cov = 0.5 * (cov + cov.transpose());
  return GramMatrix{std::move(cov)};
}

std::shared_ptr<Kernel> Kernel::with_continuous_params(
    const std::vector<double>& params) const {
  if (!params.empty()) {
    throw std::invalid_argument("Kernel: this kernel has no continuous parameters");
  }
  throw std::invalid_argument("Kernel: with_continuous_params not supported");
}

std::vector<double> Matern52Kernel::continuous_params() const {
  std::vector<double> out;
  out.push_back(params_.outputscale);
  for (Eigen::Index i = 0; i < params_.lengthscales.size(); ++i) {
    out.push_back(params_.lengthscales[i]);
  }
  return out;
}

std::shared_ptr<Kernel> Matern52Kernel::with_continuous_params(
    const std::vector<double>& params) const {
  const auto d = params_.lengthscales.size();
  if (params.size() != static_cast<std::size_t>(d) + 1) {
    throw std::invalid_argument("Matern52Kernel: parameter count mismatch");
  }
  constexpr double kFloor = 1e-6;
  FeatureKernelParams next = params_;
  next.outputscale = std::max(params[0], kFloor);
  for (Eigen::Index i = 0; i < d; ++i) {
    next.lengthscales[i] = std::max(params[static_cast<std::size_t>(i) + 1], kFloor);
  }
  return std::make_shared<Matern52Kernel>(next);
}

CompositeKernel::CompositeKernel(std::shared_ptr<const GramMatrix> graph,
                                 FeatureKernelParams product_params,
                                 FeatureKernelParams additive_params)
    : graph_(std::move(graph)),
      product_params_(std::move(product_params)),
      additive_params_(std::move(additive_params)) {
  if (!graph_) {
    throw std::invalid_argument("CompositeKernel: graph Gram is required");
  }
}

double CompositeKernel::operator()(const BaseArm& a, const BaseArm& b) const {
  const double graph_cov = graph_->entry(a.id, b.id);
  return graph_cov * matern52(a.context, b.context, product_params_) +
         matern52(a.context, b.context, additive_params_);
}

std::vector<double> CompositeKernel::continuous_params() const {
  std::vector<double> out;
  auto push = [&out](const FeatureKernelParams& p) {
    out.push_back(p.outputscale);
    for (Eigen::Index i = 0; i < p.lengthscales.size(); ++i) {
      out.push_back(p.lengthscales[i]);
    }
  };
  push(product_params_);
  push(additive_params_);
  return out;
}

std::shared_ptr<Kernel> CompositeKernel::with_continuous_params(
    const std::vector<double>& params) const {
  const std::size_t d1 = static_cast<std::size_t>(product_params_.lengthscales.size());
  const std::size_t d2 = static_cast<std::size_t>(additive_params_.lengthscales.size());
  if (params.size() != d1 + d2 + 2) {
    throw std::invalid_argument("CompositeKernel: parameter count mismatch");
  }
  constexpr double kFloor = 1e-6;
  FeatureKernelParams product = product_params_;
  FeatureKernelParams additive = additive_params_;
  std::size_t at = 0;
  product.outputscale = std::max(params[at++], kFloor);
  for (std::size_t i = 0; i < d1; ++i) {
    product.lengthscales[static_cast<Eigen::Index>(i)] = std::max(params[at++], kFloor);
  }
  additive.outputscale = std::max(params[at++], kFloor);
  for (std::size_t i = 0; i < d2; ++i) {
    additive.lengthscales[static_cast<Eigen::Index>(i)] = std::max(params[at++], kFloor);
  }
  return std::make_shared<CompositeKernel>(graph_, product, additive);
}

Matrix kernel_gram(const Kernel& kernel, const std::vector<BaseArm>& arms) {
  const auto n = static_cast<Eigen::Index>(arms.size());
  Matrix gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel(arms[static_cast<std::size_t>(i)],
                              arms[static_cast<std::size_t>(j)]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Vector kernel_cross(const Kernel& kernel, const BaseArm& a,
                    const std::vector<BaseArm>& arms) {
  Vector out(static_cast<Eigen::Index>(arms.size()));
  for (std::size_t i = 0; i < arms.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = kernel(a, arms[i]);
  }
  return out;
}

}  // namespace gpb
