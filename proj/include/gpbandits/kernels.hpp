// Positive-semidefinite covariance functions over base arms.
//
// Three building blocks are provided: the Matern-5/2 kernel over context
// vectors with per-dimension lengthscales, a graph Matern kernel over the
// edges of a directed graph built from the incidence Laplacian of its line
// graph, and the composite kernel k_G * k_f + k_f' that multiplies graph
// structure into one feature kernel and adds a second, independently
// parameterized feature kernel.
//
// Every Gram matrix produced here is symmetric and PSD up to roundoff; the
// factorization helpers in gp.hpp add jitter before decomposing.

#ifndef GPBANDITS_KERNELS_HPP_
#define GPBANDITS_KERNELS_HPP_

#include <memory>
#include <vector>

#include "gpbandits/common.hpp"

namespace gpb {

// Matern-5/2 hyperparameters. The outputscale multiplies the correlation
// directly, so k(x, x) == outputscale.
struct FeatureKernelParams {
  double outputscale = 1.0;
  Vector lengthscales;  // one positive entry per context dimension

  FeatureKernelParams() = default;
  FeatureKernelParams(double outputscale_, Vector lengthscales_);
};

// Graph Matern hyperparameters: smoothness nu_g, scale kappa_g, outputscale
// sigma_g multiplying the covariance matrix directly.
struct GraphKernelParams {
  double nu_g = 2.0;
  double kappa_g = 1.0;
  double sigma_g = 1.0;

  GraphKernelParams() = default;
  GraphKernelParams(double nu, double kappa, double sigma);
};

// A weighted legal connection (e1 -> e2) of a line graph. The weight is
// mean-edge-length / length(e1).
struct WeightedConnection {
  int from = -1;
  int to = -1;
  double weight = 1.0;
};

// Dense covariance matrix over a fixed edge list, indexed by edge id.
struct GramMatrix {
  Matrix cov;

  int size() const { return static_cast<int>(cov.rows()); }
  // Covariance between two indexed edges; throws std::invalid_argument for
  // out-of-range ids.
  double entry(int e1, int e2) const;
};

// Lengthscale-weighted Euclidean distance between contexts.
double feature_distance(const Vector& x, const Vector& xp,
                        const FeatureKernelParams& params);

// Closed-form Matern-5/2: outputscale * (1 + sqrt5 D + 5D^2/3) exp(-sqrt5 D).
// Dimension mismatch between x, x' and the lengthscales is an input error.
double matern52(const Vector& x, const Vector& xp,
                const FeatureKernelParams& params);

// Incidence Laplacian Delta_I = B B^T where B has one column per connection
// c = (e1, e2) with -w at row e1 and +w at row e2. Connections referencing
// edges outside [0, num_edges) are input errors.
Matrix incidence_laplacian(int num_edges,
                           const std::vector<WeightedConnection>& connections);

// Graph Matern Gram over all edges:
//   sigma_g * U (2 nu_g / kappa_g^2 I + Lambda)^{-nu_g} U^T
// from the dense symmetric eigendecomposition of the incidence Laplacian.
GramMatrix graph_matern_gram(int num_edges,
                             const std::vector<WeightedConnection>& connections,
                             const GraphKernelParams& params);

// Covariance function over base arms.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual double operator()(const BaseArm& a, const BaseArm& b) const = 0;

  // Continuous hyperparameters exposed for first-order updates (outputscales
  // and lengthscales); kernels without tunables return an empty vector.
  virtual std::vector<double> continuous_params() const { return {}; }
  virtual std::shared_ptr<Kernel> with_continuous_params(
      const std::vector<double>& params) const;
};

// Matern-5/2 on contexts only; ignores the edge identity.
class Matern52Kernel : public Kernel {
 public:
  explicit Matern52Kernel(FeatureKernelParams params)
      : params_(std::move(params)) {}

  double operator()(const BaseArm& a, const BaseArm& b) const override {
    return matern52(a.context, b.context, params_);
  }

  std::vector<double> continuous_params() const override;
  std::shared_ptr<Kernel> with_continuous_params(
      const std::vector<double>& params) const override;

  const FeatureKernelParams& params() const { return params_; }

 private:
  FeatureKernelParams params_;
};

// k(a, a') = k_G(e, e') * k_f(x, x') + k_f'(x, x'). The two feature kernels
// carry independent parameter sets; arm ids index the shared graph Gram.
class CompositeKernel : public Kernel {
 public:
  CompositeKernel(std::shared_ptr<const GramMatrix> graph,
                  FeatureKernelParams product_params,
                  FeatureKernelParams additive_params);

  double operator()(const BaseArm& a, const BaseArm& b) const override;

  std::vector<double> continuous_params() const override;
  std::shared_ptr<Kernel> with_continuous_params(
      const std::vector<double>& params) const override;

  const GramMatrix& graph() const { return *graph_; }

 private:
  std::shared_ptr<const GramMatrix> graph_;
  FeatureKernelParams product_params_;
  FeatureKernelParams additive_params_;
};

// Dense Gram of a kernel over a finite arm list.
Matrix kernel_gram(const Kernel& kernel, const std::vector<BaseArm>& arms);

// Cross-covariances k(a, arms[i]).
Vector kernel_cross(const Kernel& kernel, const BaseArm& a,
                    const std::vector<BaseArm>& arms);

}  // namespace gpb

#endif  // GPBANDITS_KERNELS_HPP_
