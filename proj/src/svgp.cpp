#include "gpbandits/svgp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace gpb {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kEigFloor = 1e-10;

// Jittered inducing Gram; the same matrix is used everywhere (prior
// covariance, KL reference, conditionals) so that q = prior is an exact
// fixed point.
Matrix inducing_gram(const Kernel& kernel, const std::vector<BaseArm>& inducing) {
  Matrix kzz = kernel_gram(kernel, inducing);
  const double max_diag = kzz.diagonal().maxCoeff();
  if (max_diag > 0.0) kzz.diagonal().array() += 1e-8 * max_diag;
  return kzz;
}

Eigen::LLT<Matrix> factor_or_throw(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": " << m.rows() << "x" << m.cols()
        << " factorization failed";
    throw NumericError(msg.str());
  }
  return llt;
}

double logdet_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

double elbo_impl(const SVGPState& state, const Matrix& kzz,
                 const std::vector<BaseArm>& batch_arms,
                 const Vector& batch_rewards, int total_count) {
  const auto llt = factor_or_throw(kzz, "svgp_elbo");
  const double noise = state.noise_variance;

  double ell = 0.0;
  const auto b = static_cast<Eigen::Index>(batch_arms.size());
  if (b > 0) {
    for (Eigen::Index i = 0; i < b; ++i) {
      const BaseArm& a = batch_arms[static_cast<std::size_t>(i)];
      const Vector kz = kernel_cross(*state.kernel, a, state.inducing);
      const Vector alpha = llt.solve(kz);
      const double q_mean = alpha.dot(state.m);
      const double cond_var =
          std::max((*state.kernel)(a, a) - alpha.dot(kz), 0.0);
      const double q_var = cond_var + alpha.dot(state.S * alpha);
      const double resid = batch_rewards[i] - state.prior_mean(a) - q_mean;
      ell += -0.5 * (kLog2Pi + std::log(noise)) -
             (resid * resid + q_var) / (2.0 * noise);
    }
    ell *= static_cast<double>(total_count) / static_cast<double>(b);
  }

  const auto llt_s = factor_or_throw(state.S, "svgp_elbo (variational cov)");
  const auto m_dim = state.m.size();
  const double trace_term = llt.solve(state.S).trace();
  const double maha = state.m.dot(llt.solve(state.m));
  const double kl = 0.5 * (trace_term + maha - static_cast<double>(m_dim) +
                           logdet_from_llt(llt) - logdet_from_llt(llt_s));
  return ell - kl;
}

// Flattened continuous coordinates: inducing contexts first, then kernel
// hyperparameters.
std::vector<double> continuous_coordinates(const SVGPState& state) {
  std::vector<double> coords;
  for (const BaseArm& z : state.inducing) {
    for (Eigen::Index i = 0; i < z.context.size(); ++i) {
      coords.push_back(z.context[i]);
    }
  }
  const auto kernel_params = state.kernel->continuous_params();
  coords.insert(coords.end(), kernel_params.begin(), kernel_params.end());
  return coords;
}

SVGPState with_coordinates(const SVGPState& state,
                           const std::vector<double>& coords) {
  SVGPState next = state;
  std::size_t at = 0;
  for (BaseArm& z : next.inducing) {
    for (Eigen::Index i = 0; i < z.context.size(); ++i) {
      z.context[i] = coords[at++];
    }
  }
  const auto kernel_params = state.kernel->continuous_params();
  if (!kernel_params.empty()) {
    std::vector<double> next_params(coords.begin() + static_cast<long>(at),
                                    coords.end());
    next.kernel = state.kernel->with_continuous_params(next_params);
  }
  return next;
}

}  // namespace

SVGPState make_svgp_state(std::shared_ptr<const Kernel> kernel,
                          MeanFn prior_mean, double noise_variance,
                          std::vector<BaseArm> inducing) {
  if (!kernel) throw std::invalid_argument("make_svgp_state: kernel required");
  if (inducing.empty()) {
    throw std::invalid_argument("make_svgp_state: need >= 1 inducing point");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("make_svgp_state: noise variance must be > 0");
  }
  SVGPState state;
  state.kernel = std::move(kernel);
  state.prior_mean = std::move(prior_mean);
  state.noise_variance = noise_variance;
  state.inducing = std::move(inducing);
  state.m = Vector::Zero(static_cast<Eigen::Index>(state.inducing.size()));
  state.S = inducing_gram(*state.kernel, state.inducing);
  return state;
}

PosteriorSummary svgp_posterior(const SVGPState& state, const BaseArm& a) {
  const Matrix kzz = inducing_gram(*state.kernel, state.inducing);
  const auto llt = factor_or_throw(kzz, "svgp_posterior");
  const Vector kz = kernel_cross(*state.kernel, a, state.inducing);
  const Vector alpha = llt.solve(kz);
  const double mean = state.prior_mean(a) + alpha.dot(state.m);
  const double cond_var = std::max((*state.kernel)(a, a) - alpha.dot(kz), 0.0);
  const double variance = std::max(cond_var + alpha.dot(state.S * alpha), 0.0);
  return {mean, variance, state.noise_variance};
}

Matrix svgp_posterior_cov(const SVGPState& state,
                          const std::vector<BaseArm>& arms) {
  const Matrix kzz = inducing_gram(*state.kernel, state.inducing);
  const auto llt = factor_or_throw(kzz, "svgp_posterior_cov");
  const auto n = static_cast<Eigen::Index>(arms.size());
  Matrix cross(static_cast<Eigen::Index>(state.inducing.size()), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    cross.col(j) =
        kernel_cross(*state.kernel, arms[static_cast<std::size_t>(j)],
                     state.inducing);
  }
  const Matrix alpha = llt.solve(cross);
  Matrix cov = kernel_gram(*state.kernel, arms) - alpha.transpose() * cross +
               alpha.transpose() * state.S * alpha;
  return 0.5 * (cov + cov.transpose());
}

double svgp_elbo(const SVGPState& state, const std::vector<BaseArm>& batch_arms,
                 const Vector& batch_rewards, int total_count) {
  if (static_cast<Eigen::Index>(batch_arms.size()) != batch_rewards.size()) {
    throw std::invalid_argument("svgp_elbo: batch arms/rewards mismatch");
  }
  const Matrix kzz = inducing_gram(*state.kernel, state.inducing);
  return elbo_impl(state, kzz, batch_arms, batch_rewards, total_count);
}

SVGPState svgp_ngd_step(const SVGPState& state,
                        const std::vector<BaseArm>& batch_arms,
                        const Vector& batch_rewards, int total_count,
                        double ngd_rate, double inner_rate, int batch_id) {
  if (static_cast<Eigen::Index>(batch_arms.size()) != batch_rewards.size()) {
    throw std::invalid_argument("svgp_ngd_step: batch arms/rewards mismatch");
  }
  SVGPState next = state;
  const auto m_dim = state.m.size();
  const Matrix kzz = inducing_gram(*state.kernel, state.inducing);

  if (ngd_rate > 0.0) {
    const auto llt = factor_or_throw(kzz, "svgp_ngd_step");
    const auto llt_s = factor_or_throw(state.S, "svgp_ngd_step (variational cov)");
    const Matrix kzz_inv = llt.solve(Matrix::Identity(m_dim, m_dim));
    const Matrix s_inv = llt_s.solve(Matrix::Identity(m_dim, m_dim));

    // Natural parameters of q and the batch sufficient statistics.
    Vector theta1 = s_inv * state.m;
    Matrix theta2 = -0.5 * s_inv;

    const double noise = state.noise_variance;
    const auto b = static_cast<Eigen::Index>(batch_arms.size());
    const double scale =
        b > 0 ? static_cast<double>(total_count) / static_cast<double>(b) : 0.0;
    Matrix phi = Matrix::Zero(m_dim, m_dim);
    Vector bvec = Vector::Zero(m_dim);
    for (Eigen::Index i = 0; i < b; ++i) {
      const BaseArm& a = batch_arms[static_cast<std::size_t>(i)];
      const Vector kz = kernel_cross(*state.kernel, a, state.inducing);
      const Vector alpha = llt.solve(kz);
      phi.noalias() += alpha * alpha.transpose();
      bvec.noalias() += alpha * (batch_rewards[i] - state.prior_mean(a));
    }
    phi *= scale / noise;
    bvec *= scale / noise;
    if (!phi.allFinite() || !bvec.allFinite()) {
      std::ostringstream msg;
      msg << "svgp_ngd_step: non-finite natural gradient (batch " << batch_id
          << ")";
      throw NumericError(msg.str());
    }

    theta1 = (1.0 - ngd_rate) * theta1 + ngd_rate * bvec;
    theta2 = (1.0 - ngd_rate) * theta2 - 0.5 * ngd_rate * (kzz_inv + phi);

    Matrix precision = -2.0 * theta2;
    precision = 0.5 * (precision + precision.transpose());
    const auto llt_p = factor_or_throw(precision, "svgp_ngd_step (precision)");
    Matrix s_new = llt_p.solve(Matrix::Identity(m_dim, m_dim));
    s_new = 0.5 * (s_new + s_new.transpose());
    // PSD re-projection with an eigenvalue floor.
    Eigen::SelfAdjointEigenSolver<Matrix> es(s_new);
    if (es.info() != Eigen::Success) {
      throw NumericError("svgp_ngd_step: covariance re-projection failed");
    }
    Vector evals = es.eigenvalues().cwiseMax(kEigFloor);
    s_new = es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
    s_new = 0.5 * (s_new + s_new.transpose());
    next.S = std::move(s_new);
    next.m = next.S * theta1;
    if (!next.m.allFinite()) {
      std::ostringstream msg;
      msg << "svgp_ngd_step: non-finite variational mean (batch " << batch_id
          << ")";
      throw NumericError(msg.str());
    }
  }

  if (inner_rate > 0.0) {
    std::vector<double> coords = continuous_coordinates(next);
    if (!coords.empty()) {
      std::vector<double> grad(coords.size(), 0.0);
      for (std::size_t i = 0; i < coords.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::fabs(coords[i]));
        std::vector<double> probe = coords;
        probe[i] = coords[i] + h;
        SVGPState plus = with_coordinates(next, probe);
        const double f_plus =
            elbo_impl(plus, inducing_gram(*plus.kernel, plus.inducing),
                      batch_arms, batch_rewards, total_count);
        probe[i] = coords[i] - h;
        SVGPState minus = with_coordinates(next, probe);
        const double f_minus =
            elbo_impl(minus, inducing_gram(*minus.kernel, minus.inducing),
                      batch_arms, batch_rewards, total_count);
        grad[i] = (f_plus - f_minus) / (2.0 * h);
        if (!std::isfinite(grad[i])) {
          std::ostringstream msg;
          msg << "svgp_ngd_step: non-finite inner gradient at coordinate " << i
              << " (batch " << batch_id << ")";
          throw NumericError(msg.str());
        }
      }
      for (std::size_t i = 0; i < coords.size(); ++i) {
        coords[i] += inner_rate * grad[i];
      }
      next = with_coordinates(next, coords);
    }
  }

  return next;
}

std::vector<BaseArm> select_inducing(const std::map<int, int>& visit_counts,
                                     const std::vector<BaseArm>& contexts,
                                     int m) {
  std::vector<std::pair<int, int>> visited;  // (edge, count)
  for (const auto& [edge, count] : visit_counts) {
    if (count > 0) visited.emplace_back(edge, count);
  }
  if (visited.empty()) {
    throw std::invalid_argument("select_inducing: no visited edges");
  }
  std::sort(visited.begin(), visited.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(m, 0)),
                            visited.size());
  std::vector<BaseArm> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const int edge = visited[i].first;
    if (edge < 0 || edge >= static_cast<int>(contexts.size())) {
      throw std::invalid_argument("select_inducing: edge outside context list");
    }
    out.push_back(contexts[static_cast<std::size_t>(edge)]);
  }
  return out;
}

}  // namespace gpb
