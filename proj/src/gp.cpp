#include "gpbandits/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

namespace gpb {

namespace {

// Cholesky of K + noise*I. The noise term usually regularizes enough; jitter
// is added only for (near) noise-free Grams, then escalated like
// jittered_cholesky.
Matrix noisy_cholesky(Matrix gram, double noise_variance, int retries = 3) {
  const auto n = gram.rows();
  gram.diagonal().array() += noise_variance;
  double jitter = 0.0;
  if (noise_variance < 1e-12) {
    jitter = 1e-8 * std::max(gram.diagonal().maxCoeff(), 0.0);
  }
  for (int attempt = 0; attempt <= retries; ++attempt) {
    Matrix candidate = gram;
    if (jitter > 0.0) candidate.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(candidate);
    if (llt.info() == Eigen::Success) {
      return llt.matrixL();
    }
    jitter = (jitter == 0.0) ? 1e-8 * std::max(gram.diagonal().maxCoeff(), 1e-30)
                             : jitter * 10.0;
  }
  std::ostringstream msg;
  msg << "noisy_cholesky: factorization of a " << n << "x" << n
      << " system failed after jitter escalation";
  throw NumericError(msg.str());
}

void check_rewards(const std::vector<BaseArm>& arms, const Vector& rewards) {
  if (static_cast<Eigen::Index>(arms.size()) != rewards.size()) {
    throw std::invalid_argument("condition: arms/rewards length mismatch");
  }
  for (Eigen::Index i = 0; i < rewards.size(); ++i) {
    if (!std::isfinite(rewards[i])) {
      std::ostringstream msg;
      msg << "condition: non-finite reward at position " << i;
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

Matrix jittered_cholesky(Matrix gram, int retries) {
  const auto n = gram.rows();
  const double max_diag = n > 0 ? gram.diagonal().maxCoeff() : 0.0;
  if (max_diag <= 0.0) {
    // Degenerate (zero) kernel: the factor of the zero matrix.
    return Matrix::Zero(n, n);
  }
  double jitter = 1e-8 * max_diag;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    Matrix candidate = gram;
    candidate.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(candidate);
    if (llt.info() == Eigen::Success) {
      return llt.matrixL();
    }
    jitter *= 10.0;
  }
  std::ostringstream msg;
  msg << "jittered_cholesky: " << n << "x" << n
      << " Gram not factorizable after " << retries
      << " jitter escalations (final jitter " << jitter << ")";
  throw NumericError(msg.str());
}

GPState::GPState(std::shared_ptr<const Kernel> kernel, MeanFn prior_mean,
                 double noise_variance)
    : kernel_(std::move(kernel)),
      prior_mean_(std::move(prior_mean)),
      noise_variance_(noise_variance) {
  if (!kernel_) throw std::invalid_argument("GPState: kernel is required");
  if (!(noise_variance_ >= 0.0)) {
    throw std::invalid_argument("GPState: noise variance must be >= 0");
  }
}

PosteriorSummary GPState::posterior(const BaseArm& a) const {
  const double prior_var = (*kernel_)(a, a);
  if (arms_.empty()) {
    return {prior_mean_(a), prior_var, noise_variance_};
  }
  const Vector k = kernel_cross(*kernel_, a, arms_);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double mean = prior_mean_(a) + v.dot(whitened_);
  const double variance = std::max(prior_var - v.squaredNorm(), 0.0);
  return {mean, variance, noise_variance_};
}

Matrix GPState::posterior_cov(const std::vector<BaseArm>& arms) const {
  Matrix block = kernel_gram(*kernel_, arms);
  if (arms_.empty()) return block;
  const auto m = static_cast<Eigen::Index>(arms.size());
  Matrix cross(static_cast<Eigen::Index>(arms_.size()), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    cross.col(j) = kernel_cross(*kernel_, arms[static_cast<std::size_t>(j)], arms_);
  }
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(cross);
  block -= v.transpose() * v;
  return 0.5 * (block + block.transpose());
}

GPState GPState::condition(const std::vector<BaseArm>& arms,
                           const Vector& rewards) const {
  check_rewards(arms, rewards);
  if (arms.empty()) return *this;

  GPState next(*this);
  const auto n_old = static_cast<Eigen::Index>(arms_.size());
  const auto n_new = static_cast<Eigen::Index>(arms.size());

  Vector prior_new(n_new);
  for (Eigen::Index i = 0; i < n_new; ++i) {
    prior_new[i] = prior_mean_(arms[static_cast<std::size_t>(i)]);
  }
  Matrix k_new = kernel_gram(*kernel_, arms);

  if (n_old == 0) {
    next.chol_ = noisy_cholesky(std::move(k_new), noise_variance_);
    next.whitened_ = next.chol_.triangularView<Eigen::Lower>().solve(
        Vector(rewards - prior_new));
  } else {
    Matrix cross(n_old, n_new);
    for (Eigen::Index j = 0; j < n_new; ++j) {
      cross.col(j) =
          kernel_cross(*kernel_, arms[static_cast<std::size_t>(j)], arms_);
    }
    const Matrix m = chol_.triangularView<Eigen::Lower>().solve(cross);
    Matrix schur = k_new - m.transpose() * m;
    schur = 0.5 * (schur + schur.transpose());
    const Matrix l_s = noisy_cholesky(std::move(schur), noise_variance_);

    Matrix extended = Matrix::Zero(n_old + n_new, n_old + n_new);
    extended.topLeftCorner(n_old, n_old) = chol_;
    extended.bottomLeftCorner(n_new, n_old) = m.transpose();
    extended.bottomRightCorner(n_new, n_new) = l_s;
    next.chol_ = std::move(extended);

    const Vector resid = rewards - prior_new - m.transpose() * whitened_;
    Vector w(n_old + n_new);
    w.head(n_old) = whitened_;
    w.tail(n_new) = l_s.triangularView<Eigen::Lower>().solve(resid);
    next.whitened_ = std::move(w);
  }

  next.arms_.insert(next.arms_.end(), arms.begin(), arms.end());
  Vector y(n_old + n_new);
  if (n_old > 0) y.head(n_old) = y_;
  y.tail(n_new) = rewards;
  next.y_ = std::move(y);
  return next;
}

Vector sample_function(const Kernel& kernel, const MeanFn& prior_mean,
                       const std::vector<BaseArm>& arms, std::uint64_t seed) {
  if (arms.empty()) {
    throw std::invalid_argument("sample_function: arm list must be non-empty");
  }
  const Matrix l = jittered_cholesky(kernel_gram(kernel, arms));
  Rng rng(seed);
  Vector z(static_cast<Eigen::Index>(arms.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
  Vector f = l * z;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    f[static_cast<Eigen::Index>(i)] += prior_mean(arms[i]);
  }
  return f;
}

Vector sample_posterior_independent(const GPState& state,
                                    const std::vector<BaseArm>& arms,
                                    std::uint64_t seed) {
  Rng rng(seed);
  Vector out(static_cast<Eigen::Index>(arms.size()));
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const PosteriorSummary p = state.posterior(arms[i]);
    out[static_cast<Eigen::Index>(i)] =
        p.mean + std::sqrt(std::max(p.variance, 0.0)) * rng.gaussian();
  }
  return out;
}

PooledGPLearner::PooledGPLearner(std::shared_ptr<const Kernel> kernel,
                                 const MeanFn& prior_mean,
                                 std::vector<BaseArm> pool, double noise_variance)
    : pool_(std::move(pool)), noise_variance_(noise_variance) {
  if (pool_.empty()) {
    throw std::invalid_argument("PooledGPLearner: pool must be non-empty");
  }
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (pool_[i].id != static_cast<int>(i)) {
      throw std::invalid_argument(
          "PooledGPLearner: pool arm ids must equal their positions");
    }
  }
  mean_.resize(static_cast<Eigen::Index>(pool_.size()));
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    mean_[static_cast<Eigen::Index>(i)] = prior_mean(pool_[i]);
  }
  cov_ = kernel_gram(*kernel, pool_);
}

void PooledGPLearner::update(const SuperArm& chosen, const Vector& rewards) {
  if (static_cast<Eigen::Index>(chosen.size()) != rewards.size()) {
    throw std::invalid_argument("PooledGPLearner: arms/rewards length mismatch");
  }
  if (chosen.empty()) return;
  const auto k = static_cast<Eigen::Index>(chosen.size());
  const auto n = cov_.rows();

  Matrix cross(n, k);  // Sigma[:, B]
  Matrix block(k, k);  // Sigma[B, B] + noise I
  Vector resid(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const int id = chosen[static_cast<std::size_t>(j)];
    if (id < 0 || id >= n) {
      throw std::invalid_argument("PooledGPLearner: arm id outside the pool");
    }
    cross.col(j) = cov_.col(id);
    resid[j] = rewards[j] - mean_[id];
    for (Eigen::Index i = 0; i < k; ++i) {
      block(i, j) = cov_(chosen[static_cast<std::size_t>(i)], id);
    }
  }
  block.diagonal().array() += noise_variance_;
  const Eigen::LLT<Matrix> llt(block);
  if (llt.info() != Eigen::Success) {
    throw NumericError("PooledGPLearner: round block factorization failed");
  }
  mean_ += cross * llt.solve(resid);
  cov_ -= cross * llt.solve(cross.transpose());
  cov_ = 0.5 * (cov_ + cov_.transpose());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cov_(i, i) < 0.0) cov_(i, i) = 0.0;
  }
}

PosteriorSummary PooledGPLearner::posterior(int arm_id) const {
  if (arm_id < 0 || arm_id >= cov_.rows()) {
    throw std::invalid_argument("PooledGPLearner: arm id outside the pool");
  }
  return {mean_[arm_id], std::max(cov_(arm_id, arm_id), 0.0), noise_variance_};
}

Matrix PooledGPLearner::posterior_cov(const SuperArm& arms) const {
  const auto k = static_cast<Eigen::Index>(arms.size());
  Matrix block(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      block(i, j) = cov_(arms[static_cast<std::size_t>(i)],
                         arms[static_cast<std::size_t>(j)]);
    }
  }
  return block;
}

}  // namespace gpb
