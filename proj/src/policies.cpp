#include "gpbandits/policies.hpp"

#include <cmath>
#include <sstream>

namespace gpb {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kE = 2.71828182845904523536;
constexpr double kEtaCeiling = 0.5 - 1e-12;
}  // namespace

double ucb_beta(int t, double cardinality, double scale) {
  if (t < 1) throw std::invalid_argument("ucb_beta: t must be >= 1");
  if (!(cardinality >= 1.0)) {
    throw std::invalid_argument("ucb_beta: cardinality must be >= 1");
  }
  const double tt = static_cast<double>(t);
  return scale * 2.0 * std::log(cardinality * tt * tt / std::sqrt(2.0 * kPi));
}

double bucb_eta(int t, double cardinality, double xi, double omega) {
  if (t < 1) throw std::invalid_argument("bucb_eta: t must be >= 1");
  if (!(cardinality >= 1.0)) {
    throw std::invalid_argument("bucb_eta: cardinality must be >= 1");
  }
  const double eta = std::pow(2.0 * kPi, omega / 2.0) /
                     (2.0 * std::pow(cardinality, omega) *
                      std::pow(static_cast<double>(t), xi));
  // Huge cardinalities (tau_t^d) can underflow eta to 0; keep it usable.
  return std::min(std::max(eta, 1e-300), kEtaCeiling);
}

double bucb_beta(int t, double cardinality, double xi, double omega) {
  const double eta = bucb_eta(t, cardinality, xi, omega);
  const double q = erf_inv_complement(2.0 * eta);
  return 2.0 * q * q;
}

double c_omega(double omega) {
  if (!(omega > 1.0)) {
    throw std::invalid_argument("c_omega: omega must exceed 1");
  }
  return std::pow(std::sqrt(kPi) * omega / std::sqrt(2.0 * kE * (omega - 1.0)),
                  1.0 / omega);
}

double ScheduleParams::beta(int t) const {
  double value = 0.0;
  switch (family) {
    case PolicyFamily::kUCB:
    case PolicyFamily::kTS:
      value = ucb_beta(t, cardinality, beta_scale);
      break;
    case PolicyFamily::kBUCB:
      value = beta_scale * bucb_beta(t, cardinality, xi, omega);
      break;
  }
  return std::max(value, 0.0);
}

double ScheduleParams::eta(int t) const {
  return bucb_eta(t, cardinality, xi, omega);
}

std::vector<double> compute_indices(PolicyFamily family,
                                    const std::vector<PosteriorSummary>& posteriors,
                                    int t, const ScheduleParams& schedule,
                                    const IndexOptions& options, Rng& rng) {
  const bool minimize = options.mode == IndexMode::kMinimize;
  const double beta = schedule.beta(t);
  const double sqrt_beta = std::sqrt(beta);
  const double eta = family == PolicyFamily::kBUCB ? schedule.eta(t) : 0.0;

  std::vector<double> indices;
  indices.reserve(posteriors.size());
  for (const PosteriorSummary& p : posteriors) {
    const double sigma = std::sqrt(std::max(p.variance, 0.0));
    double optimistic = p.mean;
    switch (family) {
      case PolicyFamily::kUCB:
        optimistic = minimize ? p.mean - sqrt_beta * sigma
                              : p.mean + sqrt_beta * sigma;
        break;
      case PolicyFamily::kBUCB:
        optimistic = gaussian_quantile(minimize ? eta : 1.0 - eta, p.mean,
                                       std::max(p.variance, 0.0));
        break;
      case PolicyFamily::kTS:
        optimistic = p.mean + sigma * rng.gaussian();
        break;
    }
    if (minimize) {
      const double rect_var = options.rectifier == RectifierVariance::kNoise
                                  ? p.noise_variance
                                  : std::max(p.variance, 0.0);
      indices.push_back(rectified_mean(optimistic, rect_var));
    } else {
      indices.push_back(optimistic);
    }
  }
  return indices;
}

PosteriorSummary BIState::posterior(int edge) const {
  if (edge < 0 || edge >= mean.size()) {
    throw std::invalid_argument("BIState: edge out of range");
  }
  return {mean[edge], variance[edge], noise_variance};
}

BIState make_bi_state(int num_edges, double prior_mean, double prior_variance,
                      double noise_variance) {
  return make_bi_state(Vector::Constant(num_edges, prior_mean), prior_variance,
                       noise_variance);
}

BIState make_bi_state(Vector prior_means, double prior_variance,
                      double noise_variance) {
  if (!(prior_variance > 0.0) || !(noise_variance > 0.0)) {
    throw std::invalid_argument("make_bi_state: variances must be > 0");
  }
  BIState state;
  state.variance = Vector::Constant(prior_means.size(), prior_variance);
  state.mean = std::move(prior_means);
  state.noise_variance = noise_variance;
  return state;
}

BIState bi_update(const BIState& state, int edge, const Vector& observations) {
  if (edge < 0 || edge >= state.mean.size()) {
    throw std::invalid_argument("bi_update: edge out of range");
  }
  if (observations.size() == 0) return state;
  BIState next = state;
  const double n = static_cast<double>(observations.size());
  const double sum = observations.sum();
  const double prec0 = 1.0 / state.variance[edge];
  const double prec_obs = n / state.noise_variance;
  const double var_n = 1.0 / (prec0 + prec_obs);
  next.variance[edge] = var_n;
  next.mean[edge] =
      var_n * (prec0 * state.mean[edge] + sum / state.noise_variance);
  return next;
}

}  // namespace gpb
