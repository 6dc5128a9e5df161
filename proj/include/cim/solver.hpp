/* Copyright 2026 The CIM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
=============================================================================*/

#pragma once

// Non-negative l1-regularised least squares
//
//     min_s  ||x - D s||_2^2 + 2 alpha sum_k s_k   subject to  s >= 0
//
// solved by ADMM with the split s = q:
//
//     s <- (D^T D + rho I)^{-1} (D^T x + rho q - m)
//     q <- max{ s + m / rho - (alpha / rho) 1, 0 }
//     m <- m + theta (s - q)
//
// The Gram system is factored once per solve. Reported weights are the q
// iterate, which is non-negative by construction.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cim/error.hpp"
#include "cim/types.hpp"

namespace cim {

struct SolverConfig {
  double alpha = 0.1;
  double rho = 1.0;
  std::optional<double> theta;  // dual step; defaults to rho
  int max_iters = 1000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  bool record_trace = false;

  double effective_theta() const noexcept { return theta.value_or(rho); }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be a finite value >= 0");
    if (!(rho > 0.0) || !std::isfinite(rho)) fail("rho must be a finite value > 0");
    if (!(effective_theta() > 0.0) || !std::isfinite(effective_theta())) fail("theta must be a finite value > 0");
    if (max_iters < 1) fail("max_iters must be >= 1");
    if (!(tol_primal > 0.0)) fail("tol_primal must be > 0");
    if (!(tol_dual > 0.0)) fail("tol_dual must be > 0");
  }
};

struct SolverState {
  Eigen::VectorXd s;
  Eigen::VectorXd q;
  Eigen::VectorXd m;
  int iteration = 0;
  double primal_residual = 0.0;  // ||s - q||
  double dual_residual = 0.0;    // rho ||q - q_prev||
};

struct ResidualSample {
  int iteration;
  double primal_residual;
  double dual_residual;
};

struct WeightVector {
  std::vector<double> weights;
  bool converged = false;
  int iterations_used = 0;
  double final_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<ResidualSample> trace;

  std::size_t size() const noexcept { return weights.size(); }

  Eigen::Map<const Eigen::VectorXd> as_eigen() const {
    return Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  }
};

/// Coefficients at or below this are treated as inactive by kkt_violation.
inline constexpr double kActivityEps = 1e-9;

namespace detail {

inline void check_problem_shape(const Dictionary& d, std::size_t dim) {
  if (static_cast<std::size_t>(d.rows()) != dim) {
    throw Error(ErrorCode::ShapeMismatch, "dictionary has " + std::to_string(d.rows()) +
                                              " rows but the feature vector has dim " + std::to_string(dim));
  }
  if (d.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "dictionary has no columns");
}

inline void check_coefficients(const Dictionary& d, std::size_t k) {
  if (static_cast<std::size_t>(d.cols()) != k) {
    throw Error(ErrorCode::ShapeMismatch, "dictionary has " + std::to_string(d.cols()) +
                                              " columns but the coefficient vector has length " + std::to_string(k));
  }
}

}  // namespace detail

inline double objective(const Dictionary& d, std::span<const double> x, std::span<const double> s, double alpha) {
  detail::check_problem_shape(d, x.size());
  detail::check_coefficients(d, s.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(s.size()));
  return (xv - d * sv).squaredNorm() + 2.0 * alpha * sv.cwiseAbs().sum();
}

inline double objective(const Dictionary& d, const FeatureVector& x, const WeightVector& s, double alpha) {
  return objective(d, x.data(), s.weights, alpha);
}

/// Largest violation of the first-order optimality conditions. With
/// g = 2 D^T (D s - x) + 2 alpha, active coordinates need g_k = 0 and
/// inactive ones need g_k >= 0.
inline double kkt_violation(const Dictionary& d, std::span<const double> x, std::span<const double> s, double alpha) {
  detail::check_problem_shape(d, x.size());
  detail::check_coefficients(d, s.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(s.size()));
  if ((sv.array() < 0.0).any()) throw Error(ErrorCode::InvalidConfig, "kkt_violation requires s >= 0");
  const Eigen::VectorXd g = 2.0 * (d.transpose() * (d * sv - xv)).array() + 2.0 * alpha;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double v = sv[k] > kActivityEps ? std::abs(g[k]) : std::max(-g[k], 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

inline double kkt_violation(const Dictionary& d, const FeatureVector& x, const WeightVector& s, double alpha) {
  return kkt_violation(d, x.data(), s.weights, alpha);
}

/// ADMM driver. Exposed as a class so callers can step it and observe the
/// state; solve() below is the usual entry point.
class AdmmSolver {
 public:
  AdmmSolver(const Dictionary& d, std::span<const double> x, SolverConfig cfg)
      : d_(d), x_(x.begin(), x.end()), cfg_(std::move(cfg)) {
    cfg_.validate();
    detail::check_problem_shape(d_, x_.size());
    if (!d_.allFinite()) throw Error(ErrorCode::NonFiniteValue, "dictionary contains non-finite entries");
    for (double v : x_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "feature vector contains non-finite entries");
    }

    const Eigen::Index k = d_.cols();
    Eigen::MatrixXd gram = d_.transpose() * d_;
    gram.diagonal().array() += cfg_.rho;
    gram_.compute(gram);
    if (gram_.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "Cholesky factorization of D^T D + rho I failed");
    }
    dtx_ = d_.transpose() * Eigen::Map<const Eigen::VectorXd>(x_.data(), static_cast<Eigen::Index>(x_.size()));
    state_.s = Eigen::VectorXd::Zero(k);
    state_.q = Eigen::VectorXd::Zero(k);
    state_.m = Eigen::VectorXd::Zero(k);
  }

  const SolverState& state() const noexcept { return state_; }
  const SolverConfig& config() const noexcept { return cfg_; }

  /// One sweep of the s, q, m updates. Returns true once both residuals are
  /// under tolerance.
  bool step() {
    const double rho = cfg_.rho;
    const double theta = cfg_.effective_theta();

    state_.s = gram_.solve(dtx_ + rho * state_.q - state_.m);
    q_prev_ = state_.q;
    state_.q = (state_.s + state_.m / rho).array() - cfg_.alpha / rho;
    state_.q = state_.q.cwiseMax(0.0);
    state_.m += theta * (state_.s - state_.q);

    ++state_.iteration;
    state_.primal_residual = (state_.s - state_.q).norm();
    state_.dual_residual = rho * (state_.q - q_prev_).norm();
    if (!state_.s.allFinite() || !state_.m.allFinite() || !std::isfinite(state_.primal_residual) ||
        !std::isfinite(state_.dual_residual)) {
      throw Error(ErrorCode::NonFiniteIterate,
                  "ADMM iterate became non-finite at iteration " + std::to_string(state_.iteration));
    }
    return state_.primal_residual <= cfg_.tol_primal && state_.dual_residual <= cfg_.tol_dual;
  }

  WeightVector run() {
    WeightVector out;
    bool done = false;
    while (!done && state_.iteration < cfg_.max_iters) {
      done = step();
      if (cfg_.record_trace) {
        out.trace.push_back({state_.iteration, state_.primal_residual, state_.dual_residual});
      }
    }
    out.weights.assign(state_.q.data(), state_.q.data() + state_.q.size());
    out.converged = done;
    out.iterations_used = state_.iteration;
    out.primal_residual = state_.primal_residual;
    out.dual_residual = state_.dual_residual;
    out.final_objective = objective(d_, x_, out.weights, cfg_.alpha);
    return out;
  }

 private:
  Dictionary d_;
  std::vector<double> x_;
  SolverConfig cfg_;
  Eigen::LLT<Eigen::MatrixXd> gram_;
  Eigen::VectorXd dtx_;
  Eigen::VectorXd q_prev_;
  SolverState state_;
};

inline WeightVector solve(const Dictionary& d, std::span<const double> x, const SolverConfig& cfg = {}) {
  return AdmmSolver(d, x, cfg).run();
}

inline WeightVector solve(const Dictionary& d, const FeatureVector& x, const SolverConfig& cfg = {}) {
  return solve(d, x.data(), cfg);
}

inline nlohmann::json to_json(const SolverConfig& cfg) {
  return {{"alpha", cfg.alpha},         {"rho", cfg.rho},           {"theta", cfg.effective_theta()},
          {"max_iters", cfg.max_iters}, {"tol_primal", cfg.tol_primal}, {"tol_dual", cfg.tol_dual}};
}

/// Diagnostics record: iterations, residuals, objective and convergence flag,
/// plus the residual trace when one was recorded.
inline nlohmann::json diagnostics_json(const WeightVector& w, const SolverConfig& cfg) {
  nlohmann::json j{{"converged", w.converged},
                   {"iterations", w.iterations_used},
                   {"primal_residual", w.primal_residual},
                   {"dual_residual", w.dual_residual},
                   {"objective", w.final_objective},
                   {"weights", w.weights},
                   {"config", to_json(cfg)}};
  if (!w.trace.empty()) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& r : w.trace) {
      trace.push_back({{"iteration", r.iteration}, {"primal", r.primal_residual}, {"dual", r.dual_residual}});
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

}  // namespace cim
