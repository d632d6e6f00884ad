#include "hpred/irl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hpred/error.hpp"

namespace hpred::irl {

FeatureVector& FeatureVector::operator+=(const FeatureVector& o) {
  proximity += o.proximity;
  speed_gap += o.speed_gap;
  accel += o.accel;
  lateral_dev += o.lateral_dev;
  return *this;
}

double CostWeights::l1() const {
  double total = 0.0;
  for (double t : theta) total += std::abs(t);
  return total;
}

CostWeights CostWeights::normalized() const {
  const double n = l1();
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "cannot normalize zero weights");
  CostWeights out = *this;
  for (double& t : out.theta) t /= n;
  return out;
}

double CostWeights::dot(const FeatureVector& f) const {
  const auto v = f.values();
  double c = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) c += theta[k] * v[k];
  return c;
}

void validate(const CostWeights& w) {
  for (double t : w.theta) {
    if (!std::isfinite(t) || t < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "cost weights must be finite and non-negative");
    }
  }
}

FeatureVector features(const KinematicState& subject, const ReferencePath& subject_path,
                       const FrenetState& other, const ReferencePath& other_path,
                       double speed_limit, const FeatureConfig& config) {
  const auto p = to_cartesian(subject.state, subject_path);
  const auto q = to_cartesian(other, other_path);
  const double dist = distance(p, q) / config.proximity_sigma;
  FeatureVector f;
  f.proximity = std::exp(-dist * dist);
  f.speed_gap = (subject.velocity - speed_limit) * (subject.velocity - speed_limit);
  f.accel = subject.acceleration * subject.acceleration;
  f.lateral_dev = subject.state.d * subject.state.d;
  return f;
}

CostContext CostContext::for_pred(const Scene& scene, const FeatureConfig& features) {
  const auto& h = scene.pred_history;
  if (h.size() < 2) throw Error(ErrorCode::InsufficientHistory, "pred history needs 2 states");
  CostContext c;
  c.subject_path = &scene.pred_path();
  c.other_path = &scene.ego_path();
  c.previous = h.states[h.size() - 2];
  c.current = h.states.back();
  c.dt = h.dt;
  c.speed_limit = scene.speed_limit;
  c.features = features;
  return c;
}

CostContext CostContext::for_ego(const Scene& scene, const FeatureConfig& features) {
  const auto& h = scene.ego_history;
  if (h.size() < 2) throw Error(ErrorCode::InsufficientHistory, "ego history needs 2 states");
  CostContext c;
  c.subject_path = &scene.ego_path();
  c.other_path = &scene.pred_path();
  c.previous = h.states[h.size() - 2];
  c.current = h.states.back();
  c.dt = h.dt;
  c.speed_limit = scene.speed_limit;
  c.features = features;
  return c;
}

FeatureVector feature_sums(std::span<const FrenetState> subject_future,
                           std::span<const FrenetState> other_future, const CostContext& ctx) {
  if (subject_future.size() != other_future.size()) {
    throw Error(ErrorCode::LengthMismatch, "cost: trajectories differ in length");
  }
  FeatureVector sum;
  double prev_s = ctx.current.s;
  double prev_v = (ctx.current.s - ctx.previous.s) / ctx.dt;
  for (std::size_t t = 0; t < subject_future.size(); ++t) {
    const double v = (subject_future[t].s - prev_s) / ctx.dt;
    const double a = (v - prev_v) / ctx.dt;
    sum += features(KinematicState{subject_future[t], v, a}, *ctx.subject_path, other_future[t],
                    *ctx.other_path, ctx.speed_limit, ctx.features);
    prev_s = subject_future[t].s;
    prev_v = v;
  }
  return sum;
}

double cumulative_cost(const Trajectory& subject, const Trajectory& other, const CostContext& ctx,
                       const CostWeights& weights) {
  return weights.dot(feature_sums(subject.states, other.states, ctx));
}

double cumulative_cost(const Trajectory& xi_pred, const Trajectory& xi_ego, const Scene& scene,
                       const CostWeights& weights, const FeatureConfig& features) {
  return cumulative_cost(xi_pred, xi_ego, CostContext::for_pred(scene, features), weights);
}

RegularizedHessian regularize(const Eigen::MatrixXd& hessian) {
  RegularizedHessian out;
  const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
  if (!sym.allFinite()) throw Error(ErrorCode::NonFiniteCost, "Hessian has non-finite entries");
  out.matrix = sym;
  out.cholesky.compute(out.matrix);
  double eps = 1e-6;
  constexpr double kCap = 1e12;
  while (out.cholesky.info() != Eigen::Success) {
    if (eps > kCap) throw Error(ErrorCode::SingularHessian, "Hessian regularization cap exceeded");
    out.matrix = sym + eps * Eigen::MatrixXd::Identity(sym.rows(), sym.cols());
    out.epsilon = eps;
    out.cholesky.compute(out.matrix);
    eps *= 2.0;
  }
  return out;
}

namespace {


Eigen::VectorXd flatten(const Trajectory& t) {
  Eigen::VectorXd x(2 * static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    x[2 * static_cast<Eigen::Index>(i)] = t.states[i].s;
    x[2 * static_cast<Eigen::Index>(i) + 1] = t.states[i].d;
  }
  return x;
}

std::vector<FrenetState> unflatten(const Eigen::VectorXd& x) {
  std::vector<FrenetState> out(static_cast<std::size_t>(x.size() / 2));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {x[2 * static_cast<Eigen::Index>(i)], x[2 * static_cast<Eigen::Index>(i) + 1]};
  }
  return out;
}

// Central differences of a vector-valued (per feature) function.
template <typename Fn>
void central_differences(const Eigen::VectorXd& x0, double h, Fn&& eval,
                         std::array<Eigen::VectorXd, kFeatureCount>& grad,
                         std::array<Eigen::MatrixXd, kFeatureCount>& hess) {
  const Eigen::Index D = x0.size();
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    grad[k] = Eigen::VectorXd::Zero(D);
    hess[k] = Eigen::MatrixXd::Zero(D, D);
  }
  const auto f0 = eval(x0);
  for (Eigen::Index i = 0; i < D; ++i) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    const auto fp = eval(xp);
    const auto fm = eval(xm);
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      grad[k][i] = (fp[k] - fm[k]) / (2.0 * h);
      hess[k](i, i) = (fp[k] - 2.0 * f0[k] + fm[k]) / (h * h);
    }
    for (Eigen::Index j = i + 1; j < D; ++j) {
      Eigen::VectorXd pp = x0, pm = x0, mp = x0, mm = x0;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      const auto a = eval(pp);
      const auto b = eval(pm);
      const auto c = eval(mp);
      const auto d = eval(mm);
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        const double v = (a[k] - b[k] - c[k] + d[k]) / (4.0 * h * h);
        hess[k](i, j) = v;
        hess[k](j, i) = v;
      }
    }
  }
}

}  // namespace

FeatureDerivatives feature_derivatives(const Trajectory& subject, const Trajectory& other,
                                       const CostContext& ctx, double step) {
  if (subject.size() != other.size()) {
    throw Error(ErrorCode::LengthMismatch, "cost: trajectories differ in length");
  }
  FeatureDerivatives out;
  auto eval = [&](const Eigen::VectorXd& x) {
    const auto states = unflatten(x);
    return feature_sums(states, other.states, ctx).values();
  };
  central_differences(flatten(subject), step, eval, out.gradient, out.hessian);
  return out;
}

CostDerivatives cost_gradient_hessian(const Trajectory& xi_pred, const Trajectory& xi_ego,
                                      const Scene& scene, const CostWeights& weights,
                                      const FeatureConfig& features, double step) {
  if (xi_pred.size() != xi_ego.size()) {
    throw Error(ErrorCode::LengthMismatch, "cost: trajectories differ in length");
  }
  const auto ctx = CostContext::for_pred(scene, features);
  auto eval = [&](const Eigen::VectorXd& x) {
    const auto states = unflatten(x);
    const double c = weights.dot(feature_sums(states, xi_ego.states, ctx));
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCost, "cost is not finite");
    return std::array<double, kFeatureCount>{c, 0.0, 0.0, 0.0};
  };
  std::array<Eigen::VectorXd, kFeatureCount> g;
  std::array<Eigen::MatrixXd, kFeatureCount> h;
  central_differences(flatten(xi_pred), step, eval, g, h);
  auto reg = regularize(h[0]);
  return CostDerivatives{g[0], reg.matrix, reg.epsilon};
}

double laplace_log_likelihood(const Eigen::VectorXd& gradient, const Eigen::MatrixXd& hessian) {
  const auto reg = regularize(hessian);
  const Eigen::VectorXd solved = reg.cholesky.solve(gradient);
  const Eigen::MatrixXd L = reg.cholesky.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
  const double D = static_cast<double>(gradient.size());
  return -0.5 * gradient.dot(solved) + 0.5 * log_det -
         0.5 * D * std::log(2.0 * std::numbers::pi);
}

PreparedDemonstrations::PreparedDemonstrations(std::span<const Demonstration> demos,
                                               const FeatureConfig& features) {
  if (demos.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one demonstration");
  derivatives_.reserve(demos.size());
  for (const auto& demo : demos) {
    const auto ctx = CostContext::for_pred(demo.context, features);
    derivatives_.push_back(feature_derivatives(demo.pred_future, demo.ego_future, ctx));
  }
  dimension_ = static_cast<std::size_t>(derivatives_.front().gradient[0].size());
}

namespace {

void combine(const FeatureDerivatives& fd, const CostWeights& w, Eigen::VectorXd& g,
             Eigen::MatrixXd& h) {
  g = w.theta[0] * fd.gradient[0];
  h = w.theta[0] * fd.hessian[0];
  for (std::size_t k = 1; k < kFeatureCount; ++k) {
    g += w.theta[k] * fd.gradient[k];
    h += w.theta[k] * fd.hessian[k];
  }
}

}  // namespace

double PreparedDemonstrations::log_likelihood(const CostWeights& weights) const {
  double total = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (const auto& fd : derivatives_) {
    combine(fd, weights, g, h);
    total += laplace_log_likelihood(g, h);
  }
  return total;
}

double PreparedDemonstrations::quadratic_term(const CostWeights& weights) const {
  double total = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (const auto& fd : derivatives_) {
    combine(fd, weights, g, h);
    const auto reg = regularize(h);
    total += g.dot(reg.cholesky.solve(g));
  }
  return total;
}

double log_likelihood(std::span<const Demonstration> demos, const CostWeights& weights,
                      const FeatureConfig& features) {
  return PreparedDemonstrations(demos, features).log_likelihood(weights);
}

namespace {

CostWeights project(CostWeights w) {
  for (double& t : w.theta) t = std::max(0.0, t);
  return w;
}

}  // namespace

IrlResult train_irl(std::span<const Demonstration> demos, const IrlConfig& config) {
  if (demos.size() < kMinDemonstrations) {
    throw Error(ErrorCode::DatasetTooSmall, "IRL needs at least " +
                                                std::to_string(kMinDemonstrations) +
                                                " demonstrations");
  }
  validate(config.initial);
  const PreparedDemonstrations prepared(demos, config.features);
  const double count = static_cast<double>(prepared.size());
  auto objective = [&](const CostWeights& w) {
    const double v = prepared.log_likelihood(w) / count;
    if (!std::isfinite(v)) throw Error(ErrorCode::Diverged, "IRL likelihood is not finite");
    return v;
  };

  IrlResult result;
  CostWeights theta = config.initial;
  double value = objective(theta);
  double step = config.initial_step;
  const double D = static_cast<double>(prepared.dimension());

  for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
    result.likelihood_curve.push_back(value);
    result.iterations = iter + 1;

    std::array<double, kFeatureCount> grad{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const double h = config.weight_step * std::max(1.0, theta.theta[k]);
      CostWeights up = theta;
      up.theta[k] += h;
      if (theta.theta[k] >= h) {
        CostWeights down = theta;
        down.theta[k] -= h;
        grad[k] = (objective(up) - objective(down)) / (2.0 * h);
      } else {
        grad[k] = (objective(up) - value) / h;
      }
    }
    double pg_norm = 0.0;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const double g = (theta.theta[k] <= 0.0 && grad[k] < 0.0) ? 0.0 : grad[k];
      pg_norm += g * g;
    }
    // Gradient norm relative to the weight scale, so the test does not
    // depend on how far the scale search has moved theta.
    pg_norm = std::sqrt(pg_norm) * std::max(1.0, theta.l1());
    if (pg_norm < config.gradient_tolerance) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    CostWeights candidate;
    double candidate_value = value;
    for (int tries = 0; tries < 60; ++tries) {
      candidate = theta;
      for (std::size_t k = 0; k < kFeatureCount; ++k) candidate.theta[k] += step * grad[k];
      candidate = project(candidate);
      if (candidate.l1() <= 0.0) {
        step *= 0.5;
        continue;
      }
      double ascent = 0.0;
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        ascent += grad[k] * (candidate.theta[k] - theta.theta[k]);
      }
      candidate_value = objective(candidate);
      if (candidate_value >= value + 1e-4 * ascent && candidate_value > value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    theta = candidate;
    value = candidate_value;
    step *= 2.0;

    // Scale ray: with g and H both linear in theta the optimum of
    // -c Q / 2 + (D / 2) log c per demo is c = D / mean(Q).
    const double q = prepared.quadratic_term(theta) / count;
    if (q > 0.0 && std::isfinite(q)) {
      const double c = D / q;
      if (std::isfinite(c) && c > 0.0) {
        CostWeights scaled = theta;
        for (double& t : scaled.theta) t *= c;
        const double scaled_value = objective(scaled);
        if (scaled_value > value) {
          theta = scaled;
          value = scaled_value;
          step *= c;
        }
      }
    }
  }
  result.scale = theta.l1();
  result.weights = theta.normalized();
  return result;
}

nlohmann::json to_json(const CostWeights& w) {
  nlohmann::json j;
  j["format"] = "hpred-cost-weights-1";
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t k = 0; k < kFeatureCount; ++k) weights[kFeatureNames[k]] = w.theta[k];
  j["weights"] = weights;
  return j;
}

CostWeights weights_from_json(const nlohmann::json& j) {
  try {
    CostWeights w;
    const auto& weights = j.at("weights");
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      w.theta[k] = weights.at(kFeatureNames[k]).get<double>();
    }
    validate(w);
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("weights json: ") + e.what());
  }
}

double cosine_similarity(const CostWeights& a, const CostWeights& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    ab += a.theta[k] * b.theta[k];
    aa += a.theta[k] * a.theta[k];
    bb += b.theta[k] * b.theta[k];
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace hpred::irl
