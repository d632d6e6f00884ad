#include "hpred/cvae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpred/error.hpp"
#include "hpred/kernels.hpp"

namespace hpred::cvae {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

void append_tail(std::vector<double>& out, const Trajectory& t, std::size_t count) {
  if (t.size() < count) {
    throw Error(ErrorCode::InsufficientHistory, "history has " + std::to_string(t.size()) +
                                                    " states, need " + std::to_string(count));
  }
  for (std::size_t i = t.size() - count; i < t.size(); ++i) {
    out.push_back(t.states[i].s);
    out.push_back(t.states[i].d);
  }
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::vector<double> encode_history(const Scene& scene, const CvaeShape& shape) {
  std::vector<double> x;
  x.reserve(shape.x_size());
  append_tail(x, scene.pred_history, shape.history_states);
  append_tail(x, scene.ego_history, shape.history_states);

  const auto& pred_path = scene.pred_path();
  const CartesianPoint cross = pred_path.point_at(pred_path.origin_arc_length());
  std::vector<std::pair<double, const Trajectory*>> ranked;
  for (const auto& surr : scene.surr_histories) {
    const auto pos = to_cartesian(surr.back(), scene.path(surr.path_id));
    ranked.emplace_back(distance(pos, cross), &surr);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const FrenetState ego_now = scene.ego_history.back();
  for (std::size_t slot = 0; slot < shape.surround_slots; ++slot) {
    if (slot < ranked.size()) {
      append_tail(x, *ranked[slot].second, shape.history_states);
      x.push_back(1.0);
    } else {
      for (std::size_t i = 0; i < shape.history_states; ++i) {
        x.push_back(ego_now.s);
        x.push_back(ego_now.d);
      }
      x.push_back(0.0);
    }
  }
  return x;
}

std::vector<double> encode_future(const Trajectory& pred_future, const Trajectory& ego_future,
                                  const CvaeShape& shape) {
  if (pred_future.size() != shape.future_states || ego_future.size() != shape.future_states) {
    throw Error(ErrorCode::ShapeMismatch, "future length must equal " +
                                              std::to_string(shape.future_states));
  }
  std::vector<double> y;
  y.reserve(shape.y_size());
  for (const auto& s : pred_future.states) {
    y.push_back(s.s);
    y.push_back(s.d);
  }
  for (const auto& s : ego_future.states) {
    y.push_back(s.s);
    y.push_back(s.d);
  }
  return y;
}

JointSample decode_future(std::span<const double> y, const CvaeShape& shape,
                          const std::string& pred_path_id, const std::string& ego_path_id) {
  require(y.size() == shape.y_size(), "decode_future: wrong Y length");
  JointSample out{{{}, shape.dt, pred_path_id}, {{}, shape.dt, ego_path_id}};
  const std::size_t n = shape.future_states;
  for (std::size_t t = 0; t < n; ++t) {
    out.pred.states.push_back({y[2 * t], y[2 * t + 1]});
    out.ego.states.push_back({y[2 * n + 2 * t], y[2 * n + 2 * t + 1]});
  }
  return out;
}

Normalization Normalization::identity(const CvaeShape& shape) {
  Normalization n;
  n.x_mean.assign(shape.x_size(), 0.0);
  n.x_scale.assign(shape.x_size(), 1.0);
  n.y_mean.assign(shape.y_size(), 0.0);
  n.y_scale.assign(shape.y_size(), 1.0);
  return n;
}

std::vector<double> Normalization::normalize_x(std::span<const double> x) const {
  require(x.size() == x_mean.size(), "normalize_x: wrong X length");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - x_mean[i]) / x_scale[i];
  return out;
}

std::vector<double> Normalization::normalize_y(std::span<const double> y) const {
  require(y.size() == y_mean.size(), "normalize_y: wrong Y length");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - y_mean[i]) / y_scale[i];
  return out;
}

std::vector<double> Normalization::denormalize_y(std::span<const double> y) const {
  require(y.size() == y_mean.size(), "denormalize_y: wrong Y length");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] * y_scale[i] + y_mean[i];
  return out;
}

Normalization fit_normalization(const Dataset& data, const CvaeShape& shape) {
  Normalization n = Normalization::identity(shape);
  if (data.empty()) return n;
  auto fit = [&](auto member, std::vector<double>& mean, std::vector<double>& scale) {
    const double count = static_cast<double>(data.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double m = 0.0;
      for (const auto& s : data) m += (s.*member)[i];
      m /= count;
      double var = 0.0;
      for (const auto& s : data) var += ((s.*member)[i] - m) * ((s.*member)[i] - m);
      var /= count;
      mean[i] = m;
      const double sd = std::sqrt(var);
      scale[i] = sd > 1e-6 ? sd : 1.0;
    }
  };
  for (const auto& s : data) {
    require(s.x.size() == shape.x_size() && s.y.size() == shape.y_size(),
            "dataset sample does not match the model shape");
  }
  fit(&CvaeSample::x, n.x_mean, n.x_scale);
  fit(&CvaeSample::y, n.y_mean, n.y_scale);
  return n;
}

namespace {

std::vector<std::size_t> encoder_layers(const CvaeShape& shape) {
  std::vector<std::size_t> sizes{shape.x_size() + shape.y_size()};
  sizes.insert(sizes.end(), shape.hidden.begin(), shape.hidden.end());
  sizes.push_back(2 * shape.latent);
  return sizes;
}

std::vector<std::size_t> decoder_layers(const CvaeShape& shape) {
  std::vector<std::size_t> sizes{shape.x_size() + shape.latent};
  sizes.insert(sizes.end(), shape.hidden.begin(), shape.hidden.end());
  sizes.push_back(shape.y_size());
  return sizes;
}

}  // namespace

CvaeModel CvaeModel::initialize(const CvaeShape& shape, std::mt19937_64& rng) {
  CvaeModel m;
  m.shape = shape;
  m.encoder = nn::DenseNetwork::glorot(encoder_layers(shape), rng);
  m.decoder = nn::DenseNetwork::glorot(decoder_layers(shape), rng);
  m.normalization = Normalization::identity(shape);
  return m;
}

CvaeModel CvaeModel::zeros(const CvaeShape& shape) {
  CvaeModel m;
  m.shape = shape;
  m.encoder = nn::DenseNetwork(encoder_layers(shape));
  m.decoder = nn::DenseNetwork(decoder_layers(shape));
  m.normalization = Normalization::identity(shape);
  return m;
}

LatentGaussian encode(const CvaeModel& model, std::span<const double> x, std::span<const double> y) {
  const auto xn = model.normalization.normalize_x(x);
  const auto yn = model.normalization.normalize_y(y);
  const auto out = model.encoder.forward(concat(xn, yn));
  const std::size_t L = model.latent();
  return {std::vector<double>(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(L)),
          std::vector<double>(out.begin() + static_cast<std::ptrdiff_t>(L), out.end())};
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> logvar,
                                   std::span<const double> noise) {
  if (mu.size() != logvar.size() || mu.size() != noise.size()) {
    throw Error(ErrorCode::LengthMismatch, "reparameterize: length mismatch");
  }
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + std::exp(0.5 * logvar[i]) * noise[i];
  return z;
}

std::vector<double> decode(const CvaeModel& model, std::span<const double> x,
                           std::span<const double> z) {
  require(z.size() == model.latent(), "decode: wrong latent length");
  const auto xn = model.normalization.normalize_x(x);
  const auto yn = model.decoder.forward(concat(xn, z));
  return model.normalization.denormalize_y(yn);
}

double kl_divergence(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) throw Error(ErrorCode::LengthMismatch, "kl: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    kl += std::exp(logvar[i]) + mu[i] * mu[i] - 1.0 - logvar[i];
  }
  return 0.5 * kl;
}

double elbo_loss(const CvaeModel& model, std::span<const CvaeSample> batch,
                 std::span<const std::vector<double>> noise, double beta) {
  if (batch.empty()) throw Error(ErrorCode::ShapeMismatch, "elbo_loss: empty batch");
  if (noise.size() != batch.size()) throw Error(ErrorCode::ShapeMismatch, "elbo_loss: noise batch size");
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto xn = model.normalization.normalize_x(batch[b].x);
    const auto yn = model.normalization.normalize_y(batch[b].y);
    const auto enc = model.encoder.forward(concat(xn, yn));
    const std::size_t L = model.latent();
    const std::span<const double> mu(enc.data(), L);
    const std::span<const double> logvar(enc.data() + L, L);
    const auto z = reparameterize(mu, logvar, noise[b]);
    const auto y_hat = model.decoder.forward(concat(xn, z));
    double rec = 0.0;
    for (std::size_t i = 0; i < yn.size(); ++i) rec += (yn[i] - y_hat[i]) * (yn[i] - y_hat[i]);
    total += rec + beta * kl_divergence(mu, logvar);
  }
  return total / static_cast<double>(batch.size());
}

double accumulate_sample_gradient(const CvaeModel& model, std::span<const double> xn,
                                  std::span<const double> yn, std::span<const double> noise,
                                  double beta, std::span<double> encoder_grad,
                                  std::span<double> decoder_grad) {
  const std::size_t L = model.latent();
  require(noise.size() == L, "noise length must equal latent size");
  const auto enc_in = concat(xn, yn);
  const auto enc = model.encoder.forward(enc_in);
  const std::span<const double> mu(enc.data(), L);
  const std::span<const double> logvar(enc.data() + L, L);
  std::vector<double> sigma(L);
  for (std::size_t i = 0; i < L; ++i) sigma[i] = std::exp(0.5 * logvar[i]);
  const auto z = reparameterize(mu, logvar, noise);
  const auto dec_in = concat(xn, z);
  const auto y_hat = model.decoder.forward(dec_in);

  double rec = 0.0;
  std::vector<double> d_yhat(y_hat.size());
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double r = yn[i] - y_hat[i];
    rec += r * r;
    d_yhat[i] = -2.0 * r;
  }
  const double kl = kl_divergence(mu, logvar);

  std::vector<double> d_dec_in(dec_in.size());
  model.decoder.accumulate_gradient(dec_in, d_yhat, decoder_grad, d_dec_in);

  std::vector<double> d_enc_out(2 * L);
  const std::size_t x_len = xn.size();
  for (std::size_t i = 0; i < L; ++i) {
    const double dz = d_dec_in[x_len + i];
    d_enc_out[i] = dz + beta * mu[i];
    d_enc_out[L + i] = dz * noise[i] * 0.5 * sigma[i] + beta * 0.5 * (sigma[i] * sigma[i] - 1.0);
  }
  std::vector<double> d_enc_in(enc_in.size());
  model.encoder.accumulate_gradient(enc_in, d_enc_out, encoder_grad, d_enc_in);
  return rec + beta * kl;
}

TrainingResult train(const Dataset& data, const TrainingConfig& config, const CvaeShape& shape) {
  if (data.size() < kMinTrainingSamples) {
    throw Error(ErrorCode::DatasetTooSmall, "CVAE training needs at least " +
                                                std::to_string(kMinTrainingSamples) + " samples");
  }
  if (config.epochs == 0 || config.batch_size == 0 || !(config.beta >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid CVAE training config");
  }
  std::mt19937_64 rng(config.seed);
  TrainingResult result;
  result.model = CvaeModel::initialize(shape, rng);
  result.model.normalization = fit_normalization(data, shape);

  Dataset normalized;
  normalized.reserve(data.size());
  for (const auto& s : data) {
    normalized.push_back({result.model.normalization.normalize_x(s.x),
                          result.model.normalization.normalize_y(s.y)});
  }

  auto enc_opt = nn::OptimizerState::for_parameters(result.model.encoder.parameter_count(),
                                                    config.learning_rate);
  auto dec_opt = nn::OptimizerState::for_parameters(result.model.decoder.parameter_count(),
                                                    config.learning_rate);
  std::vector<std::size_t> order(normalized.size());
  std::iota(order.begin(), order.end(), 0);
  Dataset batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(normalized[order[i]]);
      const auto noise = standard_normal_batch(batch.size(), shape.latent, rng);
      const auto grad = kernels::elbo_gradient(result.model, batch, noise, config.beta);
      epoch_loss += grad.loss * static_cast<double>(batch.size());
      nn::apply_update(enc_opt, result.model.encoder.parameters(), grad.encoder);
      nn::apply_update(dec_opt, result.model.decoder.parameters(), grad.decoder);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

std::vector<std::vector<double>> standard_normal_batch(std::size_t count, std::size_t dim,
                                                       std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (auto& v : out) {
    for (auto& e : v) e = normal(rng);
  }
  return out;
}

std::vector<JointSample> decode_noise(const CvaeModel& model, std::span<const double> x,
                                      std::span<const std::vector<double>> noise,
                                      const std::string& pred_path_id,
                                      const std::string& ego_path_id) {
  const auto xn = model.normalization.normalize_x(x);
  std::vector<JointSample> out;
  out.reserve(noise.size());
  for (const auto& z : noise) {
    require(z.size() == model.latent(), "decode_noise: wrong latent length");
    const auto yn = model.decoder.forward(concat(xn, z));
    out.push_back(decode_future(model.normalization.denormalize_y(yn), model.shape,
                                pred_path_id, ego_path_id));
  }
  return out;
}

std::vector<JointSample> sample_joint(const CvaeModel& model, std::span<const double> x,
                                      std::size_t n, std::mt19937_64& rng,
                                      const std::string& pred_path_id,
                                      const std::string& ego_path_id) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample_joint: n must be >= 1");
  const auto noise = standard_normal_batch(n, model.latent(), rng);
  return decode_noise(model, x, noise, pred_path_id, ego_path_id);
}

nlohmann::json to_json(const CvaeModel& model) {
  const auto& s = model.shape;
  const auto& n = model.normalization;
  return nlohmann::json{
      {"format", "hpred-cvae-1"},
      {"shape",
       {{"history_states", s.history_states},
        {"future_states", s.future_states},
        {"surround_slots", s.surround_slots},
        {"latent", s.latent},
        {"hidden", s.hidden},
        {"dt", s.dt}}},
      {"normalization",
       {{"x_mean", n.x_mean}, {"x_scale", n.x_scale}, {"y_mean", n.y_mean}, {"y_scale", n.y_scale}}},
      {"encoder", nn::to_json(model.encoder)},
      {"decoder", nn::to_json(model.decoder)}};
}

CvaeModel model_from_json(const nlohmann::json& j) {
  try {
    CvaeModel m;
    const auto& s = j.at("shape");
    m.shape.history_states = s.at("history_states").get<std::size_t>();
    m.shape.future_states = s.at("future_states").get<std::size_t>();
    m.shape.surround_slots = s.at("surround_slots").get<std::size_t>();
    m.shape.latent = s.at("latent").get<std::size_t>();
    m.shape.hidden = s.at("hidden").get<std::vector<std::size_t>>();
    m.shape.dt = s.at("dt").get<double>();
    const auto& n = j.at("normalization");
    m.normalization.x_mean = n.at("x_mean").get<std::vector<double>>();
    m.normalization.x_scale = n.at("x_scale").get<std::vector<double>>();
    m.normalization.y_mean = n.at("y_mean").get<std::vector<double>>();
    m.normalization.y_scale = n.at("y_scale").get<std::vector<double>>();
    m.encoder = nn::network_from_json(j.at("encoder"));
    m.decoder = nn::network_from_json(j.at("decoder"));
    if (m.encoder.input_size() != m.shape.x_size() + m.shape.y_size() ||
        m.encoder.output_size() != 2 * m.shape.latent ||
        m.decoder.input_size() != m.shape.x_size() + m.shape.latent ||
        m.decoder.output_size() != m.shape.y_size() ||
        m.normalization.x_mean.size() != m.shape.x_size() ||
        m.normalization.x_scale.size() != m.shape.x_size() ||
        m.normalization.y_mean.size() != m.shape.y_size() ||
        m.normalization.y_scale.size() != m.shape.y_size()) {
      throw Error(ErrorCode::SchemaError, "model json: network shapes inconsistent with metadata");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("model json: ") + e.what());
  }
}

}  // namespace hpred::cvae
