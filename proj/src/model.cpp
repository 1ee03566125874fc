#include "hydro/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace hydro {

double selu(double x) {
  return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double selu_prime(double x) {
  return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}

void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bias[c];
  }
}

void add_in_place(Matrix& dst, const Matrix& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t k = 0; k < dst.size(); ++k) d[k] += s[k];
}

Matrix map_sigmoid(Matrix m) {
  for (double& v : m.values()) v = sigmoid(v);
  return m;
}

Matrix map_selu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v = selu(v);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  const double* s = b.data();
  double* d = out.data();
  for (std::size_t k = 0; k < out.size(); ++k) d[k] *= s[k];
  return out;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) sums[c] += row[c];
  }
  return sums;
}

// Pre-activation of one gate over the batch: X W^T + H U^T + b.
Matrix gate_pre(const Matrix& x, const Matrix& h_prev, const LstmGate& g) {
  Matrix z = matmul_bt(x, g.w);
  add_in_place(z, matmul_bt(h_prev, g.u));
  add_bias_rows(z, g.b);
  return z;
}

}  // namespace

ModelParams init_params(const ModelShape& shape, Rng& rng) {
  if (shape.n_inputs == 0 || shape.n_targets == 0 || shape.encoder_size == 0 ||
      shape.hidden_size == 0) {
    throw ContractError("init_params: all layer sizes must be positive");
  }
  ModelParams p;
  p.dropout_rate = shape.dropout_rate;
  p.encoder.weight = Matrix(shape.encoder_size, shape.n_inputs);
  p.encoder.bias.assign(shape.encoder_size, 0.0);
  auto make_gate = [&](LstmGate& g) {
    g.w = Matrix(shape.hidden_size, shape.encoder_size);
    g.u = Matrix(shape.hidden_size, shape.hidden_size);
    g.b.assign(shape.hidden_size, 0.0);
  };
  make_gate(p.lstm.forget);
  make_gate(p.lstm.input);
  make_gate(p.lstm.candidate);
  make_gate(p.lstm.output);
  p.decoder.weight = Matrix(shape.n_targets, shape.hidden_size);
  p.decoder.bias.assign(shape.n_targets, 0.0);

  for_each_tensor(p, [&](const std::string& name, double* data,
                         std::size_t rows, std::size_t cols) {
    if (name.ends_with(".bias") || name.ends_with(".b")) return;  // zero biases
    // For weight matrices rows = fan_out, cols = fan_in.
    const double limit =
        std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t k = 0; k < rows * cols; ++k)
      data[k] = rng.uniform(-limit, limit);
  });
  return p;
}

Gradients make_gradients_like(const ModelParams& p) {
  Gradients g;
  g.encoder.weight = Matrix(p.encoder.weight.rows(), p.encoder.weight.cols());
  g.encoder.bias.assign(p.encoder.bias.size(), 0.0);
  auto gate = [](const LstmGate& src, LstmGate& dst) {
    dst.w = Matrix(src.w.rows(), src.w.cols());
    dst.u = Matrix(src.u.rows(), src.u.cols());
    dst.b.assign(src.b.size(), 0.0);
  };
  gate(p.lstm.forget, g.lstm.forget);
  gate(p.lstm.input, g.lstm.input);
  gate(p.lstm.candidate, g.lstm.candidate);
  gate(p.lstm.output, g.lstm.output);
  g.decoder.weight = Matrix(p.decoder.weight.rows(), p.decoder.weight.cols());
  g.decoder.bias.assign(p.decoder.bias.size(), 0.0);
  return g;
}

LstmCellResult lstm_cell_forward(std::span<const double> x,
                                 std::span<const double> h_prev,
                                 std::span<const double> c_prev,
                                 const LstmParams& p) {
  const std::size_t in = p.input_size();
  const std::size_t hidden = p.hidden_size();
  if (x.size() != in || h_prev.size() != hidden || c_prev.size() != hidden)
    throw ShapeError("lstm_cell_forward: input/state sizes do not match params");

  Matrix xm(1, in), hm(1, hidden);
  std::copy(x.begin(), x.end(), xm.data());
  std::copy(h_prev.begin(), h_prev.end(), hm.data());

  const Matrix f = map_sigmoid(gate_pre(xm, hm, p.forget));
  const Matrix i = map_sigmoid(gate_pre(xm, hm, p.input));
  const Matrix chat = map_selu(gate_pre(xm, hm, p.candidate));
  const Matrix o = map_sigmoid(gate_pre(xm, hm, p.output));

  LstmCellResult out;
  out.h.resize(hidden);
  out.c.resize(hidden);
  out.f.assign(f.data(), f.data() + hidden);
  out.i.assign(i.data(), i.data() + hidden);
  out.chat.assign(chat.data(), chat.data() + hidden);
  out.o.assign(o.data(), o.data() + hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    out.c[k] = c_prev[k] * out.f[k] + out.i[k] * out.chat[k];
    out.h[k] = out.o[k] * selu(out.c[k]);
  }
  return out;
}

std::size_t batches_per_epoch(std::size_t day_total, std::size_t l_seq) {
  if (l_seq == 0 || l_seq > day_total)
    throw DomainError("batches_per_epoch: need 0 < l_seq <= day_total");
  return day_total - l_seq + 1;
}

std::size_t batch_size(std::size_t l_seq, std::size_t n_gauges,
                       std::size_t n_props) {
  return l_seq * n_gauges * n_props;
}

namespace {
std::atomic<std::size_t> g_live_batches{0};
}

std::size_t live_batch_count() { return g_live_batches.load(); }

void Batch::bump(int delta) {
  if (delta > 0)
    g_live_batches.fetch_add(1);
  else
    g_live_batches.fetch_sub(1);
}

Batcher::Batcher(const AssembledData& data, std::size_t l_seq) : data_(data) {
  if (data.n_days() < l_seq + 1)
    throw ContractError("Batcher: need at least l_seq + 1 days for a window "
                        "plus its horizon-1 target");
  if (data.target_series.empty())
    throw ContractError("Batcher: no target series");
  // The final day only ever serves as a target.
  plan_.day_total = data.n_days() - 1;
  plan_.l_seq = l_seq;
  plan_.n_gauges = data.n_gauges();
  plan_.n_input_properties = data.n_inputs();
}

std::size_t Batcher::count() const {
  return batches_per_epoch(plan_.day_total, plan_.l_seq);
}

Batch Batcher::at(std::size_t index) const {
  if (index >= count())
    throw DomainError("Batcher::at: index " + std::to_string(index) +
                      " out of range (" + std::to_string(count()) + " batches)");
  const std::size_t gauges = plan_.n_gauges;
  const std::size_t n_feat = data_.feature_series.size();
  const std::size_t n_static = data_.static_rows.cols();
  const std::size_t n_space = data_.space_enc.cols();
  const std::size_t n_time = data_.time_enc.cols();

  Batch batch;
  batch.steps.reserve(plan_.l_seq);
  for (std::size_t s = 0; s < plan_.l_seq; ++s) {
    const std::size_t day = index + s;
    Matrix step(gauges, plan_.n_input_properties);
    for (std::size_t g = 0; g < gauges; ++g) {
      double* row = step.row(g);
      std::size_t c = 0;
      for (std::size_t f = 0; f < n_feat; ++f)
        row[c++] = data_.feature_series[f](day, g);
      for (std::size_t a = 0; a < n_static; ++a)
        row[c++] = data_.static_rows(g, a);
      for (std::size_t e = 0; e < n_space; ++e)
        row[c++] = data_.space_enc(g, e);
      for (std::size_t e = 0; e < n_time; ++e)
        row[c++] = data_.time_enc(day, e);
    }
    batch.steps.push_back(std::move(step));
  }

  const std::size_t target_day = index + plan_.l_seq;
  batch.targets = Matrix(gauges, data_.target_series.size());
  for (std::size_t j = 0; j < data_.target_series.size(); ++j)
    for (std::size_t g = 0; g < gauges; ++g)
      batch.targets(g, j) = data_.target_series[j](target_day, g);
  return batch;
}

namespace {

Matrix draw_dropout_mask(std::size_t rows, std::size_t cols, double rate,
                         Rng& rng) {
  // Inverted dropout: kept units are scaled by 1/keep so eval needs no
  // rescaling.
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  Matrix mask(rows, cols);
  for (double& v : mask.values()) v = rng.uniform() < keep ? scale : 0.0;
  return mask;
}

}  // namespace

Matrix forward(const Batch& batch, const ModelParams& p, RunMode mode,
               Rng* rng, ForwardCache* cache) {
  if (batch.steps.empty()) throw ContractError("forward: empty batch");
  const std::size_t gauges = batch.steps[0].rows();
  const std::size_t hidden = p.hidden_size();
  if (batch.steps[0].cols() != p.n_inputs())
    throw ShapeError("forward: batch has " +
                     std::to_string(batch.steps[0].cols()) +
                     " input properties, model expects " +
                     std::to_string(p.n_inputs()));
  if (p.lstm.input_size() != p.encoder_size() ||
      p.decoder.weight.cols() != hidden)
    throw ShapeError("forward: inconsistent layer sizes in params");

  const bool dropout_on = mode == RunMode::train && p.dropout_rate > 0.0;
  if (dropout_on && rng == nullptr)
    throw ContractError("forward: train-mode dropout needs an rng");

  if (cache) {
    *cache = ForwardCache{};
    cache->train_mode = mode == RunMode::train;
  }

  Matrix h(gauges, hidden, 0.0);
  Matrix c(gauges, hidden, 0.0);

  for (const Matrix& x : batch.steps) {
    Matrix enc_pre = matmul_bt(x, p.encoder.weight);
    add_bias_rows(enc_pre, p.encoder.bias);
    Matrix enc_out = map_selu(enc_pre);
    Matrix enc_mask;
    if (dropout_on) {
      enc_mask = draw_dropout_mask(gauges, enc_out.cols(), p.dropout_rate, *rng);
      enc_out = hadamard(enc_out, enc_mask);
    }

    Matrix zf = gate_pre(enc_out, h, p.lstm.forget);
    Matrix zi = gate_pre(enc_out, h, p.lstm.input);
    Matrix zc = gate_pre(enc_out, h, p.lstm.candidate);
    Matrix zo = gate_pre(enc_out, h, p.lstm.output);
    const Matrix f = map_sigmoid(std::move(zf));
    const Matrix i = map_sigmoid(std::move(zi));
    const Matrix chat = map_selu(zc);
    const Matrix o = map_sigmoid(std::move(zo));

    Matrix c_next(gauges, hidden);
    for (std::size_t k = 0; k < c_next.size(); ++k)
      c_next.data()[k] =
          c.data()[k] * f.data()[k] + i.data()[k] * chat.data()[k];
    Matrix c_selu = map_selu(c_next);
    Matrix h_next = hadamard(o, c_selu);

    if (cache) {
      cache->raw_inputs.push_back(x);
      cache->enc_pre.push_back(std::move(enc_pre));
      cache->enc_out.push_back(enc_out);
      cache->enc_mask.push_back(std::move(enc_mask));
      cache->f.push_back(f);
      cache->i.push_back(i);
      cache->chat.push_back(chat);
      cache->o.push_back(o);
      cache->cand_pre.push_back(std::move(zc));
      cache->cell.push_back(c_next);
      cache->cell_selu.push_back(std::move(c_selu));
      cache->hidden.push_back(h_next);
    }
    c = std::move(c_next);
    h = std::move(h_next);
  }

  Matrix dec_pre = matmul_bt(h, p.decoder.weight);
  add_bias_rows(dec_pre, p.decoder.bias);
  Matrix predictions = map_selu(dec_pre);
  Matrix dec_mask;
  if (dropout_on) {
    dec_mask = draw_dropout_mask(gauges, predictions.cols(), p.dropout_rate, *rng);
    predictions = hadamard(predictions, dec_mask);
  }

  if (cache) {
    cache->dec_pre = std::move(dec_pre);
    cache->dec_mask = std::move(dec_mask);
    cache->predictions = predictions;
  }
  return predictions;
}

Gradients backward(const ModelParams& p, const ForwardCache& cache,
                   const Matrix& d_predictions) {
  if (!cache.train_mode)
    throw ContractError("backward: cache must come from a train-mode forward");
  const std::size_t steps = cache.hidden.size();
  if (steps == 0) throw ContractError("backward: empty cache");
  const std::size_t gauges = cache.hidden[0].rows();
  const std::size_t hidden = p.hidden_size();
  if (cache.hidden[0].cols() != hidden ||
      cache.raw_inputs[0].cols() != p.n_inputs())
    throw ContractError("backward: cache and params disagree on shapes");
  if (d_predictions.rows() != gauges ||
      d_predictions.cols() != p.n_targets())
    throw ShapeError("backward: upstream gradient shape mismatch");

  Gradients g = make_gradients_like(p);
  const bool dropout_on = cache.dec_mask.size() > 0;

  // Decoder.
  Matrix dy = d_predictions;
  if (dropout_on) dy = hadamard(dy, cache.dec_mask);
  Matrix dz_dec = dy;
  for (std::size_t k = 0; k < dz_dec.size(); ++k)
    dz_dec.data()[k] *= selu_prime(cache.dec_pre.data()[k]);
  g.decoder.weight = matmul_at(dz_dec, cache.hidden[steps - 1]);
  g.decoder.bias = column_sums(dz_dec);

  Matrix dh = matmul(dz_dec, p.decoder.weight);
  Matrix dc(gauges, hidden, 0.0);

  const Matrix zero_state(gauges, hidden, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const Matrix& h_prev = t == 0 ? zero_state : cache.hidden[t - 1];
    const Matrix& c_prev = t == 0 ? zero_state : cache.cell[t - 1];
    const Matrix& f = cache.f[t];
    const Matrix& i = cache.i[t];
    const Matrix& chat = cache.chat[t];
    const Matrix& o = cache.o[t];

    // h_t = o . selu(c_t)
    Matrix do_gate = hadamard(dh, cache.cell_selu[t]);
    for (std::size_t k = 0; k < dc.size(); ++k)
      dc.data()[k] +=
          dh.data()[k] * o.data()[k] * selu_prime(cache.cell[t].data()[k]);

    // c_t = c_prev . f + i . chat
    Matrix dchat = hadamard(dc, i);
    Matrix di = hadamard(dc, chat);
    Matrix df = hadamard(dc, c_prev);

    // Through the gate nonlinearities.
    Matrix dz_f = df;
    Matrix dz_i = di;
    Matrix dz_o = do_gate;
    for (std::size_t k = 0; k < dz_f.size(); ++k) {
      dz_f.data()[k] *= f.data()[k] * (1.0 - f.data()[k]);
      dz_i.data()[k] *= i.data()[k] * (1.0 - i.data()[k]);
      dz_o.data()[k] *= o.data()[k] * (1.0 - o.data()[k]);
    }
    Matrix dz_c = dchat;
    for (std::size_t k = 0; k < dz_c.size(); ++k)
      dz_c.data()[k] *= selu_prime(cache.cand_pre[t].data()[k]);

    const Matrix& e = cache.enc_out[t];
    auto accumulate_gate = [&](LstmGate& gate_grads, const LstmGate& gate,
                               const Matrix& dz, Matrix& de, Matrix& dh_prev) {
      add_in_place(gate_grads.w, matmul_at(dz, e));
      add_in_place(gate_grads.u, matmul_at(dz, h_prev));
      const auto sums = column_sums(dz);
      for (std::size_t k = 0; k < sums.size(); ++k) gate_grads.b[k] += sums[k];
      add_in_place(de, matmul(dz, gate.w));
      add_in_place(dh_prev, matmul(dz, gate.u));
    };

    Matrix de(gauges, p.encoder_size(), 0.0);
    Matrix dh_prev(gauges, hidden, 0.0);
    accumulate_gate(g.lstm.forget, p.lstm.forget, dz_f, de, dh_prev);
    accumulate_gate(g.lstm.input, p.lstm.input, dz_i, de, dh_prev);
    accumulate_gate(g.lstm.candidate, p.lstm.candidate, dz_c, de, dh_prev);
    accumulate_gate(g.lstm.output, p.lstm.output, dz_o, de, dh_prev);

    // Encoder at this step.
    if (cache.enc_mask[t].size() > 0) de = hadamard(de, cache.enc_mask[t]);
    Matrix dz_e = de;
    for (std::size_t k = 0; k < dz_e.size(); ++k)
      dz_e.data()[k] *= selu_prime(cache.enc_pre[t].data()[k]);
    add_in_place(g.encoder.weight, matmul_at(dz_e, cache.raw_inputs[t]));
    const auto bias_sums = column_sums(dz_e);
    for (std::size_t k = 0; k < bias_sums.size(); ++k)
      g.encoder.bias[k] += bias_sums[k];

    dh = std::move(dh_prev);
    dc = hadamard(dc, f);
  }

  return g;
}

double mse_loss(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() ||
      predictions.cols() != targets.cols())
    throw ShapeError("mse_loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double d = predictions.data()[k] - targets.data()[k];
    acc += d * d;
  }
  return acc / static_cast<double>(predictions.size());
}

Matrix mse_loss_grad(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() ||
      predictions.cols() != targets.cols())
    throw ShapeError("mse_loss_grad: shape mismatch");
  Matrix g(predictions.rows(), predictions.cols());
  const double scale = 2.0 / static_cast<double>(predictions.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g.data()[k] = scale * (predictions.data()[k] - targets.data()[k]);
  return g;
}

AdamState make_adam_state(const ModelParams& p, double learning_rate) {
  AdamState s;
  s.m = make_gradients_like(p);
  s.v = make_gradients_like(p);
  s.learning_rate = learning_rate;
  return s;
}

namespace {

struct TensorRef {
  std::string name;
  double* data;
  std::size_t len;
};

template <class P>
std::vector<TensorRef> tensor_refs(P& p) {
  std::vector<TensorRef> refs;
  for_each_tensor(p, [&](const std::string& name, double* data,
                         std::size_t rows, std::size_t cols) {
    refs.push_back({name, data, rows * cols});
  });
  return refs;
}

template <class P>
std::vector<TensorRef> tensor_refs_mutable_copy(const P& p) {
  // const_cast-free const access: copy out pointers via the mutable overload.
  return tensor_refs(const_cast<P&>(p));
}

}  // namespace

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state) {
  auto ps = tensor_refs(params);
  auto gs = tensor_refs_mutable_copy(grads);
  auto ms = tensor_refs(state.m);
  auto vs = tensor_refs(state.v);
  if (ps.size() != gs.size())
    throw ContractError("adam_step: gradient tensor count mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  for (std::size_t idx = 0; idx < ps.size(); ++idx) {
    if (ps[idx].len != gs[idx].len)
      throw ContractError("adam_step: shape mismatch for " + ps[idx].name);
    double* w = ps[idx].data;
    const double* g = gs[idx].data;
    double* m = ms[idx].data;
    double* v = vs[idx].data;
    for (std::size_t k = 0; k < ps[idx].len; ++k) {
      if (!std::isfinite(g[k]))
        throw TrainingError("non-finite gradient in " + ps[idx].name);
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double evaluate_mean_mse(const ModelParams& p, const AssembledData& data,
                         std::size_t l_seq) {
  Batcher batcher(data, l_seq);
  const std::size_t n = batcher.count();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Batch batch = batcher.at(i);
    const Matrix pred = forward(batch, p, RunMode::eval, nullptr);
    acc += mse_loss(pred, batch.targets);
  }
  return acc / static_cast<double>(n);
}

TrainResult train(const TrainConfig& cfg, const AssembledData& train_data,
                  const AssembledData& val_data, ModelParams params,
                  Rng& dropout_rng) {
  TrainResult result;
  result.history = {};
  if (cfg.target_successful_epochs == 0) {
    result.params = std::move(params);
    return result;
  }

  Batcher batcher(train_data, cfg.l_seq);
  const std::size_t n_batches = batcher.count();
  AdamState adam = make_adam_state(params, cfg.learning_rate);

  double prev_train = std::numeric_limits<double>::infinity();
  double prev_val = std::numeric_limits<double>::infinity();
  std::size_t successful = 0;
  std::size_t epoch = 0;

  while (successful < cfg.target_successful_epochs) {
    if (cfg.max_epochs != 0 && epoch >= cfg.max_epochs) break;
    ++epoch;

    double epoch_loss = 0.0;
    ForwardCache cache;
    for (std::size_t i = 0; i < n_batches; ++i) {
      const Batch batch = batcher.at(i);
      const Matrix pred =
          forward(batch, params, RunMode::train, &dropout_rng, &cache);
      const double loss = mse_loss(pred, batch.targets);
      if (!std::isfinite(loss))
        throw TrainingError("training diverged at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(i));
      epoch_loss += loss;
      const Gradients grads =
          backward(params, cache, mse_loss_grad(pred, batch.targets));
      adam_step(params, grads, adam);
    }
    const double train_loss = epoch_loss / static_cast<double>(n_batches);
    const double val_loss = evaluate_mean_mse(params, val_data, cfg.l_seq);
    if (!std::isfinite(val_loss))
      throw TrainingError("validation loss non-finite at epoch " +
                          std::to_string(epoch));

    const bool improved = train_loss < prev_train || val_loss < prev_val;
    if (improved) ++successful;
    result.history.push_back(EpochRecord{epoch, std::sqrt(train_loss),
                                         std::sqrt(val_loss), improved});
    if (cfg.on_epoch) cfg.on_epoch(result.history.back());
    prev_train = train_loss;
    prev_val = val_loss;
  }

  result.params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += kB64Alphabet[v & 63];
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const unsigned v = bytes[i] << 16;
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text,
                                         const std::string& context) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i)
      t[static_cast<unsigned char>(kB64Alphabet[i])] = i;
    return t;
  }();
  if (text.size() % 4 != 0)
    throw FormatError("checkpoint " + context + ": base64 length " +
                      std::to_string(text.size()) + " not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char ch = text[i + k];
      if (ch == '=' && i + 4 == text.size() && k >= 2) {
        vals[k] = 0;
        ++pad;
        continue;
      }
      vals[k] = table[static_cast<unsigned char>(ch)];
      if (vals[k] < 0)
        throw FormatError("checkpoint " + context +
                          ": invalid base64 character at offset " +
                          std::to_string(i + k));
    }
    const unsigned v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back((v >> 16) & 0xFF);
    if (pad < 2) out.push_back((v >> 8) & 0xFF);
    if (pad < 1) out.push_back(v & 0xFF);
  }
  return out;
}

std::vector<unsigned char> doubles_to_le_bytes(const double* data,
                                               std::size_t len) {
  std::vector<unsigned char> bytes(len * 8);
  for (std::size_t k = 0; k < len; ++k) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[k], 8);
    for (int b = 0; b < 8; ++b)
      bytes[k * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
  }
  return bytes;
}

void le_bytes_to_doubles(const std::vector<unsigned char>& bytes, double* data,
                         std::size_t len) {
  for (std::size_t k = 0; k < len; ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(bytes[k * 8 + b]) << (8 * b);
    std::memcpy(&data[k], &bits, 8);
  }
}

constexpr const char* kCheckpointFormat = "hydroforecast-checkpoint";

}  // namespace

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path,
                     const nlohmann::json& extra) {
  nlohmann::json doc;
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = *it;
  doc["format"] = kCheckpointFormat;
  doc["version"] = 1;
  doc["shapes"] = {{"n_inputs", p.n_inputs()},
                   {"encoder_size", p.encoder_size()},
                   {"hidden_size", p.hidden_size()},
                   {"n_targets", p.n_targets()}};
  doc["dropout_rate"] = p.dropout_rate;

  nlohmann::json tensors = nlohmann::json::array();
  for_each_tensor(const_cast<ModelParams&>(p),
                  [&](const std::string& name, double* data, std::size_t rows,
                      std::size_t cols) {
                    tensors.push_back(
                        {{"name", name},
                         {"rows", rows},
                         {"cols", cols},
                         {"data", base64_encode(
                                      doubles_to_le_bytes(data, rows * cols))}});
                  });
  doc["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write checkpoint: " + path.string());
  out << doc.dump(2) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path,
                            nlohmann::json* extra) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open checkpoint: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("checkpoint parse failure at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }

  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat)
      throw FormatError("not a checkpoint file: " + path.string());
    const auto& shapes = doc.at("shapes");
    ModelShape shape;
    shape.n_inputs = shapes.at("n_inputs").get<std::size_t>();
    shape.encoder_size = shapes.at("encoder_size").get<std::size_t>();
    shape.hidden_size = shapes.at("hidden_size").get<std::size_t>();
    shape.n_targets = shapes.at("n_targets").get<std::size_t>();
    shape.dropout_rate = doc.at("dropout_rate").get<double>();

    Rng dummy(0);
    ModelParams p = init_params(shape, dummy);
    const auto& tensors = doc.at("tensors");

    std::size_t index = 0;
    for_each_tensor(p, [&](const std::string& name, double* data,
                           std::size_t rows, std::size_t cols) {
      if (index >= tensors.size())
        throw FormatError("checkpoint is missing tensor '" + name + "'");
      const auto& entry = tensors.at(index);
      if (entry.at("name").get<std::string>() != name)
        throw FormatError("checkpoint tensor " + std::to_string(index) +
                          " is '" + entry.at("name").get<std::string>() +
                          "', expected '" + name + "'");
      if (entry.at("rows").get<std::size_t>() != rows ||
          entry.at("cols").get<std::size_t>() != cols)
        throw FormatError("checkpoint tensor '" + name + "' has shape " +
                          std::to_string(entry.at("rows").get<std::size_t>()) +
                          "x" +
                          std::to_string(entry.at("cols").get<std::size_t>()) +
                          ", expected " + std::to_string(rows) + "x" +
                          std::to_string(cols));
      const auto bytes =
          base64_decode(entry.at("data").get<std::string>(), name);
      if (bytes.size() != rows * cols * 8)
        throw FormatError("checkpoint tensor '" + name + "' has " +
                          std::to_string(bytes.size()) + " payload bytes, " +
                          "expected " + std::to_string(rows * cols * 8));
      le_bytes_to_doubles(bytes, data, rows * cols);
      ++index;
    });

    if (extra) {
      *extra = doc;
      extra->erase("format");
      extra->erase("version");
      extra->erase("shapes");
      extra->erase("dropout_rate");
      extra->erase("tensors");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace hydro
