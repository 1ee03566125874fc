// model.hpp - The forecasting network: dense encoder -> LSTM -> dense
// decoder, all SELU-activated with sigmoid recurrent gates. Includes exact
// backpropagation through time, the Adam optimizer, symbolic-window batching
// over the raw series tensor, the successful-epoch training loop, and
// checkpoint I/O.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hydro/numerics.hpp"

namespace hydro {

// selu(x) = lambda*x for x > 0, lambda*alpha*(e^x - 1) otherwise.
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

double selu(double x);

struct DenseParams {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
};

// One gate's parameter triple: w maps the (encoded) input, u the previous
// hidden state.
struct LstmGate {
  Matrix w;                  // hidden x input
  Matrix u;                  // hidden x hidden
  std::vector<double> b;     // hidden
};

struct LstmParams {
  LstmGate forget;
  LstmGate input;
  LstmGate candidate;  // own triple; the cell candidate does not share the
                       // input gate's weights
  LstmGate output;

  std::size_t hidden_size() const { return forget.w.rows(); }
  std::size_t input_size() const { return forget.w.cols(); }
};

struct ModelParams {
  DenseParams encoder;
  LstmParams lstm;
  DenseParams decoder;
  double dropout_rate = 0.2;

  std::size_t n_inputs() const { return encoder.weight.cols(); }
  std::size_t encoder_size() const { return encoder.weight.rows(); }
  std::size_t hidden_size() const { return lstm.hidden_size(); }
  std::size_t n_targets() const { return decoder.weight.rows(); }
};

struct Gradients {
  DenseParams encoder;
  LstmParams lstm;
  DenseParams decoder;
};

// Visits every learnable tensor in the documented fixed order (encoder,
// then forget/input/candidate/output gates as w,u,b, then decoder). This
// order defines the checkpoint layout and the Adam/FD flattening.
template <class Params, class Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn("encoder.weight", p.encoder.weight.data(), p.encoder.weight.rows(),
     p.encoder.weight.cols());
  fn("encoder.bias", p.encoder.bias.data(), std::size_t{1}, p.encoder.bias.size());
  auto gate = [&](const std::string& name, auto& g) {
    fn(name + ".w", g.w.data(), g.w.rows(), g.w.cols());
    fn(name + ".u", g.u.data(), g.u.rows(), g.u.cols());
    fn(name + ".b", g.b.data(), std::size_t{1}, g.b.size());
  };
  gate("lstm.forget", p.lstm.forget);
  gate("lstm.input", p.lstm.input);
  gate("lstm.candidate", p.lstm.candidate);
  gate("lstm.output", p.lstm.output);
  fn("decoder.weight", p.decoder.weight.data(), p.decoder.weight.rows(),
     p.decoder.weight.cols());
  fn("decoder.bias", p.decoder.bias.data(), std::size_t{1}, p.decoder.bias.size());
}

struct ModelShape {
  std::size_t n_inputs = 0;
  std::size_t encoder_size = 64;
  std::size_t hidden_size = 64;
  std::size_t n_targets = 0;
  double dropout_rate = 0.2;
};

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))) from the seeded rng,
// zero biases. Tensors are drawn in for_each_tensor order.
ModelParams init_params(const ModelShape& shape, Rng& rng);

Gradients make_gradients_like(const ModelParams& p);

// -------------------------------------------------------------------------
// LSTM cell
// -------------------------------------------------------------------------

struct LstmCellResult {
  std::vector<double> h;
  std::vector<double> c;
  // Gate activations, exposed for inspection and tests.
  std::vector<double> f, i, chat, o;
};

// Single-sample step:
//   f = sigmoid(Wf x + Uf h + bf)        i = sigmoid(Wi x + Ui h + bi)
//   chat = selu(Wc x + Uc h + bc)        o = sigmoid(Wo x + Uo h + bo)
//   c = c_prev . f + i . chat            h = o . selu(c)
// SELU stands in for tanh in both the candidate and the cell output.
LstmCellResult lstm_cell_forward(std::span<const double> x,
                                 std::span<const double> h_prev,
                                 std::span<const double> c_prev,
                                 const LstmParams& p);

// -------------------------------------------------------------------------
// Symbolic-window batching
// -------------------------------------------------------------------------

// Model-ready view of one gauge subset: scaled series, static rows, and
// encoding channels. A step row is laid out as
//   [observed features | static | space encodings | time encodings]
// in input_names order. Targets are scaled series sampled at horizon 1.
struct AssembledData {
  std::vector<Matrix> feature_series;  // each n_days x n_gauges
  Matrix static_rows;                  // n_gauges x n_static
  Matrix space_enc;                    // n_gauges x n_space
  Matrix time_enc;                     // n_days x n_time
  std::vector<Matrix> target_series;   // each n_days x n_gauges
  std::vector<std::string> input_names;
  std::vector<std::string> target_names;
  std::vector<std::string> gauge_ids;

  std::size_t n_days() const {
    return feature_series.empty() ? time_enc.rows() : feature_series[0].rows();
  }
  std::size_t n_gauges() const { return gauge_ids.size(); }
  std::size_t n_inputs() const {
    return feature_series.size() + static_rows.cols() + space_enc.cols() +
           time_enc.cols();
  }
};

// Batch bookkeeping. day_total counts the days usable as window input; when
// a plan is derived from a D-day dataset with a 1-day horizon, day_total =
// D - 1 so every window keeps a target day.
struct BatchPlan {
  std::size_t day_total = 0;
  std::size_t l_seq = 21;
  std::size_t n_gauges = 0;
  std::size_t n_input_properties = 0;
};

// day_total - l_seq + 1; DomainError if l_seq exceeds day_total.
std::size_t batches_per_epoch(std::size_t day_total, std::size_t l_seq);

// l_seq * n_gauges * n_props.
std::size_t batch_size(std::size_t l_seq, std::size_t n_gauges,
                       std::size_t n_props);

// Number of Batch objects currently alive; the symbolic-window tests pin
// this at <= 1 during a sweep.
std::size_t live_batch_count();

struct Batch {
  std::vector<Matrix> steps;  // l_seq matrices of n_gauges x n_inputs
  Matrix targets;             // n_gauges x n_targets

  Batch() { bump(+1); }
  Batch(const Batch& other) : steps(other.steps), targets(other.targets) {
    bump(+1);
  }
  Batch(Batch&& other) noexcept
      : steps(std::move(other.steps)), targets(std::move(other.targets)) {
    bump(+1);
  }
  Batch& operator=(const Batch&) = default;
  Batch& operator=(Batch&&) = default;
  ~Batch() { bump(-1); }

 private:
  static void bump(int delta);
};

// Slices window i on demand; holds only a reference to the assembled data,
// so its state is O(1) regardless of how many batches an epoch sweeps.
class Batcher {
 public:
  Batcher(const AssembledData& data, std::size_t l_seq);

  const BatchPlan& plan() const { return plan_; }
  std::size_t count() const;

  // Window [i, i+l_seq) as inputs plus the day i+l_seq target row.
  Batch at(std::size_t i) const;

 private:
  const AssembledData& data_;
  BatchPlan plan_;
};

// -------------------------------------------------------------------------
// Forward / backward
// -------------------------------------------------------------------------

enum class RunMode { train, eval };

struct ForwardCache {
  std::vector<Matrix> raw_inputs;  // X_t per step
  std::vector<Matrix> enc_pre;     // encoder pre-activation
  std::vector<Matrix> enc_out;     // encoder output after dropout
  std::vector<Matrix> enc_mask;    // inverted-dropout masks (empty if off)
  std::vector<Matrix> f, i, chat, o;
  std::vector<Matrix> cand_pre;    // candidate pre-activation
  std::vector<Matrix> cell;        // C_t per step
  std::vector<Matrix> cell_selu;   // selu(C_t), reused by backward
  std::vector<Matrix> hidden;      // h_t per step
  Matrix dec_pre;
  Matrix dec_mask;
  Matrix predictions;
  bool train_mode = false;
};

// Runs the network over one batch window and returns horizon-1 predictions
// (n_gauges x n_targets). Dropout (inverted convention) is applied to the
// encoder and decoder outputs in train mode only; rng may be null when no
// mask will be drawn.
Matrix forward(const Batch& batch, const ModelParams& p, RunMode mode,
               Rng* rng, ForwardCache* cache = nullptr);

// Exact gradients through all l_seq steps, including the dropout masks.
// Requires the cache of a train-mode forward.
Gradients backward(const ModelParams& p, const ForwardCache& cache,
                   const Matrix& d_predictions);

// Mean squared error over every predicted target jointly, and its gradient.
double mse_loss(const Matrix& predictions, const Matrix& targets);
Matrix mse_loss_grad(const Matrix& predictions, const Matrix& targets);

// -------------------------------------------------------------------------
// Adam
// -------------------------------------------------------------------------

struct AdamState {
  Gradients m;  // first moments
  Gradients v;  // second moments
  long long t = 0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const ModelParams& p, double learning_rate);

// Standard bias-corrected update, in place. A non-finite gradient raises
// TrainingError naming the offending tensor.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state);

// -------------------------------------------------------------------------
// Training loop
// -------------------------------------------------------------------------

struct TrainConfig {
  std::size_t target_successful_epochs = 120;
  double learning_rate = 0.001;
  std::size_t l_seq = 21;
  std::size_t max_epochs = 0;  // safety cap; 0 means uncapped
  std::function<void(const struct EpochRecord&)> on_epoch;  // progress hook
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  bool successful = false;
};

using LossHistory = std::vector<EpochRecord>;

struct TrainResult {
  ModelParams params;
  LossHistory history;
};

// Sweeps every batch index in order each epoch; an epoch is successful when
// the epoch-mean training loss or the validation loss strictly improves on
// the previous epoch. Stops once the successful count reaches the target.
TrainResult train(const TrainConfig& cfg, const AssembledData& train_data,
                  const AssembledData& val_data, ModelParams params,
                  Rng& dropout_rng);

// Mean MSE over all windows of `data`, eval mode. Used for validation loss.
double evaluate_mean_mse(const ModelParams& p, const AssembledData& data,
                         std::size_t l_seq);

// -------------------------------------------------------------------------
// Checkpoints
// -------------------------------------------------------------------------

// JSON document: header (shapes, dropout rate, format tag) plus one base64
// payload of little-endian doubles per tensor, in for_each_tensor order.
// `extra` keys are merged into the root object and returned verbatim by
// load_checkpoint, which lets callers store pipeline state alongside.
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());

ModelParams load_checkpoint(const std::filesystem::path& path,
                            nlohmann::json* extra = nullptr);

}  // namespace hydro
