#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kiae/data.hpp"
#include "kiae/knowledge.hpp"
#include "kiae/numerics.hpp"

namespace kiae {

enum class SequenceMode {
  single_step,  // each window is one LSTM step of window-length features
  per_feature,  // each window is window-length scalar steps
};

enum class ReprActivation { relu, identity };

struct KiaeConfig {
  std::size_t input_dim = 0;
  std::size_t lstm_hidden = 32;
  std::size_t fc_a = 64;
  std::size_t fc_b = 32;
  std::size_t repr_dim = 2;
  double omega1 = 0.5;
  double omega2 = 0.5;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  SequenceMode sequence_mode = SequenceMode::single_step;
  std::optional<std::size_t> window;  // unset: the whole sample is one window
  std::optional<std::size_t> jump;    // unset: equals the window length
  ReprActivation repr_activation = ReprActivation::relu;
  std::uint64_t seed = 0;

  /// Throws ConfigError on an invalid combination.
  void validate() const;

  std::size_t window_length() const;
  std::size_t step_dim() const;
  std::size_t steps_per_window() const;
  WindowPlan window_plan() const;

  bool operator==(const KiaeConfig&) const = default;
};

std::string to_string(SequenceMode mode);
SequenceMode parse_sequence_mode(const std::string& text);
std::string to_string(ReprActivation act);
ReprActivation parse_repr_activation(const std::string& text);

struct ParamBlock {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::size_t offset;

  std::size_t size() const { return rows * cols; }
  bool operator==(const ParamBlock&) const = default;
};

/// All trainable parameters, stored in one flat vector addressed by named
/// blocks:
///   enc_fwd_w/b, enc_bwd_w/b   bidirectional encoder LSTM, hidden h
///   enc_fc1_w/b (2h->a), enc_fc2_w/b (a->b), repr_w/b (b->r)
///   dec_fc1_w/b (r->b), dec_fc2_w/b (b->a)
///   dec_lstm_w/b               decoder LSTM, input a, hidden h
///   out_w/b (h->step_dim)      per-step linear projection
class KiaeModel {
 public:
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn in block order from
  /// a stream derived from config.seed.
  static KiaeModel initialize(const KiaeConfig& config);
  static KiaeModel zeros(const KiaeConfig& config);

  const KiaeConfig& config() const { return config_; }
  KiaeConfig& mutable_config() { return config_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::string_view name) const;

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> view(const ParamBlock& b) const {
    return std::span<const double>(params_).subspan(b.offset, b.size());
  }

  bool operator==(const KiaeModel&) const = default;

 private:
  explicit KiaeModel(const KiaeConfig& config);

  KiaeConfig config_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> params_;
};

struct LatentEmbedding {
  std::vector<std::string> sample_ids;
  Matrix vectors;  // n x r
};

/// Representation of every row of `samples` (n x input_dim). Multi-window
/// samples average their window representations.
Matrix encode(const KiaeModel& model, const Matrix& samples);
LatentEmbedding encode(const KiaeModel& model, const Dataset& ds);

/// Decoder output for each latent row: `steps` LSTM steps, each projected to
/// step_dim values, flattened to steps * step_dim columns.
Matrix decode(const KiaeModel& model, const Matrix& latent, std::size_t steps);
/// Uses the configured steps per window.
Matrix decode(const KiaeModel& model, const Matrix& latent);

struct LossResult {
  double value = 0.0;
  double reconstruction_term = 0.0;  // weighted contribution
  double distance_term = 0.0;        // weighted contribution
  std::size_t distance_pairs = 0;    // ordered known pairs included
  std::vector<std::string> warnings;
  std::vector<double> gradient;      // same layout as parameters()
};

/// Joint objective over a batch (n >= 2 rows):
///   omega1/(n^2-n) * sum_{i != j} ||m_i - rec(m_i)||
/// + omega2/P * sum_{i != j, known} | ||R(m_i) - R(m_j)|| - M(i, j) |
/// where P counts the known ordered pairs. The distance term is skipped
/// entirely when omega2 == 0, which makes the result independent of `mt`.
LossResult loss(const KiaeModel& model, const Matrix& batch, const KnowledgeMatrix& mt,
                double omega1, double omega2, bool with_gradient = true);

/// Plain reconstruction autoencoder objective, (1/n) sum_i ||m_i - rec(m_i)||.
LossResult reconstruction_objective(const KiaeModel& model, const Matrix& batch,
                                    bool with_gradient = true);

struct TrainResult {
  KiaeModel model;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Called after each epoch with its 1-based number.
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over seeded shuffled minibatches;
/// the knowledge matrix is restricted to each batch. A trailing batch of a
/// single sample is folded into the previous one since pair terms need two.
TrainResult train(const KiaeConfig& config, const Dataset& ds, const KnowledgeMatrix& mt,
                  const EpochCallback& on_epoch = {});
/// Continues from a given model (its config supplies the hyperparameters).
TrainResult train_from(KiaeModel model, const Dataset& ds, const KnowledgeMatrix& mt,
                       const EpochCallback& on_epoch = {});

/// Combines per-window reconstructions into one sample. `window_values[w]`
/// holds window_length values in padded coordinates. Continuous positions
/// take the mean over covering windows; categorical positions take a majority
/// vote of the rounded values, ties resolved toward the earliest window.
std::vector<double> aggregate_windows(const WindowPlan& plan,
                                      const std::vector<std::vector<double>>& window_values,
                                      std::span<const FeatureKind> kinds);

/// Encodes and decodes each window of `sample`, then aggregates.
std::vector<double> reconstruct_full(const KiaeModel& model, std::span<const double> sample,
                                     const WindowPlan& plan, std::span<const FeatureKind> kinds);

/// Text container, bit-exact: config lines then one hex-float block per
/// parameter tensor with its shape.
void save_checkpoint(const KiaeModel& model, const std::string& path);
KiaeModel load_checkpoint(const std::string& path);

}  // namespace kiae
