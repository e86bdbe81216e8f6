#include "kiae/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kiae/error.hpp"
#include "kiae/kernels.hpp"
#include "kiae/lstm.hpp"

namespace kiae {

// ---------------------------------------------------------------------------
// Configuration

void KiaeConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (input_dim == 0) fail("input_dim must be >= 1");
  if (lstm_hidden == 0 || fc_a == 0 || fc_b == 0) fail("layer sizes must be >= 1");
  if (repr_dim == 0) fail("repr_dim must be >= 1");
  if (!(omega1 >= 0.0 && omega1 <= 1.0) || !(omega2 >= 0.0 && omega2 <= 1.0))
    fail("omega1 and omega2 must lie in [0, 1]");
  if (std::abs(omega1 + omega2 - 1.0) > 1e-12) fail("omega1 + omega2 must equal 1");
  if (batch_size < 2) fail("batch_size must be >= 2 (the distance term needs pairs)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be > 0");
  if (window && *window == 0) fail("window must be >= 1");
  if (jump && !window) fail("jump requires a window length");
  if (jump && (*jump == 0 || *jump > *window)) fail("jump must lie in [1, window]");
}

std::size_t KiaeConfig::window_length() const { return window ? *window : input_dim; }

std::size_t KiaeConfig::step_dim() const {
  return sequence_mode == SequenceMode::single_step ? window_length() : 1;
}

std::size_t KiaeConfig::steps_per_window() const {
  return sequence_mode == SequenceMode::single_step ? 1 : window_length();
}

WindowPlan KiaeConfig::window_plan() const {
  std::size_t len = window_length();
  return plan_windows(input_dim, len, jump ? *jump : len);
}

std::string to_string(SequenceMode mode) {
  return mode == SequenceMode::single_step ? "single_step" : "per_feature";
}

SequenceMode parse_sequence_mode(const std::string& text) {
  if (text == "single_step") return SequenceMode::single_step;
  if (text == "per_feature") return SequenceMode::per_feature;
  throw ConfigError("sequence_mode must be single_step or per_feature, got '" + text + "'");
}

std::string to_string(ReprActivation act) {
  return act == ReprActivation::relu ? "relu" : "identity";
}

ReprActivation parse_repr_activation(const std::string& text) {
  if (text == "relu") return ReprActivation::relu;
  if (text == "identity") return ReprActivation::identity;
  throw ConfigError("repr_activation must be relu or identity, got '" + text + "'");
}

// ---------------------------------------------------------------------------
// Parameters

KiaeModel::KiaeModel(const KiaeConfig& config) : config_(config) {
  config_.validate();
  const std::size_t h = config_.lstm_hidden;
  const std::size_t s = config_.step_dim();
  const std::size_t a = config_.fc_a;
  const std::size_t b = config_.fc_b;
  const std::size_t r = config_.repr_dim;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    blocks_.push_back({std::move(name), rows, cols, offset});
    offset += rows * cols;
  };
  add("enc_fwd_w", 4 * h, s + h);
  add("enc_fwd_b", 4 * h, 1);
  add("enc_bwd_w", 4 * h, s + h);
  add("enc_bwd_b", 4 * h, 1);
  add("enc_fc1_w", a, 2 * h);
  add("enc_fc1_b", a, 1);
  add("enc_fc2_w", b, a);
  add("enc_fc2_b", b, 1);
  add("repr_w", r, b);
  add("repr_b", r, 1);
  add("dec_fc1_w", b, r);
  add("dec_fc1_b", b, 1);
  add("dec_fc2_w", a, b);
  add("dec_fc2_b", a, 1);
  add("dec_lstm_w", 4 * h, a + h);
  add("dec_lstm_b", 4 * h, 1);
  add("out_w", s, h);
  add("out_b", s, 1);
  params_.assign(offset, 0.0);
}

KiaeModel KiaeModel::zeros(const KiaeConfig& config) { return KiaeModel(config); }

KiaeModel KiaeModel::initialize(const KiaeConfig& config) {
  KiaeModel model(config);
  Rng rng(derive_seed(config.seed, 1));
  // Blocks come in (weight, bias) pairs; both use the weight's fan-in.
  for (std::size_t k = 0; k < model.blocks_.size(); k += 2) {
    const auto& w = model.blocks_[k];
    const auto& bias = model.blocks_[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
    for (std::size_t p = 0; p < w.size(); ++p) model.params_[w.offset + p] = uniform_one(rng, -bound, bound);
    for (std::size_t p = 0; p < bias.size(); ++p)
      model.params_[bias.offset + p] = uniform_one(rng, -bound, bound);
  }
  return model;
}

const ParamBlock& KiaeModel::block(std::string_view name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw DomainError("no parameter block named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Forward and backward passes

namespace {

void dense(const double* w, const double* b, std::size_t out, std::size_t in, const double* x,
           std::vector<double>& y) {
  y.resize(out);
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = w + r * in;
    double s = b[r];
    for (std::size_t k = 0; k < in; ++k) s += row[k] * x[k];
    y[r] = s;
  }
}

// Accumulates dW, db; writes dx when given.
void dense_backward(const double* w, std::size_t out, std::size_t in, const double* x,
                    const double* dy, double* dw, double* db, double* dx) {
  if (dx) std::fill(dx, dx + in, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    const double g = dy[r];
    db[r] += g;
    if (g == 0.0) continue;
    const double* row = w + r * in;
    double* drow = dw + r * in;
    for (std::size_t k = 0; k < in; ++k) {
      drow[k] += g * x[k];
      if (dx) dx[k] += g * row[k];
    }
  }
}

void relu(const std::vector<double>& u, std::vector<double>& a) {
  a.resize(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) a[k] = u[k] > 0.0 ? u[k] : 0.0;
}

void relu_mask(const std::vector<double>& u, std::vector<double>& grad) {
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!(u[k] > 0.0)) grad[k] = 0.0;
}

struct EncoderCache {
  std::vector<lstm::StepCache> fwd, bwd;
  std::vector<double> e, u1, a1, u2, a2, u3, z;
};

struct DecoderCache {
  std::vector<double> v1, q1, v2, q2;
  std::vector<lstm::StepCache> steps;
  std::vector<double> y;  // steps * step_dim
};

struct WindowCache {
  EncoderCache enc;
  DecoderCache dec;
};

struct SampleCache {
  std::vector<WindowCache> windows;
  std::vector<double> repr;
  std::vector<double> recon;  // real positions only
  double error = 0.0;         // ||m - recon||
};

// Borrowed view of the parameters with the config-derived sizes.
class Network {
 public:
  explicit Network(const KiaeModel& model)
      : model_(model),
        cfg_(model.config()),
        h_(cfg_.lstm_hidden),
        s_(cfg_.step_dim()),
        t_(cfg_.steps_per_window()),
        a_(cfg_.fc_a),
        b_(cfg_.fc_b),
        r_(cfg_.repr_dim),
        plan_(cfg_.window_plan()) {
    for (const auto& blk : model.blocks()) offsets_.push_back(blk.offset);
  }

  const WindowPlan& plan() const { return plan_; }
  std::size_t repr_dim() const { return r_; }
  std::size_t window_length() const { return plan_.window_length; }

  std::vector<double> padded(std::span<const double> sample) const {
    std::vector<double> out(plan_.left_pad, 0.0);
    out.insert(out.end(), sample.begin(), sample.end());
    return out;
  }

  void encode_window(const double* seq, EncoderCache& c) const {
    std::vector<double> h0(h_, 0.0), c0(h_, 0.0);
    c.fwd.resize(t_);
    c.bwd.resize(t_);
    for (std::size_t t = 0; t < t_; ++t) {
      const auto& prev_h = t == 0 ? h0 : c.fwd[t - 1].h;
      const auto& prev_c = t == 0 ? c0 : c.fwd[t - 1].c;
      lstm::forward_step(w(kEncFwdW), w(kEncFwdB), s_, h_, {seq + t * s_, s_}, prev_h, prev_c,
                         c.fwd[t]);
    }
    for (std::size_t k = 0; k < t_; ++k) {
      std::size_t t = t_ - 1 - k;
      const auto& prev_h = k == 0 ? h0 : c.bwd[k - 1].h;
      const auto& prev_c = k == 0 ? c0 : c.bwd[k - 1].c;
      lstm::forward_step(w(kEncBwdW), w(kEncBwdB), s_, h_, {seq + t * s_, s_}, prev_h, prev_c,
                         c.bwd[k]);
    }
    c.e.assign(c.fwd.back().h.begin(), c.fwd.back().h.end());
    c.e.insert(c.e.end(), c.bwd.back().h.begin(), c.bwd.back().h.end());
    dense(p(kEncFc1W), p(kEncFc1B), a_, 2 * h_, c.e.data(), c.u1);
    relu(c.u1, c.a1);
    dense(p(kEncFc2W), p(kEncFc2B), b_, a_, c.a1.data(), c.u2);
    relu(c.u2, c.a2);
    dense(p(kReprW), p(kReprB), r_, b_, c.a2.data(), c.u3);
    if (cfg_.repr_activation == ReprActivation::relu)
      relu(c.u3, c.z);
    else
      c.z = c.u3;
  }

  void decode_latent(const double* z, std::size_t steps, DecoderCache& c) const {
    dense(p(kDecFc1W), p(kDecFc1B), b_, r_, z, c.v1);
    relu(c.v1, c.q1);
    dense(p(kDecFc2W), p(kDecFc2B), a_, b_, c.q1.data(), c.v2);
    relu(c.v2, c.q2);
    std::vector<double> h0(h_, 0.0), c0(h_, 0.0), out;
    c.steps.resize(steps);
    c.y.resize(steps * s_);
    for (std::size_t t = 0; t < steps; ++t) {
      const auto& prev_h = t == 0 ? h0 : c.steps[t - 1].h;
      const auto& prev_c = t == 0 ? c0 : c.steps[t - 1].c;
      lstm::forward_step(w(kDecLstmW), w(kDecLstmB), a_, h_, c.q2, prev_h, prev_c, c.steps[t]);
      dense(p(kOutW), p(kOutB), s_, h_, c.steps[t].h.data(), out);
      std::copy(out.begin(), out.end(), c.y.begin() + static_cast<std::ptrdiff_t>(t * s_));
    }
  }

  // dy: steps * step_dim. Writes dL/dz into dz (accumulating into grad).
  void decode_backward(const double* z, const DecoderCache& c, const std::vector<double>& dy,
                       double* grad, std::vector<double>& dz) const {
    const std::size_t steps = c.steps.size();
    std::vector<double> dq2(a_, 0.0), dh(h_), dh_next(h_, 0.0), dc(h_, 0.0), dx(a_), dh_prev(h_);
    for (std::size_t k = 0; k < steps; ++k) {
      std::size_t t = steps - 1 - k;
      // out projection: y_t = W h_t + b
      std::vector<double> dh_out(h_);
      dense_backward(p(kOutW), s_, h_, c.steps[t].h.data(), dy.data() + t * s_, g(grad, kOutW),
                     g(grad, kOutB), dh_out.data());
      for (std::size_t u = 0; u < h_; ++u) dh[u] = dh_next[u] + dh_out[u];
      lstm::backward_step(w(kDecLstmW), a_, h_, c.steps[t], dh, dc, gs(grad, kDecLstmW),
                          gs(grad, kDecLstmB), dx, dh_prev);
      for (std::size_t u = 0; u < a_; ++u) dq2[u] += dx[u];
      dh_next = dh_prev;
    }
    relu_mask(c.v2, dq2);
    std::vector<double> dq1(b_);
    dense_backward(p(kDecFc2W), a_, b_, c.q1.data(), dq2.data(), g(grad, kDecFc2W),
                   g(grad, kDecFc2B), dq1.data());
    relu_mask(c.v1, dq1);
    dz.assign(r_, 0.0);
    dense_backward(p(kDecFc1W), b_, r_, z, dq1.data(), g(grad, kDecFc1W), g(grad, kDecFc1B),
                   dz.data());
  }

  void encode_backward(const EncoderCache& c, std::vector<double> dz, double* grad) const {
    if (cfg_.repr_activation == ReprActivation::relu) relu_mask(c.u3, dz);
    std::vector<double> da2(b_), da1(a_), de(2 * h_);
    dense_backward(p(kReprW), r_, b_, c.a2.data(), dz.data(), g(grad, kReprW), g(grad, kReprB),
                   da2.data());
    relu_mask(c.u2, da2);
    dense_backward(p(kEncFc2W), b_, a_, c.a1.data(), da2.data(), g(grad, kEncFc2W),
                   g(grad, kEncFc2B), da1.data());
    relu_mask(c.u1, da1);
    dense_backward(p(kEncFc1W), a_, 2 * h_, c.e.data(), da1.data(), g(grad, kEncFc1W),
                   g(grad, kEncFc1B), de.data());

    std::vector<double> dh(h_), dc(h_), dh_prev(h_);
    std::copy(de.begin(), de.begin() + static_cast<std::ptrdiff_t>(h_), dh.begin());
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t k = 0; k < t_; ++k) {
      std::size_t t = t_ - 1 - k;
      lstm::backward_step(w(kEncFwdW), s_, h_, c.fwd[t], dh, dc, gs(grad, kEncFwdW),
                          gs(grad, kEncFwdB), {}, dh_prev);
      dh = dh_prev;
    }
    std::copy(de.begin() + static_cast<std::ptrdiff_t>(h_), de.end(), dh.begin());
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t k = 0; k < t_; ++k) {
      std::size_t idx = t_ - 1 - k;
      lstm::backward_step(w(kEncBwdW), s_, h_, c.bwd[idx], dh, dc, gs(grad, kEncBwdW),
                          gs(grad, kEncBwdB), {}, dh_prev);
      dh = dh_prev;
    }
  }

  // Representation only (no decoder), for inference.
  std::vector<double> represent(std::span<const double> sample) const {
    auto pad = padded(sample);
    std::vector<double> repr(r_, 0.0);
    EncoderCache c;
    for (const auto& win : plan_.windows) {
      encode_window(pad.data() + win.start, c);
      for (std::size_t k = 0; k < r_; ++k) repr[k] += c.z[k];
    }
    const double q = static_cast<double>(plan_.windows.size());
    for (auto& v : repr) v /= q;
    return repr;
  }

  void forward_sample(std::span<const double> sample, SampleCache& sc) const {
    auto pad = padded(sample);
    const auto& windows = plan_.windows;
    sc.windows.resize(windows.size());
    sc.repr.assign(r_, 0.0);
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      auto& wc = sc.windows[wi];
      encode_window(pad.data() + windows[wi].start, wc.enc);
      decode_latent(wc.enc.z.data(), t_, wc.dec);
      for (std::size_t k = 0; k < r_; ++k) sc.repr[k] += wc.enc.z[k];
    }
    const double q = static_cast<double>(windows.size());
    for (auto& v : sc.repr) v /= q;

    std::vector<std::vector<double>> outputs;
    outputs.reserve(windows.size());
    for (const auto& wc : sc.windows) outputs.push_back(wc.dec.y);
    sc.recon = aggregate_windows(plan_, outputs, {});
    double err = 0.0;
    for (std::size_t pos = 0; pos < sample.size(); ++pos) {
      double diff = sc.recon[pos] - sample[pos];
      err += diff * diff;
    }
    sc.error = std::sqrt(err);
  }

  // recon_coef multiplies d||m - recon||/d recon; d_repr is dL/dR for this sample.
  void backward_sample(std::span<const double> sample, const SampleCache& sc, double recon_coef,
                       const std::vector<double>& d_repr, double* grad) const {
    const auto& windows = plan_.windows;
    const std::size_t L = plan_.window_length;
    std::vector<std::size_t> cover(plan_.padded_length(), 0);
    for (const auto& win : windows)
      for (std::size_t idx = win.start; idx < win.end; ++idx) ++cover[idx];

    std::vector<double> d_recon(sample.size(), 0.0);
    if (recon_coef != 0.0 && sc.error > 0.0) {
      for (std::size_t pos = 0; pos < sample.size(); ++pos)
        d_recon[pos] = recon_coef * (sc.recon[pos] - sample[pos]) / sc.error;
    }
    const double q = static_cast<double>(windows.size());
    std::vector<double> dy(L), dz;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      const auto& win = windows[wi];
      const auto& wc = sc.windows[wi];
      std::fill(dy.begin(), dy.end(), 0.0);
      for (std::size_t k = 0; k < L; ++k) {
        std::size_t idx = win.start + k;
        if (idx < plan_.left_pad) continue;  // padding is not reconstructed
        dy[k] = d_recon[idx - plan_.left_pad] / static_cast<double>(cover[idx]);
      }
      decode_backward(wc.enc.z.data(), wc.dec, dy, grad, dz);
      for (std::size_t k = 0; k < r_; ++k) dz[k] += d_repr[k] / q;
      encode_backward(wc.enc, dz, grad);
    }
  }

 private:
  enum Block : std::size_t {
    kEncFwdW, kEncFwdB, kEncBwdW, kEncBwdB, kEncFc1W, kEncFc1B, kEncFc2W, kEncFc2B,
    kReprW, kReprB, kDecFc1W, kDecFc1B, kDecFc2W, kDecFc2B, kDecLstmW, kDecLstmB,
    kOutW, kOutB,
  };

  const double* p(Block blk) const { return model_.parameters().data() + offsets_[blk]; }
  std::span<const double> w(Block blk) const {
    return model_.view(model_.blocks()[blk]);
  }
  double* g(double* grad, Block blk) const { return grad + offsets_[blk]; }
  std::span<double> gs(double* grad, Block blk) const {
    return {grad + offsets_[blk], model_.blocks()[blk].size()};
  }

  const KiaeModel& model_;
  const KiaeConfig& cfg_;
  std::size_t h_, s_, t_, a_, b_, r_;
  WindowPlan plan_;
  std::vector<std::size_t> offsets_;
};

void check_batch(const KiaeModel& model, const Matrix& batch) {
  if (batch.cols() != model.config().input_dim) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " features, model expects " + std::to_string(model.config().input_dim));
  }
}

// Shared body of loss() and reconstruction_objective(). `mt` is only read when
// omega2 != 0.
LossResult objective(const KiaeModel& model, const Matrix& batch, const KnowledgeMatrix* mt,
                     double omega1, double omega2, bool with_gradient) {
  check_batch(model, batch);
  const std::size_t n = batch.rows();
  if (n < 2) throw DomainError("loss: batch needs at least 2 samples, got " + std::to_string(n));
  if (omega2 != 0.0 && (mt == nullptr || mt->size() != n)) {
    throw ShapeError("loss: knowledge matrix size does not match batch size " + std::to_string(n));
  }

  const Network net(model);
  std::vector<SampleCache> caches(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (kernels::parallel_active())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto si = static_cast<std::size_t>(i);
    net.forward_sample(batch.row(si), caches[si]);
  }

  LossResult result;
  const double nd = static_cast<double>(n);
  const double pair_norm = nd * nd - nd;
  double recon_sum = 0.0;
  for (const auto& c : caches) recon_sum += c.error;
  result.reconstruction_term = omega1 * (nd - 1.0) * recon_sum / pair_norm;
  result.value = result.reconstruction_term;
  const double recon_coef = omega1 * (nd - 1.0) / pair_norm;

  const std::size_t r = net.repr_dim();
  std::vector<std::vector<double>> d_repr(n, std::vector<double>(r, 0.0));
  if (omega2 != 0.0) {
    std::size_t ordered = 2 * mt->known_pair_count();
    result.distance_pairs = ordered;
    if (ordered == 0) {
      result.warnings.push_back(
          "every pair in the batch is masked; the distance term contributes 0");
    } else {
      const double coef = omega2 / static_cast<double>(ordered);
      double dist_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (!mt->known(i, j)) continue;
          double d2 = 0.0;
          for (std::size_t k = 0; k < r; ++k) {
            double diff = caches[i].repr[k] - caches[j].repr[k];
            d2 += diff * diff;
          }
          const double dist = std::sqrt(d2);
          const double gap = dist - mt->at(i, j);
          dist_sum += 2.0 * std::abs(gap);
          // Subgradient 0 at the kink and at coincident representations.
          if (!with_gradient || gap == 0.0 || dist == 0.0) continue;
          const double scale = coef * 2.0 * (gap > 0.0 ? 1.0 : -1.0) / dist;
          for (std::size_t k = 0; k < r; ++k) {
            double diff = caches[i].repr[k] - caches[j].repr[k];
            d_repr[i][k] += scale * diff;
            d_repr[j][k] -= scale * diff;
          }
        }
      }
      result.distance_term = coef * dist_sum;
      result.value += result.distance_term;
    }
  }

  if (with_gradient) {
    const std::size_t pcount = model.parameters().size();
    std::vector<double> per_sample(n * pcount, 0.0);
#pragma omp parallel for schedule(static) if (kernels::parallel_active())
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      auto si = static_cast<std::size_t>(i);
      net.backward_sample(batch.row(si), caches[si], recon_coef, d_repr[si],
                          per_sample.data() + si * pcount);
    }
    result.gradient.assign(pcount, 0.0);
    kernels::reduce_rows(per_sample, n, pcount, result.gradient);
  }
  return result;
}

Matrix rows_at(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

LossResult loss(const KiaeModel& model, const Matrix& batch, const KnowledgeMatrix& mt,
                double omega1, double omega2, bool with_gradient) {
  if (!(omega1 >= 0.0 && omega2 >= 0.0)) throw DomainError("loss: weights must be >= 0");
  if (mt.size() != batch.rows()) {
    throw ShapeError("loss: knowledge matrix is " + std::to_string(mt.size()) +
                     " wide for a batch of " + std::to_string(batch.rows()));
  }
  return objective(model, batch, &mt, omega1, omega2, with_gradient);
}

LossResult reconstruction_objective(const KiaeModel& model, const Matrix& batch,
                                    bool with_gradient) {
  return objective(model, batch, nullptr, 1.0, 0.0, with_gradient);
}

// ---------------------------------------------------------------------------
// Inference

Matrix encode(const KiaeModel& model, const Matrix& samples) {
  check_batch(model, samples);
  const Network net(model);
  Matrix out(samples.rows(), model.config().repr_dim);
  const auto count = static_cast<std::ptrdiff_t>(samples.rows());
#pragma omp parallel for schedule(static) if (kernels::parallel_active())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto si = static_cast<std::size_t>(i);
    auto repr = net.represent(samples.row(si));
    std::copy(repr.begin(), repr.end(), out.row(si).begin());
  }
  require_finite(out.values(), "encode");
  return out;
}

LatentEmbedding encode(const KiaeModel& model, const Dataset& ds) {
  return {ds.sample_ids, encode(model, ds.samples)};
}

Matrix decode(const KiaeModel& model, const Matrix& latent, std::size_t steps) {
  if (latent.cols() != model.config().repr_dim) {
    throw ShapeError("decode: latent width " + std::to_string(latent.cols()) +
                     " does not match repr_dim " + std::to_string(model.config().repr_dim));
  }
  if (steps == 0) throw DomainError("decode: steps must be >= 1");
  const Network net(model);
  const std::size_t width = steps * model.config().step_dim();
  Matrix out(latent.rows(), width);
  const auto count = static_cast<std::ptrdiff_t>(latent.rows());
#pragma omp parallel for schedule(static) if (kernels::parallel_active())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto si = static_cast<std::size_t>(i);
    DecoderCache c;
    net.decode_latent(latent.row(si).data(), steps, c);
    std::copy(c.y.begin(), c.y.end(), out.row(si).begin());
  }
  return out;
}

Matrix decode(const KiaeModel& model, const Matrix& latent) {
  return decode(model, latent, model.config().steps_per_window());
}

std::vector<double> aggregate_windows(const WindowPlan& plan,
                                      const std::vector<std::vector<double>>& window_values,
                                      std::span<const FeatureKind> kinds) {
  if (window_values.size() != plan.windows.size())
    throw ShapeError("aggregate_windows: one value vector per window required");
  std::vector<double> out(plan.sample_length, 0.0);
  std::vector<double> votes;
  for (std::size_t pos = 0; pos < plan.sample_length; ++pos) {
    const std::size_t idx = pos + plan.left_pad;
    const bool categorical = pos < kinds.size() && kinds[pos] == FeatureKind::categorical;
    double sum = 0.0;
    std::size_t count = 0;
    votes.clear();
    for (std::size_t wi = 0; wi < plan.windows.size(); ++wi) {
      const auto& win = plan.windows[wi];
      if (idx < win.start || idx >= win.end) continue;
      double v = window_values[wi].at(idx - win.start);
      if (categorical)
        votes.push_back(std::round(v));
      else
        sum += v;
      ++count;
    }
    if (count == 0) {
      throw Error("internal: position " + std::to_string(pos) + " is not covered by any window");
    }
    if (!categorical) {
      out[pos] = sum / static_cast<double>(count);
      continue;
    }
    // votes are in window order, so the first maximal value is the earliest.
    std::size_t best_count = 0;
    double best = votes.front();
    for (double candidate : votes) {
      auto c = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), candidate));
      if (c > best_count) {
        best_count = c;
        best = candidate;
      }
    }
    out[pos] = best;
  }
  return out;
}

std::vector<double> reconstruct_full(const KiaeModel& model, std::span<const double> sample,
                                     const WindowPlan& plan, std::span<const FeatureKind> kinds) {
  const auto& cfg = model.config();
  if (sample.size() != cfg.input_dim || plan.sample_length != sample.size() ||
      plan.window_length != cfg.window_length()) {
    throw ShapeError("reconstruct_full: plan or sample does not match the model");
  }
  const Network net(model);
  std::vector<double> pad(plan.left_pad, 0.0);
  pad.insert(pad.end(), sample.begin(), sample.end());
  std::vector<std::vector<double>> outputs;
  for (const auto& win : plan.windows) {
    if (win.end - win.start != plan.window_length || win.end > pad.size())
      throw ShapeError("reconstruct_full: malformed window");
    EncoderCache enc;
    DecoderCache dec;
    net.encode_window(pad.data() + win.start, enc);
    net.decode_latent(enc.z.data(), cfg.steps_per_window(), dec);
    outputs.push_back(dec.y);
  }
  return aggregate_windows(plan, outputs, kinds);
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(const KiaeConfig& config, const Dataset& ds, const KnowledgeMatrix& mt,
                  const EpochCallback& on_epoch) {
  config.validate();
  return train_from(KiaeModel::initialize(config), ds, mt, on_epoch);
}

TrainResult train_from(KiaeModel model, const Dataset& ds, const KnowledgeMatrix& mt,
                       const EpochCallback& on_epoch) {
  const KiaeConfig cfg = model.config();
  cfg.validate();
  if (ds.dim() != cfg.input_dim) {
    throw ShapeError("train: dataset has " + std::to_string(ds.dim()) +
                     " features, model expects " + std::to_string(cfg.input_dim));
  }
  if (mt.size() != ds.size()) {
    throw ShapeError("train: knowledge matrix is " + std::to_string(mt.size()) +
                     " wide for " + std::to_string(ds.size()) + " samples");
  }
  TrainResult result{std::move(model), {}};
  if (cfg.epochs == 0) return result;
  const std::size_t n = ds.size();
  if (n < 2) throw DomainError("train: need at least 2 samples");

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  auto params = result.model.parameters();
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0);
  double beta1_pow = 1.0, beta2_pow = 1.0;

  Rng shuffle_rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::size_t end = std::min(n, start + cfg.batch_size);
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
      batches[batches.size() - 2].push_back(batches.back().front());
      batches.pop_back();
    }

    double epoch_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      Matrix rows = rows_at(ds.samples, idx);
      KnowledgeMatrix sub = cfg.omega2 != 0.0 ? subset(mt, idx) : KnowledgeMatrix(idx.size());
      LossResult lr = loss(result.model, rows, sub, cfg.omega1, cfg.omega2, true);
      if (!std::isfinite(lr.value) || !all_finite(lr.gradient)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                              ", batch " + std::to_string(bi + 1));
      }
      beta1_pow *= kBeta1;
      beta2_pow *= kBeta2;
      for (std::size_t k = 0; k < params.size(); ++k) {
        const double grad = lr.gradient[k];
        m1[k] = kBeta1 * m1[k] + (1.0 - kBeta1) * grad;
        m2[k] = kBeta2 * m2[k] + (1.0 - kBeta2) * grad * grad;
        const double mhat = m1[k] / (1.0 - beta1_pow);
        const double vhat = m2[k] / (1.0 - beta2_pow);
        params[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kEps);
      }
      if (!all_finite(params)) {
        throw DivergenceError("train: parameters became non-finite at epoch " +
                              std::to_string(epoch + 1) + ", batch " + std::to_string(bi + 1));
      }
      epoch_sum += lr.value;
    }
    const double mean = epoch_sum / static_cast<double>(batches.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return result;
}

}  // namespace kiae
