#include "nameclass/training.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nameclass/rng.hpp"

namespace nameclass {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajorMatrix>;
using MatMap = Eigen::Map<RowMajorMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec4 log_softmax4(const Vec4& z) {
  double max_z = z[0];
  for (double v : z) max_z = std::max(max_z, v);
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - max_z);
  const double log_sum = std::log(sum);
  Vec4 out;
  for (int k = 0; k < 4; ++k) out[k] = z[k] - max_z - log_sum;
  return out;
}

// ---------------------------------------------------------------------------
// cached forward pass and backpropagation
// ---------------------------------------------------------------------------

struct StepCache {
  Eigen::VectorXd i, f, g, o, c, tanh_c, h;
};

struct DirCache {
  std::vector<StepCache> steps;  // indexed by processing step
};

struct BiLstmCache {
  Sequence input;  // layer input by sequence position
  DirCache fwd, bwd;
};

struct ForwardCache {
  std::vector<BiLstmCache> bilstm;
  std::vector<double> dense_in;
  Vec4 logits{};
};

void run_direction(const LstmParams& p, const Sequence& input, bool reverse, DirCache& dir) {
  const std::size_t T = input.size();
  const int H = p.hidden_size;
  const int D = p.input_size;
  dir.steps.assign(T, {});
  ConstMatMap w_in(p.w_input.data.data(), 4 * H, D);
  ConstMatMap w_hid(p.w_hidden.data.data(), 4 * H, H);
  ConstVecMap bias(p.bias.data.data(), 4 * H);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd z(4 * H);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t pos = reverse ? T - 1 - s : s;
    z.noalias() = w_in * ConstVecMap(input[pos].data(), D);
    z.noalias() += w_hid * h;
    z += bias;
    StepCache& st = dir.steps[s];
    st.i.resize(H);
    st.f.resize(H);
    st.g.resize(H);
    st.o.resize(H);
    st.c.resize(H);
    st.tanh_c.resize(H);
    st.h.resize(H);
    for (int j = 0; j < H; ++j) {
      const double gi = sigmoid(z[j]);
      const double gf = sigmoid(z[H + j]);
      const double gg = std::tanh(z[2 * H + j]);
      const double go = sigmoid(z[3 * H + j]);
      const double cn = gf * c[j] + gi * gg;
      st.i[j] = gi;
      st.f[j] = gf;
      st.g[j] = gg;
      st.o[j] = go;
      st.c[j] = cn;
      st.tanh_c[j] = std::tanh(cn);
      st.h[j] = go * st.tanh_c[j];
    }
    c = st.c;
    h = st.h;
  }
}

Vec4 forward_cached(const Model& model, std::span<const int> indices, ForwardCache& cache) {
  cache.bilstm.clear();
  Sequence seq;
  for (const Layer& layer : model.layers) {
    if (const auto* emb = std::get_if<EmbeddingLayer>(&layer)) {
      seq = embedding_forward(emb->table, indices);
    } else if (const auto* bilstm = std::get_if<BiLstmLayer>(&layer)) {
      BiLstmCache lc;
      lc.input = std::move(seq);
      run_direction(bilstm->fwd, lc.input, false, lc.fwd);
      run_direction(bilstm->bwd, lc.input, true, lc.bwd);
      const std::size_t T = lc.input.size();
      const int H = bilstm->fwd.hidden_size;
      Sequence out;
      if (bilstm->return_sequences) {
        out.resize(T, std::vector<double>(2 * H));
        for (std::size_t t = 0; t < T; ++t) {
          // bwd processed position t at step T-1-t
          for (int j = 0; j < H; ++j) {
            out[t][j] = lc.fwd.steps[t].h[j];
            out[t][H + j] = lc.bwd.steps[T - 1 - t].h[j];
          }
        }
      } else {
        out.resize(1, std::vector<double>(2 * H));
        for (int j = 0; j < H; ++j) {
          out[0][j] = lc.fwd.steps[T - 1].h[j];
          out[0][H + j] = lc.bwd.steps[T - 1].h[j];  // final state of the reverse scan
        }
      }
      cache.bilstm.push_back(std::move(lc));
      seq = std::move(out);
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      assert(seq.size() == 1);
      cache.dense_in = seq[0];
      const int out_dim = dense->weight.rows;
      Eigen::VectorXd y = ConstMatMap(dense->weight.data.data(), out_dim, dense->weight.cols) *
                              ConstVecMap(cache.dense_in.data(), cache.dense_in.size()) +
                          ConstVecMap(dense->bias.data.data(), out_dim);
      for (int k = 0; k < 4; ++k) cache.logits[k] = y[k];
    }
  }
  return cache.logits;
}

// dh injected per sequence position (upper-layer gradient on h at that
// position); accumulates parameter gradients and the layer-input gradient.
void backprop_direction(const LstmParams& p, const Sequence& input, bool reverse,
                        const DirCache& dir, const std::vector<Eigen::VectorXd>& inject_by_pos,
                        Tensor2& g_w_input, Tensor2& g_w_hidden, Tensor2& g_bias,
                        std::vector<Eigen::VectorXd>& d_input) {
  const std::size_t T = input.size();
  const int H = p.hidden_size;
  const int D = p.input_size;
  ConstMatMap w_in(p.w_input.data.data(), 4 * H, D);
  ConstMatMap w_hid(p.w_hidden.data.data(), 4 * H, H);
  MatMap gw_in(g_w_input.data.data(), 4 * H, D);
  MatMap gw_hid(g_w_hidden.data.data(), 4 * H, H);
  VecMap g_b(g_bias.data.data(), 4 * H);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dh(H), dz(4 * H);
  for (std::size_t s = T; s-- > 0;) {
    const std::size_t pos = reverse ? T - 1 - s : s;
    const StepCache& st = dir.steps[s];
    dh = dh_carry;
    if (inject_by_pos[pos].size() != 0) dh += inject_by_pos[pos];
    const Eigen::VectorXd& c_prev = s > 0 ? dir.steps[s - 1].c : zero;
    const Eigen::VectorXd& h_prev = s > 0 ? dir.steps[s - 1].h : zero;
    for (int j = 0; j < H; ++j) {
      const double gi = st.i[j];
      const double gf = st.f[j];
      const double gg = st.g[j];
      const double go = st.o[j];
      const double tc = st.tanh_c[j];
      const double d_o = dh[j] * tc;
      const double dc = dh[j] * go * (1.0 - tc * tc) + dc_carry[j];
      const double d_i = dc * gg;
      const double d_g = dc * gi;
      const double d_f = dc * c_prev[j];
      dc_carry[j] = dc * gf;
      dz[j] = d_i * gi * (1.0 - gi);
      dz[H + j] = d_f * gf * (1.0 - gf);
      dz[2 * H + j] = d_g * (1.0 - gg * gg);
      dz[3 * H + j] = d_o * go * (1.0 - go);
    }
    gw_in.noalias() += dz * ConstVecMap(input[pos].data(), D).transpose();
    gw_hid.noalias() += dz * h_prev.transpose();
    g_b += dz;
    d_input[pos].noalias() += w_in.transpose() * dz;
    dh_carry.noalias() = w_hid.transpose() * dz;
  }
}

// Tensor index in Gradients where each layer's parameters start.
std::vector<std::size_t> layer_tensor_bases(const Model& model) {
  std::vector<std::size_t> bases;
  std::size_t next = 0;
  for (const Layer& layer : model.layers) {
    bases.push_back(next);
    if (std::holds_alternative<EmbeddingLayer>(layer)) next += 1;
    else if (std::holds_alternative<BiLstmLayer>(layer)) next += 6;
    else next += 2;
  }
  return bases;
}

void backward_one(const Model& model, std::span<const int> indices, const ForwardCache& cache,
                  const Vec4& dlogits, Gradients& grads) {
  const std::vector<std::size_t> bases = layer_tensor_bases(model);

  // dense layer
  const std::size_t dense_idx = model.layers.size() - 1;
  const auto& dense = std::get<DenseLayer>(model.layers[dense_idx]);
  const int out_dim = dense.weight.rows;
  const int in_dim = dense.weight.cols;
  Eigen::VectorXd dl(out_dim);
  for (int k = 0; k < out_dim; ++k) dl[k] = dlogits[k];
  {
    MatMap gw(grads.tensors[bases[dense_idx]].data.data(), out_dim, in_dim);
    VecMap gb(grads.tensors[bases[dense_idx] + 1].data.data(), out_dim);
    gw.noalias() += dl * ConstVecMap(cache.dense_in.data(), in_dim).transpose();
    gb += dl;
  }
  Eigen::VectorXd d_vec =
      ConstMatMap(dense.weight.data.data(), out_dim, in_dim).transpose() * dl;

  // BiLSTM stack in reverse; d_seq is the gradient on the current layer's output
  std::vector<Eigen::VectorXd> d_seq;  // per position; empty vector = no gradient
  bool d_seq_is_final = true;          // gradient currently lives in d_vec
  int bilstm_cache_idx = static_cast<int>(cache.bilstm.size()) - 1;
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto* bilstm = std::get_if<BiLstmLayer>(&model.layers[li]);
    if (!bilstm) continue;
    const BiLstmCache& lc = cache.bilstm[static_cast<std::size_t>(bilstm_cache_idx)];
    const std::size_t T = lc.input.size();
    const int H = bilstm->fwd.hidden_size;
    const int D = bilstm->fwd.input_size;

    std::vector<Eigen::VectorXd> inject_fwd(T), inject_bwd(T);
    if (d_seq_is_final) {
      // output was concat(h_fwd at last position, h_bwd at position 0)
      inject_fwd[T - 1] = d_vec.head(H);
      inject_bwd[0] = d_vec.tail(H);
    } else {
      for (std::size_t t = 0; t < T; ++t) {
        if (d_seq[t].size() == 0) continue;
        inject_fwd[t] = d_seq[t].head(H);
        inject_bwd[t] = d_seq[t].tail(H);
      }
    }

    std::vector<Eigen::VectorXd> d_input(T, Eigen::VectorXd::Zero(D));
    const std::size_t base = bases[li];
    backprop_direction(bilstm->fwd, lc.input, false, lc.fwd, inject_fwd,
                       grads.tensors[base + 0], grads.tensors[base + 1], grads.tensors[base + 2],
                       d_input);
    backprop_direction(bilstm->bwd, lc.input, true, lc.bwd, inject_bwd,
                       grads.tensors[base + 3], grads.tensors[base + 4], grads.tensors[base + 5],
                       d_input);
    d_seq = std::move(d_input);
    d_seq_is_final = false;
    --bilstm_cache_idx;
  }

  // embedding scatter
  const auto& emb = std::get<EmbeddingLayer>(model.layers[0]);
  Tensor2& g_table = grads.tensors[bases[0]];
  const int dim = emb.table.cols;
  for (std::size_t t = 0; t < indices.size(); ++t) {
    VecMap(g_table.row(indices[t]), dim) += d_seq[t];
  }
}

double mean_ce_loss(const Model& model, std::span<const EncodedRow> rows) {
  double sum = 0.0;
  for (const EncodedRow& row : rows) {
    sum += cross_entropy_logits(model_logits(model, row.indices), row.label);
  }
  return sum / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  Gradients m;
  Gradients v;
  long step = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  explicit AdamState(const Model& model)
      : m(Gradients::zeros_like(model)), v(Gradients::zeros_like(model)) {}

  void update(Model& model, const Gradients& grads, double lr) {
    ++step;
    const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    const std::vector<Tensor2*> params = parameter_tensors(model);
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
      double* w = params[ti]->data.data();
      const double* g = grads.tensors[ti].data.data();
      double* m_arr = m.tensors[ti].data.data();
      double* v_arr = v.tensors[ti].data.data();
      const std::size_t n = params[ti]->size();
      for (std::size_t k = 0; k < n; ++k) {
        m_arr[k] = kBeta1 * m_arr[k] + (1.0 - kBeta1) * g[k];
        v_arr[k] = kBeta2 * v_arr[k] + (1.0 - kBeta2) * g[k] * g[k];
        const double m_hat = m_arr[k] / correction1;
        const double v_hat = v_arr[k] / correction2;
        w[k] -= lr * m_hat / (std::sqrt(v_hat) + kEpsilon);
      }
    }
  }
};

void validate_hyperparams(const Hyperparams& hp) {
  if (hp.learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (hp.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (hp.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (hp.temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (!(hp.alpha >= 0.0 && hp.alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
}

TrainResult optimize(Model& model, const EncodedDataset& data, const Hyperparams& hp,
                     const Model* teacher) {
  validate_hyperparams(hp);
  if (data.rows.empty()) throw DataError("train: empty dataset");
  if (data.mode != model.spec.mode) {
    throw DataError("train: dataset mode does not match the model mode");
  }
  if (teacher && teacher->spec.mode != model.spec.mode) {
    throw DataError("distill: teacher mode does not match the student mode");
  }

  const std::size_t n = data.rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hp.seed);

  Gradients grads = Gradients::zeros_like(model);
  AdamState adam(model);
  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(hp.epochs));

  const bool use_teacher = teacher != nullptr && hp.alpha != 1.0;
  std::vector<EncodedRow> batch;
  std::vector<Vec4> teacher_logits;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(hp.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data.rows[order[i]]);

      double loss = 0.0;
      if (teacher) {
        teacher_logits.clear();
        if (use_teacher) {
          teacher_logits.reserve(batch.size());
          for (const EncodedRow& row : batch) {
            teacher_logits.push_back(model_logits(*teacher, row.indices));
          }
        } else {
          teacher_logits.assign(batch.size(), Vec4{});
        }
        loss = backward_distill(model, batch, teacher_logits, hp.temperature, hp.alpha, grads);
      } else {
        loss = backward(model, batch, grads);
      }

      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << (epoch + 1) << ", batch "
            << (batch_index + 1) << ", learning rate " << hp.learning_rate;
        throw std::runtime_error(msg.str());
      }
      adam.update(model, grads, hp.learning_rate);
      loss_sum += loss * static_cast<double>(batch.size());
      ++batch_index;
    }
    result.loss_history.push_back(loss_sum / static_cast<double>(n));
  }
  return result;
}

}  // namespace

Gradients Gradients::zeros_like(const Model& model) {
  Gradients grads;
  for (const Tensor2* t : parameter_tensors(model)) {
    grads.tensors.emplace_back(t->rows, t->cols);
  }
  return grads;
}

void Gradients::zero() {
  for (Tensor2& t : tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
}

double cross_entropy(const Vec4& probs, int label) {
  assert(label >= 0 && label < kNumClasses);
  return -std::log(probs[label]);
}

double cross_entropy_logits(const Vec4& logits, int label) {
  assert(label >= 0 && label < kNumClasses);
  double max_z = logits[0];
  for (double v : logits) max_z = std::max(max_z, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max_z);
  return max_z + std::log(sum) - logits[label];
}

double distill_loss(const Vec4& student_logits, const Vec4& teacher_logits, int label,
                    double temperature, double alpha) {
  if (temperature <= 0.0) throw std::invalid_argument("distill_loss: temperature must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("distill_loss: alpha in [0,1]");
  if (alpha == 1.0) return cross_entropy_logits(student_logits, label);

  Vec4 student_t, teacher_t;
  for (int k = 0; k < 4; ++k) {
    student_t[k] = student_logits[k] / temperature;
    teacher_t[k] = teacher_logits[k] / temperature;
  }
  const Vec4 log_q = log_softmax4(student_t);
  const Vec4 log_p = log_softmax4(teacher_t);
  double kl = 0.0;
  for (int k = 0; k < 4; ++k) {
    kl += std::exp(log_p[k]) * (log_p[k] - log_q[k]);
  }
  double loss = (1.0 - alpha) * temperature * temperature * kl;
  if (alpha != 0.0) loss += alpha * cross_entropy_logits(student_logits, label);
  return loss;
}

double backward(const Model& model, std::span<const EncodedRow> rows, Gradients& grads) {
  if (rows.empty()) throw std::invalid_argument("backward: empty batch");
  grads.zero();
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  double loss_sum = 0.0;
  ForwardCache cache;
  for (const EncodedRow& row : rows) {
    const Vec4 logits = forward_cached(model, row.indices, cache);
    loss_sum += cross_entropy_logits(logits, row.label);
    const Vec4 probs = softmax4(logits);
    Vec4 dlogits;
    for (int k = 0; k < 4; ++k) {
      dlogits[k] = (probs[k] - (k == row.label ? 1.0 : 0.0)) * inv_n;
    }
    backward_one(model, row.indices, cache, dlogits, grads);
  }
  return loss_sum * inv_n;
}

double backward_distill(const Model& student, std::span<const EncodedRow> rows,
                        std::span<const Vec4> teacher_logits, double temperature, double alpha,
                        Gradients& grads) {
  if (rows.empty()) throw std::invalid_argument("backward_distill: empty batch");
  if (rows.size() != teacher_logits.size()) {
    throw std::invalid_argument("backward_distill: teacher logits size mismatch");
  }
  grads.zero();
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  double loss_sum = 0.0;
  ForwardCache cache;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const EncodedRow& row = rows[r];
    const Vec4 logits = forward_cached(student, row.indices, cache);
    loss_sum += distill_loss(logits, teacher_logits[r], row.label, temperature, alpha);

    Vec4 dlogits{};
    if (alpha != 0.0) {
      const Vec4 probs = softmax4(logits);
      for (int k = 0; k < 4; ++k) {
        dlogits[k] = alpha * (probs[k] - (k == row.label ? 1.0 : 0.0));
      }
    }
    if (alpha != 1.0) {
      Vec4 student_t, teacher_t;
      for (int k = 0; k < 4; ++k) {
        student_t[k] = logits[k] / temperature;
        teacher_t[k] = teacher_logits[r][k] / temperature;
      }
      const Vec4 q = softmax4(student_t);
      const Vec4 p = softmax4(teacher_t);
      for (int k = 0; k < 4; ++k) {
        dlogits[k] += (1.0 - alpha) * temperature * (q[k] - p[k]);
      }
    }
    for (int k = 0; k < 4; ++k) dlogits[k] *= inv_n;
    backward_one(student, row.indices, cache, dlogits, grads);
  }
  return loss_sum * inv_n;
}

double grad_check_against(Model& model, std::span<const EncodedRow> rows, double epsilon,
                          const Gradients& analytic) {
  if (rows.empty()) throw std::invalid_argument("grad_check: empty batch");
  if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be > 0");
  double max_rel = 0.0;
  const std::vector<Tensor2*> params = parameter_tensors(model);
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    for (std::size_t k = 0; k < params[ti]->size(); ++k) {
      double& w = params[ti]->data[k];
      const double original = w;
      w = original + epsilon;
      const double loss_plus = mean_ce_loss(model, rows);
      w = original - epsilon;
      const double loss_minus = mean_ce_loss(model, rows);
      w = original;
      const double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double a = analytic.tensors[ti].data[k];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

double grad_check(Model& model, std::span<const EncodedRow> rows, double epsilon) {
  Gradients grads = Gradients::zeros_like(model);
  backward(model, rows, grads);
  return grad_check_against(model, rows, epsilon, grads);
}

TrainResult train(Model& model, const EncodedDataset& data, const Hyperparams& hp) {
  return optimize(model, data, hp, nullptr);
}

Model distill(const Model& teacher, const ModelSpec& student_spec, const EncodedDataset& data,
              const Hyperparams& hp, TrainResult* result) {
  ModelSpec spec = student_spec;
  spec.mode = teacher.spec.mode;
  Model student = init_model(spec, hp.seed);
  TrainResult r = optimize(student, data, hp, &teacher);
  if (result) *result = std::move(r);
  return student;
}

std::vector<ClassMetrics> metrics_from_confusion(
    const std::vector<std::vector<std::size_t>>& m) {
  const std::size_t k = m.size();
  std::vector<ClassMetrics> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = m[c][c];
    std::size_t support = 0;
    std::size_t predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += m[c][j];
      predicted += m[j][c];
    }
    ClassMetrics& cm = out[c];
    cm.support = support;
    if (predicted == 0) {
      cm.precision = 0.0;
      cm.precision_undefined = true;
    } else {
      cm.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    }
    cm.recall = support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(support);
    cm.f1 = (cm.precision + cm.recall) > 0.0
                ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                : 0.0;
  }
  return out;
}

EvalReport evaluate(const Model& model, const EncodedDataset& test) {
  if (test.rows.empty()) throw DataError("evaluate: empty test set");
  if (test.mode != model.spec.mode) {
    throw DataError("evaluate: dataset mode does not match the model mode");
  }
  std::vector<std::vector<std::size_t>> confusion(
      kNumClasses, std::vector<std::size_t>(kNumClasses, 0));
  std::size_t correct = 0;
  for (const EncodedRow& row : test.rows) {
    const Vec4 logits = model_logits(model, row.indices);
    const int predicted = argmax4(logits);
    ++confusion[static_cast<std::size_t>(row.label)][static_cast<std::size_t>(predicted)];
    if (predicted == row.label) ++correct;
  }
  EvalReport report;
  const std::vector<ClassMetrics> metrics = metrics_from_confusion(confusion);
  for (int c = 0; c < kNumClasses; ++c) report.per_class[c] = metrics[c];
  report.total = test.rows.size();
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);
  for (int c = 0; c < kNumClasses; ++c) {
    report.macro_precision += report.per_class[c].precision;
    report.macro_recall += report.per_class[c].recall;
    report.macro_f1 += report.per_class[c].f1;
  }
  report.macro_precision /= kNumClasses;
  report.macro_recall /= kNumClasses;
  report.macro_f1 /= kNumClasses;
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json root;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& cm = report.per_class[c];
    nlohmann::ordered_json j;
    j["class"] = std::string(kClassNames[c]);
    j["precision"] = cm.precision;
    j["recall"] = cm.recall;
    j["f1"] = cm.f1;
    j["support"] = cm.support;
    if (cm.precision_undefined) j["precision_undefined"] = true;
    classes.push_back(std::move(j));
  }
  root["classes"] = std::move(classes);
  root["total"] = {{"precision", report.macro_precision},
                   {"recall", report.macro_recall},
                   {"f1", report.macro_f1},
                   {"support", report.total}};
  root["accuracy"] = report.accuracy;
  return root.dump(2) + "\n";
}

}  // namespace nameclass
