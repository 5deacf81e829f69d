#include "nameclass/model.hpp"

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "nameclass/rng.hpp"

namespace nameclass {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajorMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ModelSpec make_spec(NameMode mode, int embedding_dim, int bilstm_hidden, int bilstm_layers) {
  ModelSpec spec;
  spec.mode = mode;
  spec.layers.push_back({LayerKind::embedding, embedding_dim, false, Activation::none});
  for (int i = 0; i < bilstm_layers; ++i) {
    const bool last = (i == bilstm_layers - 1);
    spec.layers.push_back({LayerKind::bilstm, bilstm_hidden, !last, Activation::none});
  }
  spec.layers.push_back({LayerKind::dense, kNumClasses, false, Activation::softmax});
  return spec;
}

void glorot_fill(Tensor2& t, Rng& rng) {
  const double limit = std::sqrt(6.0 / (t.rows + t.cols));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
}

LstmParams init_lstm_params(int input_size, int hidden_size, Rng& rng) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = Tensor2(4 * hidden_size, input_size);
  p.w_hidden = Tensor2(4 * hidden_size, hidden_size);
  p.bias = Tensor2(1, 4 * hidden_size);
  glorot_fill(p.w_input, rng);
  glorot_fill(p.w_hidden, rng);
  // forget-gate bias starts at 1, everything else at 0
  for (int j = 0; j < hidden_size; ++j) p.bias.at(0, hidden_size + j) = 1.0;
  return p;
}

}  // namespace

ModelSpec teacher_spec(NameMode mode) { return make_spec(mode, 256, 512, 4); }
ModelSpec student_spec(NameMode mode) { return make_spec(mode, 32, 64, 2); }
ModelSpec toy_teacher_spec(NameMode mode) { return make_spec(mode, 16, 32, 2); }
ModelSpec toy_student_spec(NameMode mode) { return make_spec(mode, 8, 12, 1); }

std::vector<std::string> validate_spec(const ModelSpec& spec) {
  std::vector<std::string> violations;
  if (spec.layers.empty()) {
    violations.push_back("spec has no layers");
    return violations;
  }
  if (spec.layers.front().kind != LayerKind::embedding) {
    violations.push_back("first layer must be an embedding over the 29-symbol dictionary");
  }
  int bilstm_count = 0;
  int last_bilstm = -1;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (layer.units <= 0) {
      violations.push_back("layer " + std::to_string(i) + " has non-positive unit count");
    }
    switch (layer.kind) {
      case LayerKind::embedding:
        if (i != 0) violations.push_back("embedding allowed only as the first layer");
        break;
      case LayerKind::bilstm:
        ++bilstm_count;
        last_bilstm = static_cast<int>(i);
        break;
      case LayerKind::dense:
        if (i + 1 != spec.layers.size()) {
          violations.push_back("dense allowed only as the final layer");
        }
        break;
    }
  }
  if (bilstm_count == 0) {
    violations.push_back("spec must contain at least one BiLSTM layer");
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (layer.kind != LayerKind::bilstm) continue;
    const bool is_last = static_cast<int>(i) == last_bilstm;
    if (is_last && layer.return_sequences) {
      violations.push_back("final BiLSTM layer must not return sequences");
    }
    if (!is_last && !layer.return_sequences) {
      violations.push_back("non-final BiLSTM layer " + std::to_string(i) +
                           " must return sequences");
    }
  }
  const LayerSpec& last = spec.layers.back();
  if (last.kind != LayerKind::dense) {
    violations.push_back("final layer must be dense");
  } else {
    if (last.units != kNumClasses) violations.push_back("output classes must be 4");
    if (last.activation != Activation::softmax) {
      violations.push_back("final dense layer must use softmax activation");
    }
  }
  return violations;
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
  const std::vector<std::string> violations = validate_spec(spec);
  if (!violations.empty()) {
    throw std::invalid_argument("init_model: invalid spec: " + violations.front());
  }
  Model model;
  model.spec = spec;
  Rng rng(seed);
  int width = 0;  // vector width flowing into the next layer
  for (const LayerSpec& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::embedding: {
        EmbeddingLayer emb;
        emb.table = Tensor2(kDictionarySize, layer.units);
        glorot_fill(emb.table, rng);
        width = layer.units;
        model.layers.emplace_back(std::move(emb));
        break;
      }
      case LayerKind::bilstm: {
        BiLstmLayer bilstm;
        bilstm.return_sequences = layer.return_sequences;
        bilstm.fwd = init_lstm_params(width, layer.units, rng);
        bilstm.bwd = init_lstm_params(width, layer.units, rng);
        width = 2 * layer.units;
        model.layers.emplace_back(std::move(bilstm));
        break;
      }
      case LayerKind::dense: {
        DenseLayer dense;
        dense.activation = layer.activation;
        dense.weight = Tensor2(layer.units, width);
        dense.bias = Tensor2(1, layer.units);
        glorot_fill(dense.weight, rng);
        width = layer.units;
        model.layers.emplace_back(std::move(dense));
        break;
      }
    }
  }
  return model;
}

std::vector<Tensor2*> parameter_tensors(Model& model) {
  std::vector<Tensor2*> tensors;
  for (Layer& layer : model.layers) {
    if (auto* emb = std::get_if<EmbeddingLayer>(&layer)) {
      tensors.push_back(&emb->table);
    } else if (auto* bilstm = std::get_if<BiLstmLayer>(&layer)) {
      for (LstmParams* p : {&bilstm->fwd, &bilstm->bwd}) {
        tensors.push_back(&p->w_input);
        tensors.push_back(&p->w_hidden);
        tensors.push_back(&p->bias);
      }
    } else if (auto* dense = std::get_if<DenseLayer>(&layer)) {
      tensors.push_back(&dense->weight);
      tensors.push_back(&dense->bias);
    }
  }
  return tensors;
}

std::vector<const Tensor2*> parameter_tensors(const Model& model) {
  std::vector<const Tensor2*> tensors;
  for (Tensor2* t : parameter_tensors(const_cast<Model&>(model))) tensors.push_back(t);
  return tensors;
}

std::size_t parameter_count(const Model& model) {
  std::size_t count = 0;
  for (const Tensor2* t : parameter_tensors(model)) count += t->size();
  return count;
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t count = 0;
  std::size_t width = 0;
  for (const LayerSpec& layer : spec.layers) {
    const auto units = static_cast<std::size_t>(layer.units);
    switch (layer.kind) {
      case LayerKind::embedding:
        count += static_cast<std::size_t>(kDictionarySize) * units;
        width = units;
        break;
      case LayerKind::bilstm:
        count += 2 * (4 * units * width + 4 * units * units + 4 * units);
        width = 2 * units;
        break;
      case LayerKind::dense:
        count += units * width + units;
        width = units;
        break;
    }
  }
  return count;
}

Sequence embedding_forward(const Tensor2& table, std::span<const int> indices) {
  Sequence out(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    const int idx = indices[t];
    assert(idx >= 0 && idx < table.rows);
    out[t].assign(table.row(idx), table.row(idx) + table.cols);
  }
  return out;
}

void lstm_cell_step(const LstmParams& params, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev,
                    std::span<double> h_out, std::span<double> c_out) {
  const int H = params.hidden_size;
  const int D = params.input_size;
  if (static_cast<int>(x.size()) != D || static_cast<int>(h_prev.size()) != H ||
      static_cast<int>(c_prev.size()) != H || static_cast<int>(h_out.size()) != H ||
      static_cast<int>(c_out.size()) != H) {
    throw std::invalid_argument("lstm_cell_step: dimension mismatch");
  }
  Eigen::VectorXd z = ConstMatMap(params.w_input.data.data(), 4 * H, D) * ConstVecMap(x.data(), D);
  z.noalias() += ConstMatMap(params.w_hidden.data.data(), 4 * H, H) * ConstVecMap(h_prev.data(), H);
  z += ConstVecMap(params.bias.data.data(), 4 * H);
  for (int j = 0; j < H; ++j) {
    const double gate_i = sigmoid(z[j]);
    const double gate_f = sigmoid(z[H + j]);
    const double gate_g = std::tanh(z[2 * H + j]);
    const double gate_o = sigmoid(z[3 * H + j]);
    const double c_new = gate_f * c_prev[j] + gate_i * gate_g;
    c_out[j] = c_new;
    h_out[j] = gate_o * std::tanh(c_new);
  }
}

Sequence bilstm_forward(const BiLstmLayer& layer, const Sequence& input) {
  if (input.empty()) throw std::invalid_argument("bilstm_forward: empty sequence");
  const std::size_t T = input.size();
  const int H = layer.fwd.hidden_size;

  Sequence h_fwd(T), h_bwd(T);  // indexed by sequence position
  std::vector<double> h(H), c(H), h_next(H), c_next(H);

  std::fill(h.begin(), h.end(), 0.0);
  std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    lstm_cell_step(layer.fwd, input[t], h, c, h_next, c_next);
    h = h_next;
    c = c_next;
    h_fwd[t] = h;
  }

  std::fill(h.begin(), h.end(), 0.0);
  std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t pos = T - 1 - s;
    lstm_cell_step(layer.bwd, input[pos], h, c, h_next, c_next);
    h = h_next;
    c = c_next;
    h_bwd[pos] = h;
  }

  Sequence out;
  if (layer.return_sequences) {
    out.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      out[t] = h_fwd[t];
      out[t].insert(out[t].end(), h_bwd[t].begin(), h_bwd[t].end());
    }
  } else {
    out.resize(1);
    out[0] = h_fwd[T - 1];
    out[0].insert(out[0].end(), h_bwd[0].begin(), h_bwd[0].end());
  }
  return out;
}

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x) {
  if (static_cast<int>(x.size()) != layer.weight.cols) {
    throw std::invalid_argument("dense_forward: dimension mismatch");
  }
  const int out_dim = layer.weight.rows;
  std::vector<double> y(out_dim);
  Eigen::Map<Eigen::VectorXd>(y.data(), out_dim) =
      ConstMatMap(layer.weight.data.data(), out_dim, layer.weight.cols) *
          ConstVecMap(x.data(), x.size()) +
      ConstVecMap(layer.bias.data.data(), out_dim);
  if (layer.activation == Activation::softmax) {
    return softmax(y);
  }
  return y;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> probs(logits.size());
  double max_logit = logits[0];
  for (double z : logits) max_logit = std::max(max_logit, z);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

Vec4 softmax4(const Vec4& logits) {
  const std::vector<double> p = softmax(std::span<const double>(logits.data(), 4));
  return {p[0], p[1], p[2], p[3]};
}

Vec4 model_logits(const Model& model, std::span<const int> indices) {
  if (indices.empty()) throw std::invalid_argument("model_logits: empty input");
  Sequence seq;
  std::vector<double> final_vec;
  for (const Layer& layer : model.layers) {
    if (const auto* emb = std::get_if<EmbeddingLayer>(&layer)) {
      seq = embedding_forward(emb->table, indices);
    } else if (const auto* bilstm = std::get_if<BiLstmLayer>(&layer)) {
      seq = bilstm_forward(*bilstm, seq);
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      if (seq.size() != 1) {
        throw std::invalid_argument("model_logits: dense layer expects a single vector");
      }
      const int out_dim = dense->weight.rows;
      final_vec.resize(out_dim);
      Eigen::Map<Eigen::VectorXd>(final_vec.data(), out_dim) =
          ConstMatMap(dense->weight.data.data(), out_dim, dense->weight.cols) *
              ConstVecMap(seq[0].data(), seq[0].size()) +
          ConstVecMap(dense->bias.data.data(), out_dim);
    }
  }
  if (final_vec.size() != static_cast<std::size_t>(kNumClasses)) {
    throw std::invalid_argument("model_logits: model does not end in a 4-way dense layer");
  }
  return {final_vec[0], final_vec[1], final_vec[2], final_vec[3]};
}

Vec4 model_forward(const Model& model, const EncodedName& name) {
  if (name.mode != model.spec.mode) {
    throw DataError("model_forward: encoded name mode does not match the model");
  }
  if (static_cast<int>(name.indices.size()) != model.input_length()) {
    throw DataError("model_forward: encoded length does not match the model input length");
  }
  const Vec4 logits = model_logits(model, name.indices);
  return softmax4(logits);
}

}  // namespace nameclass
