#include "oracle.hpp"

#include <cmath>
#include <vector>

namespace oracle {

namespace {

using nameclass::BiLstmLayer;
using nameclass::DenseLayer;
using nameclass::EmbeddingLayer;
using nameclass::LstmParams;
using nameclass::Model;
using nameclass::Tensor2;
using nameclass::Vec4;

using Vec = std::vector<double>;
using Seq = std::vector<Vec>;

Vec matvec_plus(const Tensor2& m, const Vec& x, const Vec& add) {
  Vec y(static_cast<std::size_t>(m.rows), 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      acc += m.at(r, c) * x[static_cast<std::size_t>(c)];
    }
    y[static_cast<std::size_t>(r)] = acc + add[static_cast<std::size_t>(r)];
  }
  return y;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// One full scan of the sequence in the given order; returns hidden states by
// processing step.
Seq scan(const LstmParams& p, const Seq& inputs, const std::vector<std::size_t>& order) {
  const auto H = static_cast<std::size_t>(p.hidden_size);
  Vec h(H, 0.0), c(H, 0.0);
  Seq states;
  for (std::size_t pos : order) {
    Vec z = matvec_plus(p.w_input, inputs[pos], Vec(4 * H, 0.0));
    const Vec recurrent = matvec_plus(p.w_hidden, h, Vec(4 * H, 0.0));
    for (std::size_t k = 0; k < 4 * H; ++k) z[k] += recurrent[k] + p.bias.data[k];
    for (std::size_t j = 0; j < H; ++j) {
      const double gi = logistic(z[j]);
      const double gf = logistic(z[H + j]);
      const double gg = std::tanh(z[2 * H + j]);
      const double go = logistic(z[3 * H + j]);
      c[j] = gf * c[j] + gi * gg;
      h[j] = go * std::tanh(c[j]);
    }
    states.push_back(h);
  }
  return states;
}

}  // namespace

Vec4 model_logits(const Model& model, std::span<const int> indices) {
  const std::size_t T = indices.size();
  Seq seq;
  Vec flat;
  for (const nameclass::Layer& layer : model.layers) {
    if (const auto* emb = std::get_if<EmbeddingLayer>(&layer)) {
      seq.clear();
      for (std::size_t t = 0; t < T; ++t) {
        Vec row(static_cast<std::size_t>(emb->table.cols));
        for (int c = 0; c < emb->table.cols; ++c) {
          row[static_cast<std::size_t>(c)] = emb->table.at(indices[t], c);
        }
        seq.push_back(std::move(row));
      }
    } else if (const auto* bilstm = std::get_if<BiLstmLayer>(&layer)) {
      std::vector<std::size_t> fwd_order(T), bwd_order(T);
      for (std::size_t t = 0; t < T; ++t) {
        fwd_order[t] = t;
        bwd_order[t] = T - 1 - t;
      }
      const Seq fwd_states = scan(bilstm->fwd, seq, fwd_order);
      const Seq bwd_states = scan(bilstm->bwd, seq, bwd_order);
      Seq out;
      if (bilstm->return_sequences) {
        for (std::size_t t = 0; t < T; ++t) {
          Vec v = fwd_states[t];
          const Vec& b = bwd_states[T - 1 - t];  // state produced at position t
          v.insert(v.end(), b.begin(), b.end());
          out.push_back(std::move(v));
        }
      } else {
        Vec v = fwd_states[T - 1];
        const Vec& b = bwd_states[T - 1];
        v.insert(v.end(), b.begin(), b.end());
        out.push_back(std::move(v));
      }
      seq = std::move(out);
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      flat = matvec_plus(dense->weight, seq[0], dense->bias.data);
    }
  }
  return {flat[0], flat[1], flat[2], flat[3]};
}

Vec4 model_probs(const Model& model, std::span<const int> indices) {
  const Vec4 z = oracle::model_logits(model, indices);
  double max_z = z[0];
  for (double v : z) max_z = std::max(max_z, v);
  Vec4 p;
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    p[k] = std::exp(z[k] - max_z);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace oracle
