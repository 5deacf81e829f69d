#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nameclass/encoding.hpp"
#include "nameclass/tensor.hpp"
#include "nameclass/types.hpp"

namespace nameclass {

enum class LayerKind { embedding, bilstm, dense };
enum class Activation { none, softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::embedding;
  // embedding: output vector width per character
  // bilstm:    hidden size per direction (output width is 2x this)
  // dense:     number of outputs
  int units = 0;
  bool return_sequences = false;            // bilstm only
  Activation activation = Activation::none;  // dense only
};

struct ModelSpec {
  NameMode mode = NameMode::lastname;
  std::vector<LayerSpec> layers;

  int input_length() const { return nameclass::input_length(mode); }
};

// Embedding 256, four BiLSTM layers of 512, dense 4 with softmax.
ModelSpec teacher_spec(NameMode mode);
// Character projection of width 32, two BiLSTM layers of 64, dense 4.
ModelSpec student_spec(NameMode mode);
// Desk-scale models for the synthetic corpus; same shape family, sized so the
// full pipeline trains in seconds to minutes on one core.
ModelSpec toy_teacher_spec(NameMode mode);
ModelSpec toy_student_spec(NameMode mode);

// Every violated constraint, empty when the spec is valid.
std::vector<std::string> validate_spec(const ModelSpec& spec);

// Gate blocks ordered [input, forget, candidate, output] along the 4H axis.
struct LstmParams {
  int input_size = 0;
  int hidden_size = 0;
  Tensor2 w_input;   // 4H x D
  Tensor2 w_hidden;  // 4H x H
  Tensor2 bias;      // 1 x 4H
};

struct EmbeddingLayer {
  Tensor2 table;  // kDictionarySize x dim
};

struct BiLstmLayer {
  LstmParams fwd;
  LstmParams bwd;
  bool return_sequences = false;
};

struct DenseLayer {
  Tensor2 weight;  // out x in
  Tensor2 bias;    // 1 x out
  Activation activation = Activation::none;
};

using Layer = std::variant<EmbeddingLayer, BiLstmLayer, DenseLayer>;

// Immutable after construction; shareable read-only across threads. Forward
// evaluation allocates only local scratch.
struct Model {
  ModelSpec spec;
  std::vector<Layer> layers;

  int input_length() const { return spec.input_length(); }
};

// Glorot-uniform weights drawn from a portable seeded stream; zero biases
// except the forget-gate block, which starts at 1.
Model init_model(const ModelSpec& spec, std::uint64_t seed);

std::size_t parameter_count(const Model& model);
std::size_t parameter_count(const ModelSpec& spec);  // without instantiating weights

// Canonical flat parameter order: layers in order; embedding -> [table];
// bilstm -> [fwd.w_input, fwd.w_hidden, fwd.bias, bwd.w_input, bwd.w_hidden,
// bwd.bias]; dense -> [weight, bias]. Serialization, Adam state, gradients
// and gradient checking all share this order.
std::vector<Tensor2*> parameter_tensors(Model& model);
std::vector<const Tensor2*> parameter_tensors(const Model& model);

using Sequence = std::vector<std::vector<double>>;

// output[t] is row indices[t] of the table
Sequence embedding_forward(const Tensor2& table, std::span<const int> indices);

// One step of the recurrence: z = W x + U h + b split into (i, f, g, o);
// c' = f.c + i.g, h' = o.tanh(c').
void lstm_cell_step(const LstmParams& params, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev,
                    std::span<double> h_out, std::span<double> c_out);

// Forward scan from t=0 and backward scan from t=T-1, both from zero state.
// return_sequences: T rows of concat(h_fwd[t], h_bwd[t]); otherwise one row
// concat(h_fwd[T-1], h_bwd[0]). Empty input is an error.
Sequence bilstm_forward(const BiLstmLayer& layer, const Sequence& input);

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x);

// Max-subtracted, order-preserving; output sums to 1.
Vec4 softmax4(const Vec4& logits);
std::vector<double> softmax(std::span<const double> logits);

// Composition of the layer forwards over an arbitrary non-empty index
// sequence (values in [0, 28]); the dense activation is not applied.
Vec4 model_logits(const Model& model, std::span<const int> indices);

// Checks that the encoded mode matches the model and applies the final
// activation; returns the four class probabilities.
Vec4 model_forward(const Model& model, const EncodedName& name);

}  // namespace nameclass
