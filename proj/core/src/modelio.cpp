#include "nameclass/modelio.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace nameclass {

namespace {

using Json = nlohmann::ordered_json;

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::embedding: return "embedding";
    case LayerKind::bilstm: return "bilstm";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

Json weights_to_json(const Tensor2& t) {
  Json arr = Json::array();
  for (double v : t.data) {
    arr.push_back(static_cast<double>(static_cast<float>(v)));
  }
  return arr;
}

void require(bool ok, ModelIoErrc code, const std::string& message) {
  if (!ok) throw ModelIoError(code, message);
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  require(it != obj.end(), ModelIoErrc::schema_error, where + ": missing field '" + key + "'");
  return *it;
}

// Reads a flat weight array into a tensor of the declared shape, widening
// each value through float.
Tensor2 tensor_from_json(const Json& arr, int rows, int cols, const std::string& where) {
  require(arr.is_array(), ModelIoErrc::schema_error, where + ": weights must be an array");
  const std::size_t expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  require(arr.size() == expected, ModelIoErrc::dim_mismatch,
          where + ": has " + std::to_string(arr.size()) + " values, expected " +
              std::to_string(expected) + " (" + std::to_string(rows) + "x" +
              std::to_string(cols) + ")");
  Tensor2 t(rows, cols);
  std::size_t i = 0;
  for (const Json& v : arr) {
    require(v.is_number(), ModelIoErrc::schema_error, where + ": non-numeric weight");
    const double raw = v.get<double>();
    require(std::isfinite(raw) &&
                std::abs(raw) <= static_cast<double>(std::numeric_limits<float>::max()),
            ModelIoErrc::non_finite_weight,
            where + ": weight at flat index " + std::to_string(i) +
                " is not a finite 32-bit value");
    t.data[i++] = static_cast<double>(static_cast<float>(raw));
  }
  return t;
}

Json lstm_params_to_json(const LstmParams& p) {
  Json j = Json::object();
  j["w_input"] = weights_to_json(p.w_input);
  j["w_hidden"] = weights_to_json(p.w_hidden);
  j["bias"] = weights_to_json(p.bias);
  return j;
}

LstmParams lstm_params_from_json(const Json& j, int input_size, int hidden_size,
                                 const std::string& where) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = tensor_from_json(field(j, "w_input", where), 4 * hidden_size, input_size,
                               where + ".w_input");
  p.w_hidden = tensor_from_json(field(j, "w_hidden", where), 4 * hidden_size, hidden_size,
                                where + ".w_hidden");
  p.bias = tensor_from_json(field(j, "bias", where), 1, 4 * hidden_size, where + ".bias");
  return p;
}

int int_field(const Json& obj, const char* key, const std::string& where) {
  const Json& v = field(obj, key, where);
  require(v.is_number_integer(), ModelIoErrc::schema_error,
          where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

std::string_view to_string(ModelIoErrc code) {
  switch (code) {
    case ModelIoErrc::unsupported_version: return "unsupported model format version";
    case ModelIoErrc::dictionary_mismatch: return "dictionary mismatch";
    case ModelIoErrc::dim_mismatch: return "dimension mismatch";
    case ModelIoErrc::non_finite_weight: return "non-finite weight";
    case ModelIoErrc::parse_error: return "unparseable model file";
    case ModelIoErrc::schema_error: return "invalid model file";
    case ModelIoErrc::io_error: return "model file I/O error";
  }
  return "?";
}

std::string serialize_model(const Model& model) {
  const std::vector<std::string> violations = validate_spec(model.spec);
  require(violations.empty(), ModelIoErrc::schema_error,
          "refusing to save invalid spec: " + (violations.empty() ? "" : violations.front()));
  require(model.layers.size() == model.spec.layers.size(), ModelIoErrc::schema_error,
          "layer weights do not match the spec layer list");
  for (const Tensor2* t : parameter_tensors(model)) {
    require(t->all_finite(), ModelIoErrc::non_finite_weight, "refusing to save non-finite weights");
  }

  Json root = Json::object();
  root["format_version"] = kModelFormatVersion;
  root["mode"] = std::string(to_string(model.spec.mode));
  root["input_length"] = model.input_length();
  Json dict = Json::array();
  for (char c : char_dictionary().symbols) dict.push_back(std::string(1, c));
  root["dictionary"] = dict;
  Json classes = Json::array();
  for (std::string_view name : kClassNames) classes.push_back(std::string(name));
  root["class_names"] = classes;

  Json layers = Json::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    Json j = Json::object();
    j["kind"] = std::string(kind_name(model.spec.layers[i].kind));
    if (const auto* emb = std::get_if<EmbeddingLayer>(&layer)) {
      j["vocab"] = emb->table.rows;
      j["dim"] = emb->table.cols;
      j["table"] = weights_to_json(emb->table);
    } else if (const auto* bilstm = std::get_if<BiLstmLayer>(&layer)) {
      j["input_size"] = bilstm->fwd.input_size;
      j["hidden_size"] = bilstm->fwd.hidden_size;
      j["return_sequences"] = bilstm->return_sequences;
      j["fwd"] = lstm_params_to_json(bilstm->fwd);
      j["bwd"] = lstm_params_to_json(bilstm->bwd);
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      j["input_size"] = dense->weight.cols;
      j["output_size"] = dense->weight.rows;
      j["activation"] = dense->activation == Activation::softmax ? "softmax" : "none";
      j["weight"] = weights_to_json(dense->weight);
      j["bias"] = weights_to_json(dense->bias);
    }
    layers.push_back(std::move(j));
  }
  root["layers"] = std::move(layers);
  return root.dump();
}

Model parse_model(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelIoError(ModelIoErrc::parse_error, e.what());
  }
  require(root.is_object(), ModelIoErrc::schema_error, "top level must be an object");

  const int version = int_field(root, "format_version", "model");
  require(version == kModelFormatVersion, ModelIoErrc::unsupported_version,
          "got version " + std::to_string(version) + ", supported version is " +
              std::to_string(kModelFormatVersion));

  const Json& mode_json = field(root, "mode", "model");
  require(mode_json.is_string(), ModelIoErrc::schema_error, "mode must be a string");
  const auto mode = parse_mode(mode_json.get<std::string>());
  require(mode.has_value(), ModelIoErrc::schema_error,
          "mode must be 'lastname' or 'fullname'");

  const int declared_length = int_field(root, "input_length", "model");
  require(declared_length == input_length(*mode), ModelIoErrc::schema_error,
          "input_length " + std::to_string(declared_length) + " does not match mode " +
              std::string(to_string(*mode)));

  const Json& dict = field(root, "dictionary", "model");
  {
    bool match = dict.is_array() && dict.size() == kDictionarySize;
    if (match) {
      for (int i = 0; i < kDictionarySize; ++i) {
        if (!dict[i].is_string() ||
            dict[i].get<std::string>() != std::string(1, char_dictionary().symbols[i])) {
          match = false;
          break;
        }
      }
    }
    require(match, ModelIoErrc::dictionary_mismatch,
            "dictionary does not match the canonical 29-symbol ordering");
  }

  const Json& classes = field(root, "class_names", "model");
  {
    bool match = classes.is_array() && classes.size() == kNumClasses;
    if (match) {
      for (int i = 0; i < kNumClasses; ++i) {
        if (!classes[i].is_string() || classes[i].get<std::string>() != kClassNames[i]) {
          match = false;
          break;
        }
      }
    }
    require(match, ModelIoErrc::schema_error,
            "class_names must be [asian, black, hispanic, white]");
  }

  const Json& layers_json = field(root, "layers", "model");
  require(layers_json.is_array() && !layers_json.empty(), ModelIoErrc::schema_error,
          "layers must be a non-empty array");

  Model model;
  model.spec.mode = *mode;
  int width = 0;
  for (std::size_t i = 0; i < layers_json.size(); ++i) {
    const Json& j = layers_json[i];
    const std::string where = "layer " + std::to_string(i);
    require(j.is_object(), ModelIoErrc::schema_error, where + ": must be an object");
    const Json& kind = field(j, "kind", where);
    require(kind.is_string(), ModelIoErrc::schema_error, where + ": kind must be a string");
    const std::string kind_str = kind.get<std::string>();

    if (kind_str == "embedding") {
      const int vocab = int_field(j, "vocab", where);
      const int dim = int_field(j, "dim", where);
      require(vocab == kDictionarySize, ModelIoErrc::schema_error,
              where + ": embedding vocab must be " + std::to_string(kDictionarySize));
      EmbeddingLayer emb;
      emb.table = tensor_from_json(field(j, "table", where), vocab, dim, where + ".table");
      model.spec.layers.push_back({LayerKind::embedding, dim, false, Activation::none});
      model.layers.emplace_back(std::move(emb));
      width = dim;
    } else if (kind_str == "bilstm") {
      const int input_size = int_field(j, "input_size", where);
      const int hidden_size = int_field(j, "hidden_size", where);
      require(input_size == width, ModelIoErrc::dim_mismatch,
              where + ": input_size " + std::to_string(input_size) +
                  " does not match incoming width " + std::to_string(width));
      const Json& rs = field(j, "return_sequences", where);
      require(rs.is_boolean(), ModelIoErrc::schema_error,
              where + ": return_sequences must be a boolean");
      BiLstmLayer bilstm;
      bilstm.return_sequences = rs.get<bool>();
      bilstm.fwd = lstm_params_from_json(field(j, "fwd", where), input_size, hidden_size,
                                         where + ".fwd");
      bilstm.bwd = lstm_params_from_json(field(j, "bwd", where), input_size, hidden_size,
                                         where + ".bwd");
      model.spec.layers.push_back(
          {LayerKind::bilstm, hidden_size, bilstm.return_sequences, Activation::none});
      model.layers.emplace_back(std::move(bilstm));
      width = 2 * hidden_size;
    } else if (kind_str == "dense") {
      const int input_size = int_field(j, "input_size", where);
      const int output_size = int_field(j, "output_size", where);
      require(input_size == width, ModelIoErrc::dim_mismatch,
              where + ": input_size " + std::to_string(input_size) +
                  " does not match incoming width " + std::to_string(width));
      const Json& act = field(j, "activation", where);
      require(act.is_string() && (act.get<std::string>() == "softmax" ||
                                  act.get<std::string>() == "none"),
              ModelIoErrc::schema_error, where + ": activation must be 'softmax' or 'none'");
      DenseLayer dense;
      dense.activation =
          act.get<std::string>() == "softmax" ? Activation::softmax : Activation::none;
      dense.weight = tensor_from_json(field(j, "weight", where), output_size, input_size,
                                      where + ".weight");
      dense.bias = tensor_from_json(field(j, "bias", where), 1, output_size, where + ".bias");
      model.spec.layers.push_back({LayerKind::dense, output_size, false, dense.activation});
      model.layers.emplace_back(std::move(dense));
      width = output_size;
    } else {
      throw ModelIoError(ModelIoErrc::schema_error, where + ": unknown kind '" + kind_str + "'");
    }
  }

  const std::vector<std::string> violations = validate_spec(model.spec);
  if (!violations.empty()) {
    std::string joined;
    for (const std::string& v : violations) {
      if (!joined.empty()) joined += "; ";
      joined += v;
    }
    throw ModelIoError(ModelIoErrc::schema_error, joined);
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string text = serialize_model(model);  // validates before any I/O
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ModelIoError(ModelIoErrc::io_error, "cannot open for writing: " + path.string());
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.put('\n');
  if (!out) {
    throw ModelIoError(ModelIoErrc::io_error, "write failed: " + path.string());
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelIoError(ModelIoErrc::io_error, "cannot open for reading: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw ModelIoError(ModelIoErrc::io_error, "read failed: " + path.string());
  }
  return parse_model(buffer.str());
}

}  // namespace nameclass
