#include "nameclass/inference.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "nameclass/encoding.hpp"
#include "nameclass/toy.hpp"

namespace nameclass {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajorMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Names are processed in fixed chunks on a grid that does not depend on the
// thread count, so per-name arithmetic is identical however the chunks are
// distributed over workers.
constexpr std::size_t kChunkSize = 64;

bool missing_value(std::string_view text) { return trim(text).empty(); }

// Forward pass for one chunk of names, vectorized across the chunk: every
// matrix-vector product becomes a matrix-matrix product with one column per
// name.
void run_chunk(const Model& model, const std::vector<int>& encoded, std::size_t input_len,
               std::size_t row_begin, std::size_t row_end, std::vector<Vec4>& probs_out) {
  const auto batch = static_cast<Eigen::Index>(row_end - row_begin);
  const auto T = static_cast<Eigen::Index>(input_len);

  std::vector<Eigen::MatrixXd> seq(input_len);  // one D x batch matrix per position
  Eigen::MatrixXd final_vec;                    // 2H x batch after the last BiLSTM

  for (const Layer& layer : model.layers) {
    if (const auto* emb = std::get_if<EmbeddingLayer>(&layer)) {
      const int dim = emb->table.cols;
      for (Eigen::Index t = 0; t < T; ++t) {
        Eigen::MatrixXd& x = seq[static_cast<std::size_t>(t)];
        x.resize(dim, batch);
        for (Eigen::Index j = 0; j < batch; ++j) {
          const int idx = encoded[(row_begin + static_cast<std::size_t>(j)) * input_len +
                                  static_cast<std::size_t>(t)];
          x.col(j) = ConstVecMap(emb->table.row(idx), dim);
        }
      }
    } else if (const auto* bilstm = std::get_if<BiLstmLayer>(&layer)) {
      const int H = bilstm->fwd.hidden_size;
      const int D = bilstm->fwd.input_size;
      std::vector<Eigen::MatrixXd> out;
      if (bilstm->return_sequences) {
        out.assign(input_len, Eigen::MatrixXd(2 * H, batch));
      } else {
        final_vec.resize(2 * H, batch);
      }
      Eigen::MatrixXd h(H, batch), c(H, batch), z(4 * H, batch);
      Eigen::ArrayXXd gate_i, gate_f, gate_g, gate_o;
      for (int dir = 0; dir < 2; ++dir) {
        const bool reverse = dir == 1;
        const LstmParams& p = reverse ? bilstm->bwd : bilstm->fwd;
        ConstMatMap w_in(p.w_input.data.data(), 4 * H, D);
        ConstMatMap w_hid(p.w_hidden.data.data(), 4 * H, H);
        ConstVecMap bias(p.bias.data.data(), 4 * H);
        h.setZero();
        c.setZero();
        for (Eigen::Index s = 0; s < T; ++s) {
          const Eigen::Index pos = reverse ? T - 1 - s : s;
          z.noalias() = w_in * seq[static_cast<std::size_t>(pos)];
          z.noalias() += w_hid * h;
          z.colwise() += bias;
          gate_i = (1.0 + (-z.middleRows(0, H).array()).exp()).inverse();
          gate_f = (1.0 + (-z.middleRows(H, H).array()).exp()).inverse();
          gate_g = z.middleRows(2 * H, H).array().tanh();
          gate_o = (1.0 + (-z.middleRows(3 * H, H).array()).exp()).inverse();
          c = (gate_f * c.array() + gate_i * gate_g).matrix();
          h = (gate_o * c.array().tanh()).matrix();
          if (bilstm->return_sequences) {
            out[static_cast<std::size_t>(pos)].middleRows(dir * H, H) = h;
          } else if (s == T - 1) {
            final_vec.middleRows(dir * H, H) = h;
          }
        }
      }
      if (bilstm->return_sequences) seq = std::move(out);
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      const int out_dim = dense->weight.rows;
      Eigen::MatrixXd logits =
          ConstMatMap(dense->weight.data.data(), out_dim, dense->weight.cols) * final_vec;
      logits.colwise() += ConstVecMap(dense->bias.data.data(), out_dim);
      const Eigen::RowVectorXd col_max = logits.colwise().maxCoeff();
      logits.rowwise() -= col_max;
      Eigen::ArrayXXd exp_l = logits.array().exp();
      const Eigen::Array<double, 1, Eigen::Dynamic> col_sum = exp_l.colwise().sum();
      exp_l.rowwise() /= col_sum;
      for (Eigen::Index j = 0; j < batch; ++j) {
        Vec4& p = probs_out[row_begin + static_cast<std::size_t>(j)];
        for (int k = 0; k < 4; ++k) p[k] = exp_l(k, j);
      }
    }
  }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> partition_work(std::size_t n, int threads) {
  if (threads < 1) throw std::invalid_argument("partition_work: threads must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  if (n == 0) return ranges;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  const std::size_t base = n / count;
  const std::size_t rem = n % count;
  std::size_t start = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = base + (i < rem ? 1 : 0);
    ranges.emplace_back(start, start + len);
    start += len;
  }
  return ranges;
}

std::vector<Prediction> predict_batch(const BatchRequest& request, const Model& model) {
  if (request.threads < 1) {
    throw std::invalid_argument("predict_batch: threads must be >= 1");
  }
  if (request.method != model.spec.mode) {
    throw DataError("predict_batch: method does not match the model mode");
  }
  const bool fullname = request.method == NameMode::fullname;
  if (fullname) {
    if (!request.firstnames.has_value()) {
      throw DataError("predict_batch: fullname method requires firstnames");
    }
    if (request.firstnames->size() != request.lastnames.size()) {
      throw DataError("predict_batch: firstnames and lastnames differ in length");
    }
  }

  const std::size_t n = request.lastnames.size();
  std::vector<std::size_t> retained;
  retained.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool missing = fullname ? (missing_value((*request.firstnames)[i]) ||
                                     missing_value(request.lastnames[i]))
                                  : missing_value(request.lastnames[i]);
    if (missing) {
      if (!request.na_rm) {
        throw DataError("predict_batch: missing name at input row " + std::to_string(i) +
                        " (use na_rm to drop such rows)");
      }
      continue;
    }
    retained.push_back(i);
  }

  const auto input_len = static_cast<std::size_t>(model.input_length());
  std::vector<int> encoded(retained.size() * input_len);
  for (std::size_t r = 0; r < retained.size(); ++r) {
    const std::size_t i = retained[r];
    const EncodedName e = fullname
                              ? encode_fullname((*request.firstnames)[i], request.lastnames[i])
                              : encode_lastname(request.lastnames[i]);
    std::copy(e.indices.begin(), e.indices.end(), encoded.begin() + r * input_len);
  }

  std::vector<Vec4> probs(retained.size());
  const std::size_t chunks = (retained.size() + kChunkSize - 1) / kChunkSize;
  const auto ranges = partition_work(chunks, request.threads);
  auto run_chunk_range = [&](std::size_t chunk_begin, std::size_t chunk_end) {
    for (std::size_t ci = chunk_begin; ci < chunk_end; ++ci) {
      const std::size_t row_begin = ci * kChunkSize;
      const std::size_t row_end = std::min(retained.size(), row_begin + kChunkSize);
      run_chunk(model, encoded, input_len, row_begin, row_end, probs);
    }
  };
  if (ranges.size() <= 1) {
    if (!ranges.empty()) run_chunk_range(ranges[0].first, ranges[0].second);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(ranges.size());
    workers.reserve(ranges.size());
    for (std::size_t w = 0; w < ranges.size(); ++w) {
      workers.emplace_back([&, w] {
        try {
          run_chunk_range(ranges[w].first, ranges[w].second);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& worker : workers) worker.join();
    for (const std::exception_ptr& error : errors) {
      if (error) std::rethrow_exception(error);
    }
  }

  std::vector<Prediction> predictions;
  predictions.reserve(retained.size());
  for (std::size_t r = 0; r < retained.size(); ++r) {
    const std::size_t i = retained[r];
    Prediction p;
    if (fullname) p.firstname = (*request.firstnames)[i];
    p.lastname = request.lastnames[i];
    p.probs = probs[r];
    p.race = static_cast<Race>(argmax4(probs[r]));
    predictions.push_back(std::move(p));
  }
  return predictions;
}

std::vector<BenchRow> throughput_bench(const Model& model, std::size_t n,
                                       const std::vector<int>& thread_counts, int repeats,
                                       std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("throughput_bench: n must be >= 1");
  if (repeats < 1) throw std::invalid_argument("throughput_bench: repeats must be >= 1");

  BatchRequest request;
  request.method = model.spec.mode;
  request.lastnames = toy::random_lastnames(seed, n);
  if (model.spec.mode == NameMode::fullname) {
    request.firstnames = toy::random_firstnames(seed + 1, n);
  }

  std::vector<BenchRow> rows;
  rows.reserve(thread_counts.size());
  for (int threads : thread_counts) {
    request.threads = threads;
    double total = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      const auto result = predict_batch(request, model);
      const auto stop = std::chrono::steady_clock::now();
      total += std::chrono::duration<double>(stop - start).count();
      if (result.size() != n) {
        throw std::runtime_error("throughput_bench: unexpected result size");
      }
    }
    rows.push_back({threads, n, total / repeats});
  }
  return rows;
}

}  // namespace nameclass
