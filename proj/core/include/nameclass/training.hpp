#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nameclass/dataprep.hpp"
#include "nameclass/model.hpp"

namespace nameclass {

struct Hyperparams {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 0;
  double temperature = 2.0;  // distillation softening
  double alpha = 0.5;        // hard-label share of the distillation loss
};

// One tensor per weight tensor, in parameter_tensors order.
struct Gradients {
  std::vector<Tensor2> tensors;

  static Gradients zeros_like(const Model& model);
  void zero();
};

// -ln p[label]. The training path always computes this from logits via
// log-sum-exp (cross_entropy_logits) for stability.
double cross_entropy(const Vec4& probs, int label);
double cross_entropy_logits(const Vec4& logits, int label);

// alpha * CE(softmax(student), label)
//   + (1 - alpha) * T^2 * KL(softmax(teacher/T) || softmax(student/T)).
// alpha == 1 reduces bitwise to cross_entropy_logits(student, label).
double distill_loss(const Vec4& student_logits, const Vec4& teacher_logits, int label,
                    double temperature, double alpha);

// Analytic gradients of the mean batch loss; returns the loss. Gradients are
// zeroed first.
double backward(const Model& model, std::span<const EncodedRow> rows, Gradients& grads);
double backward_distill(const Model& student, std::span<const EncodedRow> rows,
                        std::span<const Vec4> teacher_logits, double temperature, double alpha,
                        Gradients& grads);

// Central-difference comparison against the analytic gradient of the mean
// cross-entropy batch loss. Relative error is |a-n| / max(|a|, |n|, 1e-8);
// returns the max over all parameters. Intended for tiny models.
double grad_check(Model& model, std::span<const EncodedRow> rows, double epsilon);
// Same comparison against caller-supplied analytic gradients, so a deliberate
// perturbation can be shown to fail the check.
double grad_check_against(Model& model, std::span<const EncodedRow> rows, double epsilon,
                          const Gradients& analytic);

struct TrainResult {
  std::vector<double> loss_history;  // mean loss per epoch
};

// Mini-batch Adam, single-threaded, bitwise deterministic given the seed.
// A non-finite loss aborts with epoch/batch/learning-rate diagnostics.
TrainResult train(Model& model, const EncodedDataset& data, const Hyperparams& hp);

// Initializes a student from student_spec (forced to the teacher's mode),
// trains it on distill_loss against the frozen teacher's logits, and returns
// it. The student must have strictly fewer parameters than the teacher.
// With alpha == 1 the teacher is never evaluated and the run is identical to
// train() from the same seed.
Model distill(const Model& teacher, const ModelSpec& student_spec, const EncodedDataset& data,
              const Hyperparams& hp, TrainResult* result = nullptr);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool precision_undefined = false;  // no predictions for the class; reported as 0
};

struct EvalReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t total = 0;
};

// Argmax confusion-matrix metrics; the test set must be non-empty.
EvalReport evaluate(const Model& model, const EncodedDataset& test);

// Metrics from an explicit K x K confusion matrix (rows = true class,
// columns = predicted); exposed for direct testing.
std::vector<ClassMetrics> metrics_from_confusion(const std::vector<std::vector<std::size_t>>& m);

std::string eval_report_json(const EvalReport& report);

}  // namespace nameclass
