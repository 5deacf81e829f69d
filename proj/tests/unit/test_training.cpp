#include <doctest.h>

#include <bit>
#include <cmath>

#include "nameclass/training.hpp"
#include "oracle.hpp"
#include "testutil.hpp"

using namespace nameclass;

namespace {

bool bitwise_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool weights_bitwise_equal(const Model& a, const Model& b) {
  const auto ta = parameter_tensors(a);
  const auto tb = parameter_tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i]->data != tb[i]->data) return false;
  }
  return true;
}

EncodedDataset synthetic_dataset(Rng& rng, NameMode mode, std::size_t rows) {
  EncodedDataset data;
  data.mode = mode;
  data.rows = testutil::random_rows(rng, mode, rows);
  return data;
}

}  // namespace

TEST_CASE("cross entropy") {
  CHECK(cross_entropy({0.25, 0.25, 0.25, 0.25}, 2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(cross_entropy({1e-12, 1.0 - 3e-12, 1e-12, 1e-12}, 1) ==
        doctest::Approx(0.0).epsilon(1e-9));

  // logits form agrees with softmax-then-log
  Rng rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    Vec4 z;
    for (double& v : z) v = rng.uniform(-30, 30);
    const int label = static_cast<int>(rng.below(4));
    const Vec4 p = softmax4(z);
    CHECK(cross_entropy_logits(z, label) ==
          doctest::Approx(cross_entropy(p, label)).epsilon(1e-9));
  }
}

TEST_CASE("distill loss") {
  Rng rng(6);

  SUBCASE("alpha 1 reduces bitwise to cross entropy") {
    for (int iter = 0; iter < 200; ++iter) {
      Vec4 s, t;
      for (double& v : s) v = rng.uniform(-20, 20);
      for (double& v : t) v = rng.uniform(-20, 20);
      const int label = static_cast<int>(rng.below(4));
      CHECK(bitwise_equal(distill_loss(s, t, label, 2.0, 1.0),
                          cross_entropy_logits(s, label)));
    }
  }

  SUBCASE("identical logits and alpha 0 give exactly zero") {
    for (int iter = 0; iter < 50; ++iter) {
      Vec4 s;
      for (double& v : s) v = rng.uniform(-10, 10);
      CHECK(distill_loss(s, s, 1, 3.0, 0.0) == 0.0);
    }
  }

  SUBCASE("frozen KL value") {
    // teacher [ln 2, 0, 0, 0] -> [0.4, 0.2, 0.2, 0.2], student uniform:
    // KL = 0.4 ln 1.6 + 0.6 ln 0.8 = 0.054115320909768...
    const Vec4 teacher{std::log(2.0), 0.0, 0.0, 0.0};
    const Vec4 student{0.0, 0.0, 0.0, 0.0};
    const double expected = 0.4 * std::log(1.6) + 0.6 * std::log(0.8);
    CHECK(expected == doctest::Approx(0.0541153209).epsilon(1e-7));
    CHECK(distill_loss(student, teacher, 0, 1.0, 0.0) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(distill_loss(student, teacher, 0, 1.0, 0.0) ==
          doctest::Approx(0.0541153209097684).epsilon(1e-9));
  }

  SUBCASE("nonnegative; zero only when both terms vanish") {
    for (int iter = 0; iter < 200; ++iter) {
      Vec4 s, t;
      for (double& v : s) v = rng.uniform(-8, 8);
      for (double& v : t) v = rng.uniform(-8, 8);
      const double alpha = rng.uniform();
      const double temp = 0.5 + rng.uniform(0, 4);
      CHECK(distill_loss(s, t, static_cast<int>(rng.below(4)), temp, alpha) >= 0.0);
    }
  }

  SUBCASE("invalid hyperparameters") {
    CHECK_THROWS_AS(distill_loss({0, 0, 0, 0}, {0, 0, 0, 0}, 0, 0.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(distill_loss({0, 0, 0, 0}, {0, 0, 0, 0}, 0, 1.0, 1.5),
                    std::invalid_argument);
  }
}

TEST_CASE("backward") {
  Rng rng(7);

  SUBCASE("unused embedding rows have exactly zero gradient") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    EncodedRow row;
    row.label = 2;
    row.indices.assign(10, 1);
    row.indices[3] = 2;
    Gradients grads = Gradients::zeros_like(model);
    backward(model, std::vector<EncodedRow>{row}, grads);
    const Tensor2& table_grad = grads.tensors[0];
    for (int r = 0; r < table_grad.rows; ++r) {
      const bool used = (r == 1 || r == 2);
      double norm = 0.0;
      for (int c = 0; c < table_grad.cols; ++c) norm += std::abs(table_grad.at(r, c));
      if (used) {
        CHECK(norm > 0.0);
      } else {
        CHECK(norm == 0.0);
      }
    }
  }

  SUBCASE("mean over a duplicated batch equals the single-row gradient") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    const auto rows = testutil::random_rows(rng, NameMode::lastname, 1);
    std::vector<EncodedRow> doubled{rows[0], rows[0]};
    Gradients g1 = Gradients::zeros_like(model);
    Gradients g2 = Gradients::zeros_like(model);
    const double l1 = backward(model, rows, g1);
    const double l2 = backward(model, doubled, g2);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
    for (std::size_t i = 0; i < g1.tensors.size(); ++i) {
      for (std::size_t k = 0; k < g1.tensors[i].size(); ++k) {
        CHECK(g1.tensors[i].data[k] == doctest::Approx(g2.tensors[i].data[k]).epsilon(1e-12));
      }
    }
  }

  SUBCASE("empty batch is rejected") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    Gradients grads = Gradients::zeros_like(model);
    CHECK_THROWS_AS(backward(model, std::vector<EncodedRow>{}, grads), std::invalid_argument);
  }
}

TEST_CASE("gradient checking") {
  Rng rng(1);

  SUBCASE("analytic gradients agree with central differences") {
    for (int iter = 0; iter < 6; ++iter) {
      const NameMode mode = iter % 2 == 0 ? NameMode::lastname : NameMode::fullname;
      Model model = testutil::random_tiny_model(rng, mode);
      const auto rows = testutil::random_rows(rng, mode, 3);
      CHECK(grad_check(model, rows, 1e-5) <= 1e-4);
    }
  }

  SUBCASE("a 10% perturbation of one gradient entry fails the check") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    const auto rows = testutil::random_rows(rng, NameMode::lastname, 3);
    Gradients grads = Gradients::zeros_like(model);
    backward(model, rows, grads);

    // perturb the largest-magnitude gradient in a BiLSTM bias tensor
    // (tensor 3 = fwd bias of the first BiLSTM layer)
    Tensor2& bias_grad = grads.tensors[3];
    std::size_t worst = 0;
    for (std::size_t k = 1; k < bias_grad.size(); ++k) {
      if (std::abs(bias_grad.data[k]) > std::abs(bias_grad.data[worst])) worst = k;
    }
    REQUIRE(std::abs(bias_grad.data[worst]) > 1e-6);
    bias_grad.data[worst] *= 1.1;
    CHECK(grad_check_against(model, rows, 1e-5, grads) > 1e-4);
  }

  SUBCASE("distillation gradients agree with central differences") {
    Model student = testutil::random_tiny_model(rng, NameMode::lastname);
    const Model teacher = testutil::random_tiny_model(rng, NameMode::lastname);
    const auto rows = testutil::random_rows(rng, NameMode::lastname, 2);
    std::vector<Vec4> teacher_logits;
    for (const auto& row : rows) teacher_logits.push_back(model_logits(teacher, row.indices));
    const double temperature = 2.0;
    const double alpha = 0.3;

    Gradients grads = Gradients::zeros_like(student);
    backward_distill(student, rows, teacher_logits, temperature, alpha, grads);

    auto mean_loss = [&]() {
      double sum = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        sum += distill_loss(model_logits(student, rows[r].indices), teacher_logits[r],
                            rows[r].label, temperature, alpha);
      }
      return sum / static_cast<double>(rows.size());
    };

    const double eps = 1e-5;
    double max_rel = 0.0;
    const auto params = parameter_tensors(student);
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
      for (std::size_t k = 0; k < params[ti]->size(); k += 7) {  // sample every 7th entry
        double& w = params[ti]->data[k];
        const double original = w;
        w = original + eps;
        const double lp = mean_loss();
        w = original - eps;
        const double lm = mean_loss();
        w = original;
        const double numeric = (lp - lm) / (2 * eps);
        const double analytic = grads.tensors[ti].data[k];
        max_rel = std::max(max_rel, std::abs(analytic - numeric) /
                                        std::max({std::abs(analytic), std::abs(numeric), 1e-8}));
      }
    }
    CHECK(max_rel <= 1e-4);
  }

  SUBCASE("distillation gradient is linear in alpha") {
    Model student = testutil::random_tiny_model(rng, NameMode::lastname);
    const auto rows = testutil::random_rows(rng, NameMode::lastname, 2);
    std::vector<Vec4> teacher_logits(rows.size(), Vec4{0.4, -0.2, 1.0, 0.1});
    Gradients g0 = Gradients::zeros_like(student);
    Gradients g1 = Gradients::zeros_like(student);
    Gradients gm = Gradients::zeros_like(student);
    backward_distill(student, rows, teacher_logits, 2.0, 0.0, g0);
    backward_distill(student, rows, teacher_logits, 2.0, 1.0, g1);
    backward_distill(student, rows, teacher_logits, 2.0, 0.5, gm);
    for (std::size_t i = 0; i < gm.tensors.size(); ++i) {
      for (std::size_t k = 0; k < gm.tensors[i].size(); ++k) {
        const double blended = 0.5 * g0.tensors[i].data[k] + 0.5 * g1.tensors[i].data[k];
        CHECK(gm.tensors[i].data[k] == doctest::Approx(blended).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("train") {
  Rng rng(9);

  SUBCASE("learning rate zero leaves the weights unchanged") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    const Model before = model;
    EncodedDataset data = synthetic_dataset(rng, NameMode::lastname, 16);
    Hyperparams hp;
    hp.learning_rate = 0.0;
    hp.epochs = 2;
    hp.batch_size = 4;
    train(model, data, hp);
    CHECK(weights_bitwise_equal(model, before));
  }

  SUBCASE("fixed seed reproduces the loss history and final weights") {
    EncodedDataset data;
    {
      Rng data_rng(100);
      data = synthetic_dataset(data_rng, NameMode::lastname, 24);
    }
    Hyperparams hp;
    hp.epochs = 3;
    hp.batch_size = 8;
    hp.seed = 77;

    Model m1 = init_model(toy_student_spec(NameMode::lastname), hp.seed);
    Model m2 = init_model(toy_student_spec(NameMode::lastname), hp.seed);
    const TrainResult r1 = train(m1, data, hp);
    const TrainResult r2 = train(m2, data, hp);
    REQUIRE(r1.loss_history.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(bitwise_equal(r1.loss_history[i], r2.loss_history[i]));
    }
    CHECK(weights_bitwise_equal(m1, m2));
  }

  SUBCASE("a non-finite loss aborts with diagnostics") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    parameter_tensors(model)[0]->data[0] = std::nan("");
    EncodedDataset data = synthetic_dataset(rng, NameMode::lastname, 8);
    Hyperparams hp;
    hp.epochs = 1;
    try {
      train(model, data, hp);
      FAIL("expected divergence");
    } catch (const std::runtime_error& e) {
      const std::string what = e.what();
      CHECK(what.find("epoch") != std::string::npos);
      CHECK(what.find("batch") != std::string::npos);
      CHECK(what.find("learning rate") != std::string::npos);
    }
  }

  SUBCASE("mode mismatch is an error") {
    Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    EncodedDataset data = synthetic_dataset(rng, NameMode::fullname, 8);
    Hyperparams hp;
    CHECK_THROWS_AS(train(model, data, hp), DataError);
  }
}

TEST_CASE("distill reductions") {
  Rng rng(10);
  EncodedDataset data;
  {
    Rng data_rng(200);
    data = synthetic_dataset(data_rng, NameMode::lastname, 24);
  }
  const Model teacher = testutil::random_tiny_model(rng, NameMode::lastname);

  SUBCASE("alpha 1 distillation is identical to plain training") {
    Hyperparams hp;
    hp.epochs = 2;
    hp.batch_size = 6;
    hp.seed = 31;
    hp.alpha = 1.0;

    TrainResult distill_result;
    const ModelSpec spec = toy_student_spec(NameMode::lastname);
    const Model student = distill(teacher, spec, data, hp, &distill_result);

    Model plain = init_model(spec, hp.seed);
    const TrainResult train_result = train(plain, data, hp);

    REQUIRE(distill_result.loss_history.size() == train_result.loss_history.size());
    for (std::size_t i = 0; i < train_result.loss_history.size(); ++i) {
      CHECK(bitwise_equal(distill_result.loss_history[i], train_result.loss_history[i]));
    }
    CHECK(weights_bitwise_equal(student, plain));
  }

  SUBCASE("pure soft distillation pulls the student toward the teacher") {
    Hyperparams hp;
    hp.epochs = 12;
    hp.batch_size = 8;
    hp.seed = 5;
    hp.alpha = 0.0;
    hp.temperature = 1.0;

    const ModelSpec spec = teacher.spec;  // same architecture diagnostic run
    TrainResult result;
    const Model student = distill(teacher, spec, data, hp, &result);

    auto mean_kl = [&](const Model& s) {
      double sum = 0.0;
      for (const auto& row : data.rows) {
        sum += distill_loss(model_logits(s, row.indices), model_logits(teacher, row.indices),
                            row.label, 1.0, 0.0);
      }
      return sum / static_cast<double>(data.rows.size());
    };
    const Model fresh = init_model(spec, hp.seed);
    CHECK(mean_kl(student) < mean_kl(fresh));
    CHECK(result.loss_history.back() < result.loss_history.front());
  }

  SUBCASE("teacher/student mode mismatch is an error") {
    Hyperparams hp;
    CHECK_THROWS_AS(distill(teacher, toy_student_spec(NameMode::lastname),
                            synthetic_dataset(rng, NameMode::fullname, 8), hp),
                    DataError);
  }
}

TEST_CASE("evaluate") {
  Rng rng(11);

  SUBCASE("a perfect predictor scores 1.0 everywhere") {
    const Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    EncodedDataset data = synthetic_dataset(rng, NameMode::lastname, 40);
    for (auto& row : data.rows) {
      row.label = argmax4(model_logits(model, row.indices));
    }
    const EvalReport report = evaluate(model, data);
    CHECK(report.accuracy == 1.0);
    std::size_t support_sum = 0;
    for (const auto& cm : report.per_class) {
      if (cm.support > 0) {
        CHECK(cm.precision == 1.0);
        CHECK(cm.recall == 1.0);
        CHECK(cm.f1 == 1.0);
      }
      support_sum += cm.support;
    }
    CHECK(support_sum == data.rows.size());
  }

  SUBCASE("a constant predictor on a balanced set") {
    Model model = init_model(toy_student_spec(NameMode::lastname), 1);
    for (Tensor2* t : parameter_tensors(model)) {
      std::fill(t->data.begin(), t->data.end(), 0.0);
    }
    // equal logits -> argmax tie-break picks class 0 every time
    EncodedDataset data;
    data.mode = NameMode::lastname;
    for (int label = 0; label < 4; ++label) {
      for (int i = 0; i < 5; ++i) {
        EncodedRow row;
        row.label = label;
        row.indices = testutil::random_indices(rng, 10);
        data.rows.push_back(row);
      }
    }
    const EvalReport report = evaluate(model, data);
    CHECK(report.per_class[0].recall == 1.0);
    CHECK(report.per_class[0].precision == 0.25);
    CHECK(!report.per_class[0].precision_undefined);
    for (int c = 1; c < 4; ++c) {
      CHECK(report.per_class[c].recall == 0.0);
      CHECK(report.per_class[c].precision == 0.0);
      CHECK(report.per_class[c].precision_undefined);
    }
    CHECK(report.accuracy == 0.25);
  }

  SUBCASE("two-class confusion worked example") {
    // [[2, 0], [1, 1]] -> precision (2/3, 1), recall (1, 1/2)
    const auto metrics = metrics_from_confusion({{2, 0}, {1, 1}});
    CHECK(metrics[0].precision == doctest::Approx(2.0 / 3.0));
    CHECK(metrics[1].precision == doctest::Approx(1.0));
    CHECK(metrics[0].recall == doctest::Approx(1.0));
    CHECK(metrics[1].recall == doctest::Approx(0.5));
  }

  SUBCASE("empty test set is an error") {
    const Model model = testutil::random_tiny_model(rng, NameMode::lastname);
    EncodedDataset empty;
    empty.mode = NameMode::lastname;
    CHECK_THROWS_AS(evaluate(model, empty), DataError);
  }
}

TEST_CASE("eval report JSON carries the table shape") {
  Rng rng(12);
  const Model model = testutil::random_tiny_model(rng, NameMode::lastname);
  EncodedDataset data = synthetic_dataset(rng, NameMode::lastname, 20);
  const EvalReport report = evaluate(model, data);
  const std::string json = eval_report_json(report);
  for (const char* key : {"\"classes\"", "\"precision\"", "\"recall\"", "\"f1\"",
                          "\"support\"", "\"total\"", "\"accuracy\"", "\"asian\"", "\"black\"",
                          "\"hispanic\"", "\"white\""}) {
    CHECK(json.find(key) != std::string::npos);
  }
}
