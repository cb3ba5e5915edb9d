#pragma once

// Binary logistic regression shared by the snippet filter and the answer
// ranker: class-balancing resampler, full-batch gradient descent on the
// L2-regularized mean log loss, min-max feature normalization, and the
// JSON model format
//
//   {"classifier":"logistic","feature_names":[...],"weights":[...],
//    "bias":...,"normalization":[[min,max],...],"seed":...,
//    "hyperparams":{"learning_rate":...,"epochs":...,"l2":...}}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "webqa/error.hpp"
#include "webqa/rng.hpp"

namespace webqa {

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
  std::string provenance;  // e.g. "Marvin_Minsky/wasBornIn -> New_York_City"
};

struct Hyperparams {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
};

struct FeatureRange {
  double min = 0.0;
  double max = 1.0;
};

struct LogisticModel {
  std::string classifier = "logistic";
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<FeatureRange> normalization;
  std::uint64_t seed = 0;
  Hyperparams hyperparams;

  std::size_t arity() const { return weights.size(); }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Degenerate ranges (min == max) map to 0.
inline double normalize_value(double x, const FeatureRange& r) {
  return r.max > r.min ? (x - r.min) / (r.max - r.min) : 0.0;
}

inline std::vector<double> normalize(const LogisticModel& model, std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = normalize_value(x[i], model.normalization[i]);
  return out;
}

inline double predict_proba(const LogisticModel& model, std::span<const double> features) {
  if (features.size() != model.arity()) {
    throw UsageError("feature arity " + std::to_string(features.size()) + " != model arity " +
                     std::to_string(model.arity()));
  }
  double z = model.bias;
  for (std::size_t i = 0; i < features.size(); ++i) {
    z += model.weights[i] * normalize_value(features[i], model.normalization[i]);
  }
  return sigmoid(z);
}

// Upsamples the minority class to the majority count. Each minority example
// is repeated floor(majority / minority) times and the remainder is drawn
// with replacement. Output: majority examples in input order, then the
// minority block shuffled.
inline std::vector<LabeledExample> resample_balanced(std::span<const LabeledExample> examples,
                                                     std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int y = examples[i].label;
    if (y != 0 && y != 1) throw DataError("label must be 0 or 1: " + examples[i].provenance);
    (y == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty()) throw DataError("resampling needs both classes; no positive (label 1) examples");
  if (neg.empty()) throw DataError("resampling needs both classes; no negative (label 0) examples");

  const bool pos_minority = pos.size() < neg.size();
  const auto& minority = pos_minority ? pos : neg;
  const auto& majority = pos_minority ? neg : pos;

  Rng rng(seed);
  std::vector<std::size_t> drawn;
  drawn.reserve(majority.size());
  const std::size_t copies = majority.size() / minority.size();
  for (std::size_t c = 0; c < copies; ++c) drawn.insert(drawn.end(), minority.begin(), minority.end());
  while (drawn.size() < majority.size()) drawn.push_back(minority[rng.below(minority.size())]);
  if (copies > 1 || drawn.size() != minority.size()) rng.shuffle(std::span<std::size_t>(drawn));

  std::vector<LabeledExample> out;
  out.reserve(2 * majority.size());
  for (std::size_t i : majority) out.push_back(examples[i]);
  for (std::size_t i : drawn) out.push_back(examples[i]);
  return out;
}

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

// Mean log loss plus (l2 / 2)|w|^2 and its gradient, for already-normalized
// rows. The bias is not regularized.
inline LossGradient log_loss_gradient(std::span<const double> weights, double bias,
                                      std::span<const std::vector<double>> rows,
                                      std::span<const int> labels, double l2) {
  LossGradient out;
  out.grad_weights.assign(weights.size(), 0.0);
  const double n = static_cast<double>(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * rows[r][i];
    // log(1 + e^z) - y z, computed without overflow.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    out.loss += softplus - labels[r] * z;
    const double residual = sigmoid(z) - labels[r];
    for (std::size_t i = 0; i < weights.size(); ++i) out.grad_weights[i] += residual * rows[r][i];
    out.grad_bias += residual;
  }
  out.loss /= n;
  out.grad_bias /= n;
  double penalty = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.grad_weights[i] = out.grad_weights[i] / n + l2 * weights[i];
    penalty += weights[i] * weights[i];
  }
  out.loss += 0.5 * l2 * penalty;
  return out;
}

struct TrainResult {
  LogisticModel model;
  std::vector<double> loss_history;  // loss before each epoch, then final loss
};

// Full-batch gradient descent from zero weights. Features are min-max
// normalized with ranges fitted on `examples`; a constant feature gets
// weight 0. Callers balance the classes first.
inline TrainResult train_logistic(std::span<const LabeledExample> examples,
                                  std::vector<std::string> feature_names, const Hyperparams& hp,
                                  std::uint64_t seed) {
  if (examples.size() < 2) throw DataError("training needs at least 2 examples");
  const std::size_t d = examples.front().features.size();
  if (feature_names.empty()) {
    for (std::size_t i = 0; i < d; ++i) feature_names.push_back("f" + std::to_string(i));
  }
  if (feature_names.size() != d) throw UsageError("feature_names does not match feature arity");
  if (hp.learning_rate <= 0 || hp.epochs < 0 || hp.l2 < 0) throw UsageError("invalid hyperparams");

  LogisticModel model;
  model.feature_names = std::move(feature_names);
  model.seed = seed;
  model.hyperparams = hp;
  model.normalization.assign(d, {0.0, 0.0});
  for (std::size_t r = 0; r < examples.size(); ++r) {
    const auto& ex = examples[r];
    if (ex.features.size() != d) throw DataError("inconsistent feature arity: " + ex.provenance);
    if (ex.label != 0 && ex.label != 1) throw DataError("label must be 0 or 1: " + ex.provenance);
    for (std::size_t i = 0; i < d; ++i) {
      const double x = ex.features[i];
      if (!std::isfinite(x)) {
        throw DataError("non-finite feature '" + model.feature_names[i] + "' in " + ex.provenance);
      }
      auto& range = model.normalization[i];
      if (r == 0) {
        range = {x, x};
      } else {
        range.min = std::min(range.min, x);
        range.max = std::max(range.max, x);
      }
    }
  }
  std::vector<bool> degenerate(d);
  for (std::size_t i = 0; i < d; ++i) degenerate[i] = !(model.normalization[i].max > model.normalization[i].min);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(examples.size());
  for (const auto& ex : examples) {
    rows.push_back(normalize(model, ex.features));
    labels.push_back(ex.label);
  }

  model.weights.assign(d, 0.0);
  TrainResult result;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const auto g = log_loss_gradient(model.weights, model.bias, rows, labels, hp.l2);
    result.loss_history.push_back(g.loss);
    for (std::size_t i = 0; i < d; ++i) {
      if (!degenerate[i]) model.weights[i] -= hp.learning_rate * g.grad_weights[i];
    }
    model.bias -= hp.learning_rate * g.grad_bias;
  }
  result.loss_history.push_back(
      log_loss_gradient(model.weights, model.bias, rows, labels, hp.l2).loss);
  result.model = std::move(model);
  return result;
}

// Balances the classes first, then trains on the balanced set.
inline TrainResult train_resampled(std::span<const LabeledExample> examples,
                                   std::vector<std::string> feature_names, const Hyperparams& hp,
                                   std::uint64_t seed) {
  const auto balanced = resample_balanced(examples, seed);
  return train_logistic(balanced, std::move(feature_names), hp, seed);
}

inline nlohmann::json model_to_json(const LogisticModel& m) {
  nlohmann::json norm = nlohmann::json::array();
  for (const auto& r : m.normalization) norm.push_back({r.min, r.max});
  return {{"classifier", m.classifier},
          {"feature_names", m.feature_names},
          {"weights", m.weights},
          {"bias", m.bias},
          {"normalization", norm},
          {"seed", m.seed},
          {"hyperparams",
           {{"learning_rate", m.hyperparams.learning_rate},
            {"epochs", m.hyperparams.epochs},
            {"l2", m.hyperparams.l2}}}};
}

inline LogisticModel model_from_json(const nlohmann::json& j) {
  try {
    LogisticModel m;
    m.classifier = j.at("classifier").get<std::string>();
    if (m.classifier != "logistic") throw DataError("unsupported classifier '" + m.classifier + "'");
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    for (const auto& r : j.at("normalization")) {
      m.normalization.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& hp = j.at("hyperparams");
    m.hyperparams = {hp.at("learning_rate").get<double>(), hp.at("epochs").get<int>(),
                     hp.at("l2").get<double>()};
    if (m.weights.size() != m.feature_names.size() ||
        m.weights.size() != m.normalization.size()) {
      throw DataError("model weights, feature_names and normalization differ in length");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

inline void save_model(const LogisticModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(m).dump(2) << '\n';
}

inline LogisticModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace webqa
