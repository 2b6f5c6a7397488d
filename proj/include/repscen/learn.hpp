#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "repscen/common.hpp"

namespace repscen::learn {

class TrainingError : public Error {
 public:
  using Error::Error;
};

enum class Split : char { kTrain, kVal, kTest };
const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const;
};

/// Shuffles [0, count) with `seed` and assigns the first round(train*count)
/// positions to train, the next round(val*count) to val, the rest to test.
std::vector<Split> assign_splits(std::size_t count, const SplitFractions& fractions, std::uint64_t seed);

struct Dataset {
  std::vector<std::string> ids;
  Eigen::MatrixXd X;  // one example per row
  Eigen::MatrixXd Y;
  std::vector<Split> split;

  std::vector<int> rows(Split s) const;
  void validate() const;
};

/// Zero-mean unit-variance scaling; columns with zero spread keep scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

enum class ModelKind { kLinear, kNeural };
const char* to_string(ModelKind k);

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  bool relu = false;
};

struct Model {
  ModelKind kind = ModelKind::kLinear;
  int input_dim = 0;
  int output_dim = 0;
  Standardizer norm;
  std::vector<Layer> layers;
  nlohmann::json meta = nlohmann::json::object();

  void validate() const;
};

struct EpochLog {
  int epoch;
  double train_mse;
  double val_mse;
};
using TrainLog = std::vector<EpochLog>;

struct LrOptions {
  double ridge = 0.0;

  void validate() const;
};

struct AnnOptions {
  std::vector<int> hidden = {64, 32};
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 32;
  int max_epochs = 500;
  int patience = 20;
  double decay_factor = 0.5;
  int decay_every = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ridge regression on standardized features with an unpenalized bias,
/// solved through the normal equations. A singular system gets the ridge
/// 1e-8; meta["ridge_forced"] records it.
Model train_lr(const Dataset& ds, const LrOptions& options = {}, TrainLog* log = nullptr);

/// Mini-batch gradient descent with momentum on the MSE, step decay of the
/// learning rate and early stopping on validation MSE (train MSE when the
/// validation split is empty). The parameters of the best epoch are kept.
Model train_ann(const Dataset& ds, const AnnOptions& options, TrainLog* log = nullptr);

/// Network with freshly initialized parameters (He normal, biases 0).
Model init_network(int input_dim, int output_dim, const std::vector<int>& hidden, std::uint64_t seed);

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
};

/// Mean squared error over all entries of a batch of standardized inputs,
/// with its gradient when `grad` is non-null.
double loss_and_gradients(const Model& model, const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Y,
                          Gradients* grad);

/// Raw network output for raw (unstandardized) inputs, one row per example.
Eigen::MatrixXd predict_raw(const Model& model, const Eigen::MatrixXd& X);

struct Prediction {
  std::vector<double> values;
  int clamped = 0;  // entries raised to 0
};

Prediction predict(const Model& model, std::span<const double> features);

double mse(const Model& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

}  // namespace repscen::learn
