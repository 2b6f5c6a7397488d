#include "repscen/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace repscen::learn {

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ArtifactError("unknown split '" + s + "'");
}

const char* to_string(ModelKind k) { return k == ModelKind::kLinear ? "LR" : "ANN"; }

void SplitFractions::validate() const {
  if (!(train > 0.0) || !(val >= 0.0) || !(test >= 0.0)) throw ConfigError("split fractions must be nonnegative, train > 0");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

std::vector<Split> assign_splits(std::size_t count, const SplitFractions& fractions, std::uint64_t seed) {
  fractions.validate();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(count)));
  const auto n_val = std::min(count - std::min(count, n_train),
                              static_cast<std::size_t>(std::llround(fractions.val * static_cast<double>(count))));
  std::vector<Split> out(count, Split::kTest);
  for (std::size_t k = 0; k < count; ++k) {
    if (k < n_train) out[order[k]] = Split::kTrain;
    else if (k < n_train + n_val) out[order[k]] = Split::kVal;
  }
  return out;
}

std::vector<int> Dataset::rows(Split s) const {
  std::vector<int> r;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) r.push_back(static_cast<int>(i));
  return r;
}

void Dataset::validate() const {
  if (X.rows() != Y.rows()) throw ModelError("dataset features and labels disagree on the number of examples");
  if (static_cast<Eigen::Index>(split.size()) != X.rows()) throw ModelError("dataset split assignment has wrong length");
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != X.rows())
    throw ModelError("dataset ids have wrong length");
  if (!X.allFinite() || !Y.allFinite()) throw ModelError("dataset contains non-finite values");
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& M, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = M.row(rows[k]);
  return out;
}

// Forward pass; acts[0] is the input, acts[k+1] the output of layer k.
void forward(const Model& model, const Eigen::MatrixXd& Xs, std::vector<Eigen::MatrixXd>& acts) {
  acts.resize(model.layers.size() + 1);
  acts[0] = Xs;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const Layer& l = model.layers[k];
    acts[k + 1] = (acts[k] * l.W.transpose()).rowwise() + l.b.transpose();
    if (l.relu) acts[k + 1] = acts[k + 1].cwiseMax(0.0);
  }
}

Eigen::VectorXd to_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  if (X.rows() == 0) throw ModelError("cannot fit a standardizer on zero examples");
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw ModelError("standardizer dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

void Model::validate() const {
  if (layers.empty()) throw ModelError("model has no layers");
  if (norm.mean.size() != input_dim || norm.scale.size() != input_dim)
    throw ModelError("model normalization does not match the input dimension");
  Eigen::Index width = input_dim;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].W.cols() != width || layers[k].b.size() != layers[k].W.rows())
      throw ModelError(fmt::format("layer {} has inconsistent shape", k));
    width = layers[k].W.rows();
  }
  if (width != output_dim) throw ModelError("last layer does not match the output dimension");
}

void LrOptions::validate() const {
  if (!(ridge >= 0.0)) throw ConfigError("lr.ridge must be >= 0");
}

void AnnOptions::validate() const {
  for (int h : hidden)
    if (h < 1) throw ConfigError("ann.hidden widths must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("ann.learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("ann.momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("ann.batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("ann.max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("ann.patience must be >= 1");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("ann.decay_factor must lie in (0, 1]");
  if (decay_every < 1) throw ConfigError("ann.decay_every must be >= 1");
}

Model train_lr(const Dataset& ds, const LrOptions& options, TrainLog* log) {
  options.validate();
  ds.validate();
  const auto train = ds.rows(Split::kTrain);
  if (train.size() < 2) throw ModelError("linear regression needs at least 2 training examples");
  const Eigen::MatrixXd Xtr = take_rows(ds.X, train);
  const Eigen::MatrixXd Ytr = take_rows(ds.Y, train);

  Model model;
  model.kind = ModelKind::kLinear;
  model.input_dim = static_cast<int>(ds.X.cols());
  model.output_dim = static_cast<int>(ds.Y.cols());
  model.norm = Standardizer::fit(Xtr);

  const Eigen::Index d = ds.X.cols();
  Eigen::MatrixXd A(Xtr.rows(), d + 1);
  A.leftCols(d) = model.norm.apply(Xtr);
  A.col(d).setOnes();
  const Eigen::MatrixXd gram = A.transpose() * A;
  const Eigen::MatrixXd rhs = A.transpose() * Ytr;

  auto solve = [&](double ridge) {
    Eigen::MatrixXd G = gram;
    G.diagonal().head(d).array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-13;
    return std::pair{ok, Eigen::MatrixXd(ldlt.solve(rhs))};
  };
  double ridge = options.ridge;
  auto [ok, coef] = solve(ridge);
  bool forced = false;
  if (!ok || !coef.allFinite()) {
    ridge = std::max(ridge, 1e-8);
    forced = true;
    std::tie(ok, coef) = solve(ridge);
    if (!coef.allFinite()) throw TrainingError("linear regression system could not be solved");
  }

  Layer layer;
  layer.W = coef.topRows(d).transpose();
  layer.b = coef.row(d).transpose();
  model.layers.push_back(std::move(layer));

  const double train_mse = mse(model, Xtr, Ytr);
  const auto val = ds.rows(Split::kVal);
  const double val_mse = val.empty() ? train_mse : mse(model, take_rows(ds.X, val), take_rows(ds.Y, val));
  model.meta = {{"solver", "normal_equations"}, {"ridge", ridge},       {"ridge_forced", forced},
                {"train_mse", train_mse},      {"val_mse", val_mse},   {"train_examples", train.size()}};
  if (log != nullptr) log->push_back({0, train_mse, val_mse});
  return model;
}

Model init_network(int input_dim, int output_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  Model model;
  model.kind = ModelKind::kNeural;
  model.input_dim = input_dim;
  model.output_dim = output_dim;
  model.norm.mean = Eigen::VectorXd::Zero(input_dim);
  model.norm.scale = Eigen::VectorXd::Ones(input_dim);
  std::mt19937_64 rng(seed);
  int fan_in = input_dim;
  std::vector<int> widths = hidden;
  widths.push_back(output_dim);
  for (std::size_t k = 0; k < widths.size(); ++k) {
    const bool last = k + 1 == widths.size();
    std::normal_distribution<double> dist(0.0, std::sqrt((last ? 1.0 : 2.0) / fan_in));
    Layer l;
    l.W.resize(widths[k], fan_in);
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = dist(rng);
    l.b = Eigen::VectorXd::Zero(widths[k]);
    l.relu = !last;
    model.layers.push_back(std::move(l));
    fan_in = widths[k];
  }
  return model;
}

double loss_and_gradients(const Model& model, const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Y,
                          Gradients* grad) {
  std::vector<Eigen::MatrixXd> acts;
  forward(model, Xs, acts);
  const Eigen::MatrixXd diff = acts.back() - Y;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (grad == nullptr) return loss;

  const std::size_t L = model.layers.size();
  grad->dW.assign(L, {});
  grad->db.assign(L, {});
  Eigen::MatrixXd delta = (2.0 / count) * diff;  // dLoss / d(output of layer k)
  for (std::size_t k = L; k-- > 0;) {
    const Layer& l = model.layers[k];
    if (l.relu) delta = delta.cwiseProduct((acts[k + 1].array() > 0.0).cast<double>().matrix());
    grad->dW[k] = delta.transpose() * acts[k];
    grad->db[k] = delta.colwise().sum().transpose();
    if (k > 0) delta = delta * l.W;
  }
  return loss;
}

Model train_ann(const Dataset& ds, const AnnOptions& options, TrainLog* log) {
  options.validate();
  ds.validate();
  const auto train = ds.rows(Split::kTrain);
  if (train.empty()) throw ModelError("network training needs training examples");
  const auto val = ds.rows(Split::kVal);

  const Eigen::MatrixXd Xtr_raw = take_rows(ds.X, train);
  const Eigen::MatrixXd Ytr = take_rows(ds.Y, train);
  Model model = init_network(static_cast<int>(ds.X.cols()), static_cast<int>(ds.Y.cols()), options.hidden,
                             options.seed);
  model.norm = Standardizer::fit(Xtr_raw);
  model.layers.back().b = Ytr.colwise().mean().transpose();
  const Eigen::MatrixXd Xtr = model.norm.apply(Xtr_raw);
  const Eigen::MatrixXd Xval = val.empty() ? Xtr : model.norm.apply(take_rows(ds.X, val));
  const Eigen::MatrixXd Yval = val.empty() ? Ytr : take_rows(ds.Y, val);

  std::vector<Eigen::MatrixXd> vW;
  std::vector<Eigen::VectorXd> vb;
  for (const auto& l : model.layers) {
    vW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    vb.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }

  std::mt19937_64 rng(derive_seed(options.seed, std::string_view("shuffle")));
  std::vector<int> order(Xtr.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Layer> best = model.layers;
  double best_val = loss_and_gradients(model, Xval, Yval, nullptr);
  int best_epoch = 0;
  int epochs_run = 0;
  Gradients g;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    epochs_run = epoch;
    const double lr =
        options.learning_rate * std::pow(options.decay_factor, static_cast<double>((epoch - 1) / options.decay_every));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      const double loss = loss_and_gradients(model, take_rows(Xtr, idx), take_rows(Ytr, idx), &g);
      ++step;
      if (!std::isfinite(loss))
        throw TrainingError(fmt::format("network training diverged at epoch {} step {} (loss {})", epoch, step, loss));
      for (std::size_t k = 0; k < model.layers.size(); ++k) {
        vW[k] = options.momentum * vW[k] - lr * g.dW[k];
        vb[k] = options.momentum * vb[k] - lr * g.db[k];
        model.layers[k].W += vW[k];
        model.layers[k].b += vb[k];
      }
    }
    const double train_mse = loss_and_gradients(model, Xtr, Ytr, nullptr);
    const double val_mse = loss_and_gradients(model, Xval, Yval, nullptr);
    if (!std::isfinite(train_mse))
      throw TrainingError(fmt::format("network training diverged at epoch {} step {}", epoch, step));
    if (log != nullptr) log->push_back({epoch, train_mse, val_mse});
    if (val_mse < best_val) {
      best_val = val_mse;
      best = model.layers;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= options.patience) {
      break;
    }
  }
  model.layers = std::move(best);
  const double train_mse = loss_and_gradients(model, Xtr, Ytr, nullptr);
  model.meta = {{"optimizer", "sgd_momentum"},
                {"hidden", options.hidden},
                {"learning_rate", options.learning_rate},
                {"momentum", options.momentum},
                {"batch_size", options.batch_size},
                {"decay_factor", options.decay_factor},
                {"decay_every", options.decay_every},
                {"patience", options.patience},
                {"seed", options.seed},
                {"epochs", epochs_run},
                {"best_epoch", best_epoch},
                {"train_mse", train_mse},
                {"val_mse", best_val},
                {"train_examples", train.size()}};
  return model;
}

Eigen::MatrixXd predict_raw(const Model& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.input_dim)
    throw ModelError(fmt::format("feature length {} does not match model input {}", X.cols(), model.input_dim));
  std::vector<Eigen::MatrixXd> acts;
  forward(model, model.norm.apply(X), acts);
  return acts.back();
}

Prediction predict(const Model& model, std::span<const double> features) {
  const Eigen::Map<const Eigen::RowVectorXd> row(features.data(), static_cast<Eigen::Index>(features.size()));
  const Eigen::MatrixXd out = predict_raw(model, Eigen::MatrixXd(row));
  Prediction p;
  p.values.resize(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    p.values[j] = out(0, j);
    if (p.values[j] < 0.0) {
      p.values[j] = 0.0;
      ++p.clamped;
    }
  }
  return p;
}

double mse(const Model& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() == 0) return 0.0;
  return (predict_raw(model, X) - Y).squaredNorm() / static_cast<double>(Y.size());
}

nlohmann::json to_json(const Model& model) {
  model.validate();
  auto layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    std::vector<double> w;
    w.reserve(l.W.size());
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) w.push_back(l.W(r, c));
    layers.push_back({{"rows", l.W.rows()},
                      {"cols", l.W.cols()},
                      {"weights", w},
                      {"bias", from_vector(l.b)},
                      {"activation", l.relu ? "relu" : "identity"}});
  }
  return {{"kind", to_string(model.kind)},
          {"input_dim", model.input_dim},
          {"output_dim", model.output_dim},
          {"normalization", {{"mean", from_vector(model.norm.mean)}, {"scale", from_vector(model.norm.scale)}}},
          {"layers", layers},
          {"metadata", model.meta}};
}

Model model_from_json(const nlohmann::json& j) {
  Model m;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "LR") m.kind = ModelKind::kLinear;
    else if (kind == "ANN") m.kind = ModelKind::kNeural;
    else throw ArtifactError("unknown model kind '" + kind + "'");
    m.input_dim = j.at("input_dim").get<int>();
    m.output_dim = j.at("output_dim").get<int>();
    m.norm.mean = to_vector(j.at("normalization").at("mean"));
    m.norm.scale = to_vector(j.at("normalization").at("scale"));
    for (const auto& jl : j.at("layers")) {
      Layer l;
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      const auto w = jl.at("weights").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols) throw ArtifactError("layer weight count mismatch");
      l.W.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) l.W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      l.b = to_vector(jl.at("bias"));
      const auto act = jl.at("activation").get<std::string>();
      if (act != "relu" && act != "identity") throw ArtifactError("unknown activation '" + act + "'");
      l.relu = act == "relu";
      m.layers.push_back(std::move(l));
    }
    m.meta = j.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("malformed model file: ") + e.what());
  }
  try {
    m.validate();
  } catch (const ModelError& e) {
    throw ArtifactError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

}  // namespace repscen::learn
