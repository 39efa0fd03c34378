#include "snapjump/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace snapjump {

namespace {

using json = nlohmann::json;

void check_architecture(const SurrogateModel& m) {
  if (m.weights.empty() || m.weights.size() != m.biases.size())
    throw AssemblyError("surrogate: empty or mismatched layer lists");
  if (m.weights.front().cols() != 4)
    throw AssemblyError("surrogate: input width must be 4");
  if (m.weights.back().rows() != 2)
    throw AssemblyError("surrogate: output width must be 2");
  for (size_t l = 0; l < m.weights.size(); ++l) {
    if (m.biases[l].size() != m.weights[l].rows())
      throw AssemblyError("surrogate: bias/weight shape mismatch");
    if (l + 1 < m.weights.size() &&
        m.weights[l + 1].cols() != m.weights[l].rows())
      throw AssemblyError("surrogate: consecutive layer shape mismatch");
  }
}

Eigen::MatrixXd standardize_batch(const Standardizer& s,
                                  const Eigen::MatrixXd& P) {
  return (P.colwise() - Eigen::Vector4d(s.mean))
      .array()
      .colwise() /
      Eigen::Array4d(s.std.array());
}

}  // namespace

SurrogateModel SurrogateModel::make(const std::vector<int>& hidden,
                                    unsigned seed) {
  std::vector<int> sizes;
  sizes.push_back(4);
  for (int h : hidden) {
    if (h < 1) throw AssemblyError("surrogate: hidden width must be >= 1");
    sizes.push_back(h);
  }
  sizes.push_back(2);

  std::mt19937 rng(seed);
  SurrogateModel m;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1], cols = sizes[l];
    const double limit = std::sqrt(6.0 / cols);  // uniform fan-in scaling
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = dist(rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(rows));
  }
  return m;
}

Eigen::Vector2d SurrogateModel::forward(const Eigen::Vector4d& p) const {
  return forward_batch(p);
}

Eigen::MatrixXd SurrogateModel::forward_batch(const Eigen::MatrixXd& P) const {
  check_architecture(*this);
  if (P.rows() != 4) throw AssemblyError("surrogate: input must be 4 x N");
  Eigen::MatrixXd a = standardize_batch(input_norm, P);
  const int L = num_layers();
  for (int l = 0; l < L; ++l) {
    a = (weights[l] * a).colwise() + biases[l];
    if (l + 1 < L) a = a.cwiseMax(0.0);
  }
  return a;
}

Eigen::Matrix<double, 2, 4> SurrogateModel::input_gradient(
    const Eigen::Vector4d& p) const {
  check_architecture(*this);
  const int L = num_layers();
  // Forward pass keeping the rectifier masks.
  Eigen::VectorXd a = input_norm.apply(p);
  std::vector<Eigen::VectorXd> masks;
  masks.reserve(L - 1);
  for (int l = 0; l + 1 < L; ++l) {
    Eigen::VectorXd z = weights[l] * a + biases[l];
    masks.push_back((z.array() > 0.0).cast<double>());
    a = z.cwiseMax(0.0);
  }
  // Backward accumulation G = W_L * D_{L-1} W_{L-1} ... D_1 W_1.
  Eigen::MatrixXd g = weights[L - 1];
  for (int l = L - 2; l >= 0; --l)
    g = (g * masks[l].asDiagonal()) * weights[l];
  // Chain through standardization.
  for (int j = 0; j < 4; ++j) g.col(j) /= input_norm.std[j];
  return g;
}

void SurrogateModel::save(const std::string& path) const {
  check_architecture(*this);
  json doc;
  doc["format"] = "snapjump-surrogate-v1";
  doc["standardizer"] = {
      {"mean", std::vector<double>(input_norm.mean.data(),
                                   input_norm.mean.data() + 4)},
      {"std",
       std::vector<double>(input_norm.std.data(), input_norm.std.data() + 4)}};
  json layers = json::array();
  for (int l = 0; l < num_layers(); ++l) {
    const auto& w = weights[l];
    std::vector<double> flat(w.size());
    for (int i = 0; i < w.rows(); ++i)  // row-major for readability
      for (int j = 0; j < w.cols(); ++j) flat[i * w.cols() + j] = w(i, j);
    layers.push_back(
        {{"rows", w.rows()},
         {"cols", w.cols()},
         {"weights", flat},
         {"bias", std::vector<double>(biases[l].data(),
                                      biases[l].data() + biases[l].size())}});
  }
  doc["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw AssemblyError("cannot open '" + path + "' for writing");
  out << doc.dump(1, '\t') << '\n';
  if (!out) throw AssemblyError("write failed for '" + path + "'");
}

SurrogateModel SurrogateModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AssemblyError("cannot open '" + path + "'");
  json doc;
  in >> doc;
  if (doc.value("format", "") != "snapjump-surrogate-v1")
    throw AssemblyError("unrecognized surrogate file format in '" + path +
                        "'");
  SurrogateModel m;
  const auto mean = doc["standardizer"]["mean"].get<std::vector<double>>();
  const auto sdev = doc["standardizer"]["std"].get<std::vector<double>>();
  if (mean.size() != 4 || sdev.size() != 4)
    throw AssemblyError("surrogate standardizer must have 4 entries");
  for (int i = 0; i < 4; ++i) {
    m.input_norm.mean[i] = mean[i];
    m.input_norm.std[i] = sdev[i];
  }
  for (const auto& layer : doc["layers"]) {
    const int rows = layer["rows"].get<int>();
    const int cols = layer["cols"].get<int>();
    const auto flat = layer["weights"].get<std::vector<double>>();
    const auto bias = layer["bias"].get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != rows * cols ||
        static_cast<int>(bias.size()) != rows)
      throw AssemblyError("surrogate layer shape mismatch in '" + path + "'");
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = flat[i * cols + j];
    m.weights.push_back(std::move(w));
    m.biases.push_back(
        Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
  }
  check_architecture(m);
  return m;
}

double dataset_mae(const SurrogateModel& model,
                   const std::vector<DatasetRow>& rows) {
  if (rows.empty()) return 0.0;
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd X(4, n), Y(2, n);
  for (int i = 0; i < n; ++i) {
    X.col(i) << rows[i].dalpha, rows[i].eps, rows[i].mbar, rows[i].mu;
    Y.col(i) << rows[i].xbar, rows[i].ybar;
  }
  return (model.forward_batch(X) - Y).cwiseAbs().mean();
}

TrainReport train(SurrogateModel& model, const std::vector<DatasetRow>& all,
                  const TrainConfig& cfg) {
  const std::vector<DatasetRow> rows = ok_rows(all);
  if (rows.size() < 4)
    throw AssemblyError("surrogate: need at least 4 usable rows");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction > 1.0)
    throw AssemblyError("surrogate: train_fraction must be in (0, 1]");

  std::mt19937 rng(cfg.seed);
  model = SurrogateModel::make(cfg.hidden, rng());

  // Shuffled split.
  const int n = static_cast<int>(rows.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_train = std::max(
      1, std::min(n, static_cast<int>(std::lround(n * cfg.train_fraction))));
  const int n_val = n - n_train;

  Eigen::MatrixXd X(4, n_train), Y(2, n_train);
  for (int i = 0; i < n_train; ++i) {
    const auto& r = rows[order[i]];
    X.col(i) << r.dalpha, r.eps, r.mbar, r.mu;
    Y.col(i) << r.xbar, r.ybar;
  }
  std::vector<DatasetRow> val;
  val.reserve(n_val);
  for (int i = n_train; i < n; ++i) val.push_back(rows[order[i]]);

  // Standardizer from training inputs only.
  for (int j = 0; j < 4; ++j) {
    const double mean = X.row(j).mean();
    const double var = (X.row(j).array() - mean).square().mean();
    model.input_norm.mean[j] = mean;
    model.input_norm.std[j] = std::max(std::sqrt(var), 1e-12);
  }
  const Eigen::MatrixXd Z = standardize_batch(model.input_norm, X);

  const int L = model.num_layers();
  std::vector<Eigen::MatrixXd> mw(L), vw(L);
  std::vector<Eigen::VectorXd> mb(L), vb(L);
  for (int l = 0; l < L; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(),
                                  model.weights[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(model.biases[l].size());
    vb[l] = mb[l];
  }

  auto batch_size_at = [&](int epoch) {
    int size = 64;
    for (const auto& [start, b] : cfg.batch_schedule)
      if (epoch >= start) size = b;
    return std::min(size, n_train);
  };
  auto learning_rate_at = [&](int epoch) {
    double lr = cfg.learning_rate;
    for (const auto& [start, rate] : cfg.lr_schedule)
      if (epoch >= start) lr = rate;
    return lr;
  };

  TrainReport report;
  report.epochs = cfg.epochs;
  std::vector<int> idx(n_train);
  std::iota(idx.begin(), idx.end(), 0);
  long step_count = 0;

  std::vector<Eigen::MatrixXd> acts(L + 1), masks(L);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const int bs = batch_size_at(epoch);
    const double lr = learning_rate_at(epoch);
    double epoch_abs = 0.0;
    long epoch_entries = 0;

    for (int begin = 0; begin < n_train; begin += bs) {
      const int b = std::min(bs, n_train - begin);
      Eigen::MatrixXd zb(4, b), yb(2, b);
      for (int k = 0; k < b; ++k) {
        zb.col(k) = Z.col(idx[begin + k]);
        yb.col(k) = Y.col(idx[begin + k]);
      }

      // Forward with cached activations.
      acts[0] = std::move(zb);
      for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd z = (model.weights[l] * acts[l]).colwise() +
                            model.biases[l];
        if (l + 1 < L) {
          masks[l] = (z.array() > 0.0).cast<double>();
          acts[l + 1] = z.cwiseMax(0.0);
        } else {
          acts[l + 1] = std::move(z);
        }
      }

      const Eigen::MatrixXd err = acts[L] - yb;
      const double batch_abs = err.cwiseAbs().sum();
      if (!std::isfinite(batch_abs))
        throw ConvergenceError("surrogate training diverged (non-finite loss)");
      epoch_abs += batch_abs;
      epoch_entries += err.size();

      // MAE subgradient, averaged over all output entries in the batch.
      Eigen::MatrixXd delta =
          err.array().sign().matrix() / static_cast<double>(err.size());
      ++step_count;
      const double bias_fix1 = 1.0 - std::pow(cfg.beta1, step_count);
      const double bias_fix2 = 1.0 - std::pow(cfg.beta2, step_count);
      for (int l = L - 1; l >= 0; --l) {
        const Eigen::MatrixXd grad_w = delta * acts[l].transpose();
        const Eigen::VectorXd grad_b = delta.rowwise().sum();
        if (l > 0)
          delta = (model.weights[l].transpose() * delta)
                      .cwiseProduct(masks[l - 1]);

        mw[l] = cfg.beta1 * mw[l] + (1.0 - cfg.beta1) * grad_w;
        vw[l] = cfg.beta2 * vw[l] +
                (1.0 - cfg.beta2) * grad_w.cwiseProduct(grad_w);
        mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * grad_b;
        vb[l] = cfg.beta2 * vb[l] +
                (1.0 - cfg.beta2) * grad_b.cwiseProduct(grad_b);

        model.weights[l].array() -=
            lr * (mw[l].array() / bias_fix1) /
            ((vw[l].array() / bias_fix2).sqrt() + cfg.adam_eps);
        model.biases[l].array() -=
            lr * (mb[l].array() / bias_fix1) /
            ((vb[l].array() / bias_fix2).sqrt() + cfg.adam_eps);
      }
    }

    const double epoch_mae = epoch_abs / static_cast<double>(epoch_entries);
    report.epoch_mae.push_back(epoch_mae);
    report.train_mae = epoch_mae;
    if (cfg.on_epoch) cfg.on_epoch(epoch, epoch_mae);
  }

  report.validation_mae = val.empty() ? 0.0 : dataset_mae(model, val);
  return report;
}

}  // namespace snapjump
