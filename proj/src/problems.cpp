#include "wagmf/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wagmf {

namespace {

Evaluation linear_loss(double slope, const VectorXd& x) {
  require_same_dim(x.size(), 1, "synthetic problem");
  return {slope * x[0], VectorXd::Constant(1, slope)};
}

}  // namespace

Evaluation reddi_stochastic(std::int64_t /*t*/, const VectorXd& x, CounterRng& rng) {
  return linear_loss(rng.bernoulli(kReddiProbability) ? kReddiHighSlope : kReddiLowSlope, x);
}

Evaluation reddi_online(std::int64_t t, const VectorXd& x) {
  return linear_loss(t % kReddiPeriod == 1 ? kReddiHighSlope : kReddiLowSlope, x);
}

bool ReddiStochastic::high_branch(std::int64_t t, std::uint64_t seed) {
  CounterRng rng(seed, streams::kReddiBranch, static_cast<std::uint64_t>(t));
  return rng.bernoulli(kReddiProbability);
}

Evaluation ReddiStochastic::evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const {
  CounterRng rng(seed, streams::kReddiBranch, static_cast<std::uint64_t>(t));
  return reddi_stochastic(t, x, rng);
}

Evaluation ReddiOnline::evaluate(std::int64_t t, const VectorXd& x, std::uint64_t /*seed*/) const {
  return reddi_online(t, x);
}

Quadratic::Quadratic(VectorXd a_diag, VectorXd x_star) : a_(std::move(a_diag)), x_star_(std::move(x_star)) {
  require_same_dim(a_.size(), x_star_.size(), "quadratic");
  if ((a_.array() <= 0.0).any() || !all_finite(a_) || !all_finite(x_star_)) {
    throw Error(ErrorKind::InvalidConfig, "quadratic curvature must be finite and > 0");
  }
}

Evaluation Quadratic::evaluate(std::int64_t /*t*/, const VectorXd& x, std::uint64_t /*seed*/) const {
  require_same_dim(x.size(), a_.size(), "quadratic");
  const VectorXd diff = x - x_star_;
  return {0.5 * (a_.array() * diff.array().square()).sum(), a_.cwiseProduct(diff)};
}

std::unique_ptr<LossOracle> quadratic(VectorXd a_diag, VectorXd x_star) {
  return std::make_unique<Quadratic>(std::move(a_diag), std::move(x_star));
}

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "feature rows and label count differ");
  }
  if (features.rows() == 0 || features.cols() == 0 || classes <= 0) {
    throw Error(ErrorKind::ShapeMismatch, "dataset must be non-empty");
  }
  if (!all_finite(features)) throw Error(ErrorKind::NonFiniteInput, "non-finite feature value");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw Error(ErrorKind::LabelOutOfRange,
                  "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
  }
}

Dataset make_blobs(Eigen::Index n, Eigen::Index d, int classes, double separation, std::uint64_t seed) {
  CounterRng rng(seed, streams::kSyntheticData);
  Eigen::MatrixXd centers(classes, d);
  for (int k = 0; k < classes; ++k)
    for (Eigen::Index j = 0; j < d; ++j) centers(k, j) = separation * rng.normal();

  Dataset data;
  data.classes = classes;
  data.features.resize(n, d);
  data.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % classes);
    data.labels[static_cast<std::size_t>(i)] = k;
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = centers(k, j) + rng.normal();
  }
  return data;
}

Eigen::Index softmax_param_count(Eigen::Index d, int classes) { return classes * d + classes; }

Evaluation softmax_objective(const VectorXd& params, const Dataset& data, double reg,
                             std::span<const Eigen::Index> rows) {
  const Eigen::Index d = data.d();
  const int k = data.classes;
  if (params.size() != softmax_param_count(d, k)) {
    throw Error(ErrorKind::ShapeMismatch, "parameter vector has " + std::to_string(params.size()) +
                                              " entries, expected " + std::to_string(softmax_param_count(d, k)));
  }
  if (!(reg >= 0.0)) throw Error(ErrorKind::InvalidConfig, "reg must be >= 0");
  if (!all_finite(params)) throw Error(ErrorKind::NonFiniteInput, "non-finite parameter");

  // Row-major K x d view over the leading K*d entries.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> w(params.data(), k, d);
  const auto b = params.tail(k);

  Eigen::MatrixXd x;
  std::vector<int> y;
  if (rows.empty()) {
    x = data.features;
    y = data.labels;
  } else {
    x.resize(static_cast<Eigen::Index>(rows.size()), d);
    y.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = data.features.row(rows[r]);
      y[r] = data.labels[static_cast<std::size_t>(rows[r])];
    }
  }
  const Eigen::Index n = x.rows();

  Eigen::MatrixXd logits = x * w.transpose();
  logits.rowwise() += b.transpose();

  long double loss = 0.0L;
  Eigen::MatrixXd residual(n, k);  // softmax - onehot
  for (Eigen::Index i = 0; i < n; ++i) {
    const double peak = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - peak).exp();
    const double z = e.sum();
    const int label = y[static_cast<std::size_t>(i)];
    loss += std::log(z) - (logits(i, label) - peak);
    residual.row(i) = e / z;
    residual(i, label) -= 1.0;
  }
  Evaluation out;
  out.loss = static_cast<double>(loss / n) + reg * w.squaredNorm();
  out.grad.resize(params.size());
  Eigen::Map<RowMajor> gw(out.grad.data(), k, d);
  gw = residual.transpose() * x / static_cast<double>(n) + 2.0 * reg * w;
  out.grad.tail(k) = residual.colwise().sum().transpose() / static_cast<double>(n);
  return out;
}

SoftmaxOracle::SoftmaxOracle(std::shared_ptr<const Dataset> data, double reg) : data_(std::move(data)), reg_(reg) {
  data_->validate();
}

Eigen::Index SoftmaxOracle::dim() const { return softmax_param_count(data_->d(), data_->classes); }

Evaluation SoftmaxOracle::evaluate(std::int64_t /*t*/, const VectorXd& x, std::uint64_t /*seed*/) const {
  return softmax_objective(x, *data_, reg_);
}

MinibatchOracle::MinibatchOracle(std::shared_ptr<const Dataset> data, double reg, Eigen::Index batch_size)
    : data_(std::move(data)), reg_(reg), batch_(batch_size) {
  data_->validate();
  if (batch_ < 1 || batch_ > data_->n()) {
    throw Error(ErrorKind::InvalidConfig, "batch size must lie in [1, n]");
  }
}

Eigen::Index MinibatchOracle::dim() const { return softmax_param_count(data_->d(), data_->classes); }

Eigen::Index MinibatchOracle::rounds_per_epoch() const noexcept { return (data_->n() + batch_ - 1) / batch_; }

std::vector<Eigen::Index> MinibatchOracle::epoch_permutation(std::int64_t epoch, std::uint64_t seed) const {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(data_->n()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  CounterRng rng(seed, (streams::kEpochPermutation << 48) | static_cast<std::uint64_t>(epoch));
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  return perm;
}

std::vector<Eigen::Index> MinibatchOracle::batch_rows(std::int64_t t, std::uint64_t seed) const {
  const Eigen::Index per_epoch = rounds_per_epoch();
  const std::int64_t epoch = (t - 1) / per_epoch;
  const Eigen::Index slot = (t - 1) % per_epoch;
  const auto perm = epoch_permutation(epoch, seed);
  const auto begin = static_cast<std::size_t>(slot * batch_);
  const auto end = std::min(perm.size(), begin + static_cast<std::size_t>(batch_));
  return {perm.begin() + static_cast<std::ptrdiff_t>(begin), perm.begin() + static_cast<std::ptrdiff_t>(end)};
}

Evaluation MinibatchOracle::evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const {
  if (batch_ == data_->n()) return softmax_objective(x, *data_, reg_);
  const auto rows = batch_rows(t, seed);
  return softmax_objective(x, *data_, reg_, rows);
}

std::unique_ptr<LossOracle> minibatch_oracle(std::shared_ptr<const Dataset> data, double reg,
                                             Eigen::Index batch_size) {
  return std::make_unique<MinibatchOracle>(std::move(data), reg, batch_size);
}

}  // namespace wagmf
