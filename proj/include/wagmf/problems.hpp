#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wagmf/numerics.hpp"
#include "wagmf/random.hpp"

namespace wagmf {

struct Evaluation {
  double loss = 0.0;
  VectorXd grad;
};

/// Per-round loss f_t and a subgradient at x. Stochastic oracles draw their
/// randomness from counter streams keyed by (seed, t), so a round can be
/// replayed at any other point with the same realization.
class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Evaluation evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const = 0;
  virtual bool stochastic() const { return false; }
  virtual std::optional<VectorXd> known_optimum() const { return std::nullopt; }
  virtual std::string id() const = 0;
};

// Synthetic counterexample: f_t(x) = 1010 x with probability 0.01, else -10 x.
inline constexpr double kReddiHighSlope = 1010.0;
inline constexpr double kReddiLowSlope = -10.0;
inline constexpr double kReddiProbability = 0.01;
inline constexpr std::int64_t kReddiPeriod = 101;

Evaluation reddi_stochastic(std::int64_t t, const VectorXd& x, CounterRng& rng);
Evaluation reddi_online(std::int64_t t, const VectorXd& x);

class ReddiStochastic final : public LossOracle {
 public:
  Eigen::Index dim() const override { return 1; }
  Evaluation evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const override;
  bool stochastic() const override { return true; }
  std::string id() const override { return "reddi_stochastic"; }

  /// The round's branch, drawn from (seed, t) alone.
  static bool high_branch(std::int64_t t, std::uint64_t seed);
};

class ReddiOnline final : public LossOracle {
 public:
  Eigen::Index dim() const override { return 1; }
  Evaluation evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const override;
  std::string id() const override { return "reddi_online"; }
};

/// f(x) = 1/2 sum_i a_i (x_i - x*_i)^2, the same every round.
class Quadratic final : public LossOracle {
 public:
  Quadratic(VectorXd a_diag, VectorXd x_star);

  Eigen::Index dim() const override { return a_.size(); }
  Evaluation evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const override;
  std::optional<VectorXd> known_optimum() const override { return x_star_; }
  std::string id() const override { return "quadratic"; }

  const VectorXd& curvature() const noexcept { return a_; }

 private:
  VectorXd a_;
  VectorXd x_star_;
};

std::unique_ptr<LossOracle> quadratic(VectorXd a_diag, VectorXd x_star);

struct Dataset {
  Eigen::MatrixXd features;  // n x d
  std::vector<int> labels;   // n entries in [0, classes)
  int classes = 0;

  Eigen::Index n() const noexcept { return features.rows(); }
  Eigen::Index d() const noexcept { return features.cols(); }

  /// Throws LabelOutOfRange / NonFiniteInput / ShapeMismatch.
  void validate() const;
};

enum class DatasetFormat { Csv, Idx };

/// csv: one sample per row, last column the integer label, classes = max + 1.
/// idx: `path` is the 0x00000803 image file and `labels_path` the 0x00000801
/// label file; pixels are rescaled to [0, 1].
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::filesystem::path& labels_path = {});
std::vector<int> load_idx_labels(const std::filesystem::path& path);
Eigen::MatrixXd load_idx_images(const std::filesystem::path& path);

/// Isotropic Gaussian blobs: class centers ~ N(0, separation^2 I), samples
/// center + N(0, I), labels assigned round-robin.
Dataset make_blobs(Eigen::Index n, Eigen::Index d, int classes, double separation, std::uint64_t seed);

/// Parameter vector layout is [w_1, ..., w_K, b] with each w_k of length d.
Eigen::Index softmax_param_count(Eigen::Index d, int classes);

/// -(1/n) sum log softmax(W x_i + b)_{y_i} + reg * sum_k ||w_k||^2 over the
/// given rows (all rows when empty), with the exact gradient.
Evaluation softmax_objective(const VectorXd& params, const Dataset& data, double reg,
                             std::span<const Eigen::Index> rows = {});

class SoftmaxOracle final : public LossOracle {
 public:
  SoftmaxOracle(std::shared_ptr<const Dataset> data, double reg);

  Eigen::Index dim() const override;
  Evaluation evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const override;
  std::string id() const override { return "softmax"; }

 private:
  std::shared_ptr<const Dataset> data_;
  double reg_;
};

/// Round t evaluates the objective on batch ((t-1) mod R) of epoch
/// floor((t-1) / R) of a per-epoch permutation, R = ceil(n / batch_size).
class MinibatchOracle final : public LossOracle {
 public:
  MinibatchOracle(std::shared_ptr<const Dataset> data, double reg, Eigen::Index batch_size);

  Eigen::Index dim() const override;
  Evaluation evaluate(std::int64_t t, const VectorXd& x, std::uint64_t seed) const override;
  bool stochastic() const override { return true; }
  std::string id() const override { return "softmax"; }

  Eigen::Index rounds_per_epoch() const noexcept;
  std::vector<Eigen::Index> batch_rows(std::int64_t t, std::uint64_t seed) const;
  std::vector<Eigen::Index> epoch_permutation(std::int64_t epoch, std::uint64_t seed) const;

 private:
  std::shared_ptr<const Dataset> data_;
  double reg_;
  Eigen::Index batch_;
};

std::unique_ptr<LossOracle> minibatch_oracle(std::shared_ptr<const Dataset> data, double reg,
                                             Eigen::Index batch_size);

}  // namespace wagmf
