#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "asrfeat/matrix.hpp"

namespace asrfeat {

inline constexpr double kStdFloor = 1e-12;
inline constexpr double kRidgeJitter = 1e-8;
inline constexpr int kRefinementSteps = 4;

// Column standardization fitted on training rows only.
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;

  static Scaler fit(const Matrix& x);
  static Scaler identity(std::size_t dim);
  Matrix transform(const Matrix& x) const;
};

// Univariate regression F statistic per column:
//   F_j = r_j^2 / (1 - r_j^2) * (N - 2)
// with r_j^2 capped at 1 - 1e-12. Constant columns score 0.
std::vector<double> univariate_f_scores(const Matrix& x, std::span<const double> y);

// Indices of the k highest scores among candidates (ties to the lower index),
// returned in ascending order.
std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k,
                                      std::span<const std::size_t> candidates);

struct RegressionModel {
  double intercept = 0.0;
  std::vector<double> coeffs;
  std::vector<std::size_t> selected_indices;
  Scaler scaler;
  std::string target_name;
};

// Least squares on [1 X] via the normal equations with kRidgeJitter added to
// the Gram diagonal, solved by Cholesky and refined kRefinementSteps times
// against the unjittered equations. The returned model uses an identity
// scaler and selects all columns of x in order.
RegressionModel ols_fit(const Matrix& x, std::span<const double> y);

// Standardize on x_raw, pick the top-k candidates by F score, then ols_fit on
// the selected standardized columns.
RegressionModel fit_selected_regression(const Matrix& x_raw, std::span<const double> y,
                                        std::size_t k, std::span<const std::size_t> candidates);

std::vector<double> predict(const RegressionModel& m, const Matrix& x_raw);

double mse(std::span<const double> pred, std::span<const double> truth);

// Audit dump: "index,coefficient,mean,std" with an intercept row first.
void write_model_csv(const RegressionModel& m, const std::filesystem::path& path);

}  // namespace asrfeat
