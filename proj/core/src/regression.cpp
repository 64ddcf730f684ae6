#include "asrfeat/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "asrfeat/csv.hpp"
#include "asrfeat/error.hpp"
#include "asrfeat/stats.hpp"
#include "file_util.hpp"

namespace asrfeat {

Scaler Scaler::fit(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0) throw Error(ErrorCode::TooFewSamples, "cannot fit a scaler on zero rows");
  Scaler s;
  s.means.assign(d, 0.0);
  s.stds.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) s.means[j] += row[j];
  }
  std::vector<bool> constant(d, true);
  for (std::size_t j = 0; j < d; ++j) s.means[j] /= static_cast<double>(n);
  for (std::size_t r = 1; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) constant[j] = constant[j] && row[j] == x(0, j);
  }
  // A constant column must standardize to exact zeros.
  for (std::size_t j = 0; j < d; ++j) {
    if (constant[j]) s.means[j] = x(0, j);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - s.means[j];
      s.stds[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    s.stds[j] = std::max(std::sqrt(s.stds[j] / static_cast<double>(n)), kStdFloor);
  }
  return s;
}

Scaler Scaler::identity(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

Matrix Scaler::transform(const Matrix& x) const {
  if (x.cols() != means.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scaler fitted on " + std::to_string(means.size()) +
                                                  " columns, input has " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = (src[j] - means[j]) / stds[j];
  }
  return out;
}

namespace {

std::vector<double> f_scores_for(const Matrix& x, std::span<const double> y,
                                 std::span<const std::size_t> columns) {
  const std::size_t n = x.rows();
  if (y.size() != n) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(n) + " rows vs " + std::to_string(y.size()) + " targets");
  }
  if (n < 3) throw Error(ErrorCode::TooFewSamples, "F scores need at least 3 samples");
  std::vector<double> scores(x.cols(), 0.0);
  std::vector<double> column(n);
  for (std::size_t j : columns) {
    for (std::size_t r = 0; r < n; ++r) column[r] = x(r, j);
    double r2 = 0.0;
    try {
      const double r = pearson(column, y);
      r2 = std::min(r * r, 1.0 - 1e-12);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      continue;
    }
    scores[j] = r2 / (1.0 - r2) * static_cast<double>(n - 2);
  }
  return scores;
}

std::vector<std::size_t> all_columns(std::size_t d) {
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

std::vector<double> univariate_f_scores(const Matrix& x, std::span<const double> y) {
  const auto cols = all_columns(x.cols());
  return f_scores_for(x, y, cols);
}

std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k,
                                      std::span<const std::size_t> candidates) {
  if (k > candidates.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(candidates.size()) +
                                          " candidate features");
  }
  for (std::size_t j : candidates) {
    if (j >= scores.size()) throw Error(ErrorCode::DimensionMismatch, "candidate index out of range");
  }
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

RegressionModel ols_fit(const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  if (y.size() != n) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(n) + " rows vs " + std::to_string(y.size()) + " targets");
  }
  if (n == 0) throw Error(ErrorCode::TooFewSamples, "ols_fit needs at least one row");
  const std::size_t p = k + 1;

  // Normal equations for [1 X] accumulated in extended precision.
  std::vector<long double> gram(p * p, 0.0L);
  std::vector<long double> rhs(p, 0.0L);
  std::vector<long double> a(p);
  for (std::size_t r = 0; r < n; ++r) {
    a[0] = 1.0L;
    const auto row = x.row(r);
    for (std::size_t j = 0; j < k; ++j) a[j + 1] = row[j];
    for (std::size_t i = 0; i < p; ++i) {
      rhs[i] += a[i] * y[r];
      for (std::size_t j = 0; j <= i; ++j) gram[i * p + j] += a[i] * a[j];
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) gram[i * p + j] = gram[j * p + i];
  }
  const std::vector<long double> exact(gram);
  for (std::size_t i = 0; i < p; ++i) gram[i * p + i] += kRidgeJitter;

  // Cholesky G + jitter = L L^T, lower triangle in place.
  for (std::size_t j = 0; j < p; ++j) {
    long double diag = gram[j * p + j];
    for (std::size_t m = 0; m < j; ++m) diag -= gram[j * p + m] * gram[j * p + m];
    if (!(diag > 0.0L)) {
      throw Error(ErrorCode::NumericalFailure, "Gram matrix not positive definite at pivot " + std::to_string(j));
    }
    const long double ljj = std::sqrt(diag);
    gram[j * p + j] = ljj;
    for (std::size_t i = j + 1; i < p; ++i) {
      long double v = gram[i * p + j];
      for (std::size_t m = 0; m < j; ++m) v -= gram[i * p + m] * gram[j * p + m];
      gram[i * p + j] = v / ljj;
    }
  }
  const auto solve = [&](std::vector<long double>& v) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t m = 0; m < i; ++m) v[i] -= gram[i * p + m] * v[m];
      v[i] /= gram[i * p + i];
    }
    for (std::size_t i = p; i-- > 0;) {
      for (std::size_t m = i + 1; m < p; ++m) v[i] -= gram[m * p + i] * v[m];
      v[i] /= gram[i * p + i];
    }
  };
  std::vector<long double> beta(rhs);
  solve(beta);
  // Refinement against the unjittered system removes the jitter bias in
  // well-posed directions; residuals lie in the range of G, so directions
  // outside it stay at zero.
  std::vector<long double> resid(p);
  for (int iter = 0; iter < kRefinementSteps; ++iter) {
    for (std::size_t i = 0; i < p; ++i) {
      long double v = rhs[i];
      for (std::size_t j = 0; j < p; ++j) v -= exact[i * p + j] * beta[j];
      resid[i] = v;
    }
    solve(resid);
    for (std::size_t i = 0; i < p; ++i) beta[i] += resid[i];
  }

  RegressionModel model;
  model.intercept = static_cast<double>(beta[0]);
  model.coeffs.resize(k);
  for (std::size_t j = 0; j < k; ++j) model.coeffs[j] = static_cast<double>(beta[j + 1]);
  if (!std::isfinite(model.intercept) ||
      !std::all_of(model.coeffs.begin(), model.coeffs.end(), [](double c) { return std::isfinite(c); })) {
    throw Error(ErrorCode::NumericalFailure, "non-finite regression coefficients");
  }
  model.selected_indices = all_columns(k);
  model.scaler = Scaler::identity(k);
  return model;
}

RegressionModel fit_selected_regression(const Matrix& x_raw, std::span<const double> y, std::size_t k,
                                        std::span<const std::size_t> candidates) {
  Scaler scaler = Scaler::fit(x_raw);
  const Matrix z = scaler.transform(x_raw);
  const std::vector<double> scores = f_scores_for(z, y, candidates);
  const std::vector<std::size_t> selected = select_top_k(scores, k, candidates);

  Matrix zs(z.rows(), selected.size());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t j = 0; j < selected.size(); ++j) zs(r, j) = z(r, selected[j]);
  }
  RegressionModel model = ols_fit(zs, y);
  model.selected_indices = selected;
  model.scaler = std::move(scaler);
  return model;
}

std::vector<double> predict(const RegressionModel& m, const Matrix& x_raw) {
  if (m.coeffs.size() != m.selected_indices.size()) {
    throw Error(ErrorCode::DimensionMismatch, "model has mismatched coefficient and index counts");
  }
  for (std::size_t j : m.selected_indices) {
    if (j >= x_raw.cols() || j >= m.scaler.means.size()) {
      throw Error(ErrorCode::DimensionMismatch, "selected feature " + std::to_string(j) + " not present in input with " +
                                                    std::to_string(x_raw.cols()) + " columns");
    }
  }
  std::vector<double> out(x_raw.rows());
  for (std::size_t r = 0; r < x_raw.rows(); ++r) {
    double acc = m.intercept;
    for (std::size_t i = 0; i < m.selected_indices.size(); ++i) {
      const std::size_t j = m.selected_indices[i];
      acc += m.coeffs[i] * ((x_raw(r, j) - m.scaler.means[j]) / m.scaler.stds[j]);
    }
    out[r] = acc;
  }
  return out;
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw Error(ErrorCode::TooFewSamples, "mse of empty vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

void write_model_csv(const RegressionModel& m, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "index,coefficient,mean,std\n";
  out << "intercept," << csv::format_double(m.intercept, 17) << ",,\n";
  for (std::size_t i = 0; i < m.selected_indices.size(); ++i) {
    const std::size_t j = m.selected_indices[i];
    out << j << ',' << csv::format_double(m.coeffs[i], 17) << ',' << csv::format_double(m.scaler.means[j], 17)
        << ',' << csv::format_double(m.scaler.stds[j], 17) << '\n';
  }
  detail::write_file_text(path, out.str());
}

}  // namespace asrfeat
