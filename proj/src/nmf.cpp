#include <cmath>

#include "semspan/error.hpp"
#include "semspan/rng.hpp"
#include "semspan/topics.hpp"

namespace semspan {

namespace {

// Added to every update denominator. A larger diagonal in the quadratic
// majorizer keeps each step a descent step, so monotonicity is preserved.
constexpr double kEps = 1e-12;

// Gram matrix A^T A of an n x k matrix.
Matrix gram_columns(const Matrix& a) {
  Matrix g(a.cols, a.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto row = a.row(r);
    for (std::size_t i = 0; i < a.cols; ++i) {
      for (std::size_t j = 0; j < a.cols; ++j) g(i, j) += row[i] * row[j];
    }
  }
  return g;
}

// Gram matrix B B^T of a k x v matrix.
Matrix gram_rows(const Matrix& b) {
  Matrix g(b.rows, b.rows, 0.0);
  for (std::size_t i = 0; i < b.rows; ++i) {
    for (std::size_t j = i; j < b.rows; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < b.cols; ++c) s += b(i, c) * b(j, c);
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

}  // namespace

NmfModel fit_nmf(const TfidfMatrix& x, const NmfOptions& options) {
  const std::size_t n = x.num_rows();
  const std::size_t v = x.num_cols;
  const std::size_t k = options.k;
  if (k < 1) throw UsageError("NMF needs k >= 1");

  double norm2 = 0.0;
  double sum = 0.0;
  for (double val : x.values) {
    if (val < 0.0) throw DataError("NMF input has a negative entry");
    norm2 += val * val;
    sum += val;
  }

  NmfModel model;
  model.w = Matrix(n, k, 0.0);
  model.h = Matrix(k, v, 0.0);
  if (norm2 == 0.0) {
    model.warnings.push_back("NMF input is the zero matrix; returning zero factors");
    model.objective.assign(options.iterations, 0.0);
    return model;
  }

  // Scale the random start so that WH has roughly the mean of X.
  const double mean = sum / (static_cast<double>(n) * static_cast<double>(v));
  const double scale = std::sqrt(mean / static_cast<double>(k));
  Rng rng(options.seed);
  for (auto& val : model.w.data) val = scale * (0.01 + 0.99 * rng.uniform());
  for (auto& val : model.h.data) val = scale * (0.01 + 0.99 * rng.uniform());

  Matrix& w = model.w;
  Matrix& h = model.h;
  Matrix wt_x(k, v);
  Matrix x_ht(n, k);
  std::vector<double> buf(std::max(k, v));

  for (std::size_t it = 0; it < options.iterations; ++it) {
    // H <- H * (W^T X) / (W^T W H)
    std::fill(wt_x.data.begin(), wt_x.data.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      auto cs = x.row_cols(r);
      auto vs = x.row_values(r);
      for (std::size_t i = 0; i < cs.size(); ++i) {
        for (std::size_t t = 0; t < k; ++t) wt_x(t, cs[i]) += w(r, t) * vs[i];
      }
    }
    const Matrix wtw = gram_columns(w);
    for (std::size_t c = 0; c < v; ++c) {
      for (std::size_t t = 0; t < k; ++t) {
        double den = 0.0;
        for (std::size_t s = 0; s < k; ++s) den += wtw(t, s) * h(s, c);
        buf[t] = h(t, c) * wt_x(t, c) / (den + kEps);
      }
      for (std::size_t t = 0; t < k; ++t) h(t, c) = buf[t];
    }

    // W <- W * (X H^T) / (W H H^T)
    std::fill(x_ht.data.begin(), x_ht.data.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      auto cs = x.row_cols(r);
      auto vs = x.row_values(r);
      for (std::size_t i = 0; i < cs.size(); ++i) {
        for (std::size_t t = 0; t < k; ++t) x_ht(r, t) += vs[i] * h(t, cs[i]);
      }
    }
    const Matrix hht = gram_rows(h);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t t = 0; t < k; ++t) {
        double den = 0.0;
        for (std::size_t s = 0; s < k; ++s) den += w(r, s) * hht(s, t);
        buf[t] = w(r, t) * x_ht(r, t) / (den + kEps);
      }
      for (std::size_t t = 0; t < k; ++t) w(r, t) = buf[t];
    }

    // ||X - WH||^2 = ||X||^2 - 2 <W, X H^T> + <W^T W, H H^T>; x_ht and hht
    // already use the updated H.
    double cross = 0.0;
    for (std::size_t i = 0; i < w.data.size(); ++i) cross += w.data[i] * x_ht.data[i];
    const Matrix wtw_new = gram_columns(w);
    double quad = 0.0;
    for (std::size_t i = 0; i < wtw_new.data.size(); ++i) quad += wtw_new.data[i] * hht.data[i];
    model.objective.push_back(std::max(0.0, norm2 - 2.0 * cross + quad));
  }
  return model;
}

}  // namespace semspan
