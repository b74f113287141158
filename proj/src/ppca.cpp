#include "spiked_pca/ppca.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spiked_pca/errors.hpp"
#include "spiked_pca/random.hpp"

namespace spiked {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Observed entries of a centered matrix, indexed both by row and by column.
// Rows without any observed entry are dropped.
struct ObservedEntries {
  Index dim = 0;
  Index rows = 0;
  Index count = 0;
  double sum_squares = 0.0;

  std::vector<Index> row_start;
  std::vector<Index> row_col;
  std::vector<double> row_value;
  std::vector<double> row_sum_squares;

  std::vector<Index> col_start;
  std::vector<Index> col_row;
  std::vector<double> col_value;

  ObservedEntries(const MaskedMatrix& centered) : dim(centered.cols()) {
    const Matrix& values = centered.values();
    const Mask& mask = centered.mask();

    row_start.push_back(0);
    std::vector<Index> per_col(static_cast<std::size_t>(dim), 0);
    for (Index n = 0; n < centered.rows(); ++n) {
      double ss = 0.0;
      const auto before = row_col.size();
      for (Index d = 0; d < dim; ++d) {
        if (!mask(n, d)) continue;
        const double y = values(n, d);
        row_col.push_back(d);
        row_value.push_back(y);
        ss += y * y;
        ++per_col[static_cast<std::size_t>(d)];
      }
      if (row_col.size() == before) continue;
      row_start.push_back(static_cast<Index>(row_col.size()));
      row_sum_squares.push_back(ss);
      sum_squares += ss;
    }
    rows = static_cast<Index>(row_sum_squares.size());
    count = static_cast<Index>(row_col.size());

    col_start.assign(static_cast<std::size_t>(dim) + 1, 0);
    for (Index d = 0; d < dim; ++d) {
      col_start[static_cast<std::size_t>(d) + 1] =
          col_start[static_cast<std::size_t>(d)] + per_col[static_cast<std::size_t>(d)];
    }
    col_row.resize(static_cast<std::size_t>(count));
    col_value.resize(static_cast<std::size_t>(count));
    std::vector<Index> cursor(col_start.begin(), col_start.end() - 1);
    for (Index r = 0; r < rows; ++r) {
      for (Index p = row_start[static_cast<std::size_t>(r)];
           p < row_start[static_cast<std::size_t>(r) + 1]; ++p) {
        const auto slot = static_cast<std::size_t>(
            cursor[static_cast<std::size_t>(row_col[static_cast<std::size_t>(p)])]++);
        col_row[slot] = r;
        col_value[slot] = row_value[static_cast<std::size_t>(p)];
      }
    }
  }
};

// Sufficient statistics produced by the E-step. Loadings are kept transposed
// (k x D) so that each feature's row of A is contiguous.
class EmState {
 public:
  EmState(const ObservedEntries& obs, Index k)
      : obs_(obs),
        k_(k),
        latent_mean_(k, obs.rows),
        latent_second_(k, k * obs.rows),
        precision_(k, k),
        rhs_(k),
        solved_(k),
        identity_(Matrix::Identity(k, k)),
        gram_(k, k),
        cross_(k),
        row_(k) {}

  // Returns the observed-data log-likelihood of (loadings_t, noise_variance)
  // and, when `store` is set, fills the posterior moments.
  double e_step(const Matrix& loadings_t, double noise_variance, bool store, int iteration) {
    const double log_noise = std::log(noise_variance);
    double total = 0.0;
    for (Index r = 0; r < obs_.rows; ++r) {
      precision_.setZero();
      rhs_.setZero();
      const auto begin = obs_.row_start[static_cast<std::size_t>(r)];
      const auto end = obs_.row_start[static_cast<std::size_t>(r) + 1];
      for (Index p = begin; p < end; ++p) {
        const double* a = loadings_t.col(obs_.row_col[static_cast<std::size_t>(p)]).data();
        const double y = obs_.row_value[static_cast<std::size_t>(p)];
        for (Index i = 0; i < k_; ++i) {
          rhs_(i) += y * a[i];
          for (Index j = 0; j <= i; ++j) precision_(i, j) += a[i] * a[j];
        }
      }
      for (Index i = 0; i < k_; ++i) {
        precision_(i, i) += noise_variance;
        for (Index j = 0; j < i; ++j) precision_(j, i) = precision_(i, j);
      }

      llt_.compute(precision_);
      if (llt_.info() != Eigen::Success) {
        throw NumericalError("posterior precision is not positive definite", iteration);
      }
      solved_.noalias() = llt_.solve(rhs_);

      double log_det = 0.0;
      for (Index i = 0; i < k_; ++i) log_det += std::log(llt_.matrixLLT()(i, i));
      log_det *= 2.0;
      const auto observed = static_cast<double>(end - begin);
      const double quad =
          (obs_.row_sum_squares[static_cast<std::size_t>(r)] - rhs_.dot(solved_)) /
          noise_variance;
      total += -0.5 * (observed * kLog2Pi + (observed - static_cast<double>(k_)) * log_noise +
                       log_det + quad);

      if (store) {
        latent_mean_.col(r) = solved_;
        auto second = latent_second_.middleCols(r * k_, k_);
        second.noalias() = noise_variance * llt_.solve(identity_);
        second.noalias() += solved_ * solved_.transpose();
      }
    }
    return total;
  }

  // Updates loadings_t in place and returns the new noise variance.
  double m_step(Matrix& loadings_t, int iteration) {
    double explained = 0.0;
    for (Index d = 0; d < obs_.dim; ++d) {
      gram_.setZero();
      cross_.setZero();
      for (Index q = obs_.col_start[static_cast<std::size_t>(d)];
           q < obs_.col_start[static_cast<std::size_t>(d) + 1]; ++q) {
        const Index r = obs_.col_row[static_cast<std::size_t>(q)];
        gram_ += latent_second_.middleCols(r * k_, k_);
        cross_ += obs_.col_value[static_cast<std::size_t>(q)] * latent_mean_.col(r);
      }
      llt_.compute(gram_);
      if (llt_.info() != Eigen::Success) {
        throw NumericalError("latent second moment of feature " + std::to_string(d) +
                                 " is not positive definite",
                             iteration);
      }
      row_.noalias() = llt_.solve(cross_);
      loadings_t.col(d) = row_;
      explained += 2.0 * row_.dot(cross_) - row_.dot(gram_ * row_);
    }
    const double noise =
        (obs_.sum_squares - explained) / static_cast<double>(obs_.count);
    if (!std::isfinite(noise) || !loadings_t.allFinite()) {
      throw NumericalError("non-finite parameters after M-step", iteration);
    }
    return std::max(noise, kNoiseVarianceFloor);
  }

 private:
  const ObservedEntries& obs_;
  Index k_;
  Matrix latent_mean_;    // k x R
  Matrix latent_second_;  // k x (k R), one k x k block per row
  Matrix precision_;
  Vector rhs_;
  Vector solved_;
  Matrix identity_;
  Matrix gram_;
  Vector cross_;
  Vector row_;
  Eigen::LLT<Matrix> llt_;
};

void validate_options(const FitOptions& options, Index dim) {
  if (options.k < 1 || options.k >= dim) {
    throw DomainError("number of components k=" + std::to_string(options.k) +
                      " must satisfy 1 <= k < D=" + std::to_string(dim));
  }
  if (options.max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (!(options.rel_tolerance > 0.0)) throw DomainError("rel_tolerance must be positive");
  if (options.tolerance_streak < 1) throw DomainError("tolerance_streak must be at least 1");
}

void fix_signs(Matrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    Index pivot = 0;
    basis.col(j).cwiseAbs().maxCoeff(&pivot);
    if (basis(pivot, j) < 0.0) basis.col(j) *= -1.0;
  }
}

Matrix centered_covariance(const Matrix& x) {
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Matrix cov = Matrix::Zero(x.cols(), x.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                  1.0 / static_cast<double>(x.rows()));
  return cov.selfadjointView<Eigen::Lower>();
}

}  // namespace

PpcaModel fit_ppca(const MaskedMatrix& x, const FitOptions& options) {
  validate_options(options, x.cols());
  auto [centered, mean] = center_observed(x);
  const ObservedEntries obs(centered);
  const Index dim = x.cols();
  const Index k = options.k;

  // Scale of the start point: average observed per-column variance.
  const Eigen::VectorXi counts = centered.observed_per_column();
  double average_variance = 0.0;
  for (Index d = 0; d < dim; ++d) {
    average_variance += centered.values().col(d).squaredNorm() / counts(d);
  }
  average_variance /= static_cast<double>(dim);

  Rng rng(options.seed);
  const double init_sd =
      std::sqrt(average_variance / std::sqrt(static_cast<double>(k * dim)));
  Matrix loadings_t(k, dim);
  for (Index d = 0; d < dim; ++d) {
    for (Index j = 0; j < k; ++j) loadings_t(j, d) = init_sd * rng.normal();
  }
  double noise_variance = std::max(0.5 * average_variance, kNoiseVarianceFloor);

  PpcaModel model;
  model.mean = std::move(mean);
  model.skipped_rows = x.rows() - obs.rows;

  EmState state(obs, k);
  int streak = 0;
  for (int iteration = 0;; ++iteration) {
    const double ll = state.e_step(loadings_t, noise_variance, true, iteration);
    if (!std::isfinite(ll)) {
      throw NumericalError("non-finite log-likelihood", iteration);
    }
    if (!model.log_likelihood_trace.empty()) {
      const double previous = model.log_likelihood_trace.back();
      const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
      streak = (ll - previous) / scale < options.rel_tolerance ? streak + 1 : 0;
    }
    model.log_likelihood_trace.push_back(ll);
    if (streak >= options.tolerance_streak) {
      model.converged = true;
      break;
    }
    if (iteration == options.max_iterations) break;
    noise_variance = state.m_step(loadings_t, iteration + 1);
    model.n_iterations = iteration + 1;
  }

  model.loadings = loadings_t.transpose();
  model.noise_variance = noise_variance;
  model.log_likelihood = model.log_likelihood_trace.back();
  return model;
}

double observed_log_likelihood(const MaskedMatrix& x, const PpcaModel& model) {
  if (model.loadings.rows() != x.cols() || model.mean.size() != x.cols()) {
    throw DomainError("model dimension does not match data");
  }
  Matrix centered = x.values().rowwise() - model.mean.transpose();
  const ObservedEntries obs(MaskedMatrix(std::move(centered), x.mask()));
  EmState state(obs, model.loadings.cols());
  return state.e_step(model.loadings.transpose(), model.noise_variance, false, 0);
}

Directions extract_directions(const PpcaModel& model) {
  const Matrix& loadings = model.loadings;
  if (loadings.size() == 0 || !loadings.allFinite()) {
    throw DomainError("loadings must be non-empty and finite");
  }
  Eigen::JacobiSVD<Matrix> svd(loadings, Eigen::ComputeThinU);
  Directions out;
  out.singular_values = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(loadings.rows(), loadings.cols())) *
                        std::numeric_limits<double>::epsilon() *
                        out.singular_values(0);
  out.rank = 0;
  while (out.rank < out.singular_values.size() && out.singular_values(out.rank) > cutoff &&
         out.singular_values(out.rank) > 0.0) {
    ++out.rank;
  }
  out.basis = svd.matrixU().leftCols(out.rank);
  fix_signs(out.basis);
  return out;
}

Matrix top_eigvec_complete(const Matrix& x, Index k) {
  if (x.rows() < 2) throw DomainError("at least two samples are required");
  if (k < 1 || k > x.cols()) throw DomainError("k must lie in [1, D]");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered_covariance(x));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed", 0);
  // Ascending order from Eigen; take the last k in reverse.
  Matrix basis = eig.eigenvectors().rightCols(k).rowwise().reverse();
  fix_signs(basis);
  return basis;
}

Matrix top_eigvec_complete(const MaskedMatrix& x, Index k) {
  if (!x.fully_observed()) {
    throw DomainError("top_eigvec_complete requires fully observed data");
  }
  return top_eigvec_complete(x.values(), k);
}

Vector sample_spectrum(const Matrix& x) {
  if (x.rows() < 1) throw DomainError("at least one sample is required");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered_covariance(x),
                                            Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed", 0);
  return eig.eigenvalues().reverse().cwiseMax(0.0);
}

}  // namespace spiked
