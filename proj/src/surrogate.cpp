#include "cobrapp/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cobrapp {

namespace {

int tail_degree_for(int n_samples, int dim) {
  if (n_samples >= dim + 2) return 1;
  if (n_samples >= 2) return 0;
  return -1;
}

int tail_size(int tail_degree, int dim) {
  if (tail_degree < 0) return 0;
  return tail_degree == 0 ? 1 : dim + 1;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (points.row(i) - points.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

Eigen::MatrixXd polynomial_basis(const Eigen::MatrixXd& points, int tail_degree) {
  const int n = static_cast<int>(points.rows());
  const int dim = static_cast<int>(points.cols());
  Eigen::MatrixXd basis(n, tail_size(tail_degree, dim));
  if (tail_degree >= 0) basis.col(0).setOnes();
  if (tail_degree >= 1) basis.rightCols(dim) = points;
  return basis;
}

}  // namespace

const std::array<KernelSpec, kPoolSize>& canonical_pool() {
  static const std::array<KernelSpec, kPoolSize> pool = [] {
    std::array<KernelSpec, kPoolSize> entries;
    entries[0] = {KernelKind::Cubic, 1.0};
    const double widths[] = {0.01, 0.2, 0.5, 1.0, 5.0};
    for (int i = 0; i < 5; ++i) entries[1 + i] = {KernelKind::Multiquadric, widths[i]};
    for (int i = 0; i < 5; ++i) entries[6 + i] = {KernelKind::Gaussian, widths[i]};
    return entries;
  }();
  return pool;
}

double kernel_value(const KernelSpec& kernel, double r) {
  if (r < 0.0) throw std::invalid_argument("kernel_value: r must be >= 0");
  switch (kernel.kind) {
    case KernelKind::Cubic:
      return r * r * r;
    case KernelKind::Multiquadric: {
      const double scaled = r / kernel.width;
      return std::sqrt(1.0 + scaled * scaled);
    }
    case KernelKind::Gaussian: {
      const double scaled = r / kernel.width;
      return std::exp(-scaled * scaled);
    }
  }
  throw std::invalid_argument("unknown kernel kind");
}

double compute_sigma(const Eigen::MatrixXd& centers) {
  const int n = static_cast<int>(centers.rows());
  if (n < 1) throw std::invalid_argument("compute_sigma: need at least one center");
  if (n == 1) return 1.0;
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      distances.push_back((centers.row(i) - centers.row(j)).norm());
  const std::size_t mid = distances.size() / 2;
  std::nth_element(distances.begin(), distances.begin() + mid, distances.end());
  double median = distances[mid];
  if (distances.size() % 2 == 0) {
    const double below = *std::max_element(distances.begin(), distances.begin() + mid);
    median = 0.5 * (below + median);
  }
  return std::max(median, 1e-12);
}

double RbfModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != centers.cols())
    throw std::invalid_argument("predict: dimension mismatch");
  double value = 0.0;
  for (int k = 0; k < centers.rows(); ++k) {
    const double r = (x.transpose() - centers.row(k)).norm() / sigma;
    value += rbf_weights[k] * kernel_value(kernel, r);
  }
  if (tail_degree >= 0) value += tail_weights[0];
  if (tail_degree >= 1) value += tail_weights.tail(x.size()).dot(x);
  return value;
}

std::vector<RbfModel> fit_rbf_many(const KernelSpec& kernel, const Eigen::MatrixXd& samples,
                                   const Eigen::MatrixXd& values) {
  const int n = static_cast<int>(samples.rows());
  const int dim = static_cast<int>(samples.cols());
  if (n < 1) throw std::invalid_argument("fit_rbf: need at least one sample");
  if (values.rows() != n) throw std::invalid_argument("fit_rbf: samples/values size mismatch");
  if (!samples.allFinite() || !values.allFinite())
    throw std::invalid_argument("fit_rbf: non-finite input");

  const double sigma = compute_sigma(samples);

  Eigen::MatrixXd phi = pairwise_distances(samples);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) phi(i, j) = kernel_value(kernel, phi(i, j) / sigma);

  const double ridge_start = 1e-10 * phi.trace() / n;
  const double ridge_fallback = 1e-12 * (1.0 + phi.cwiseAbs().mean());
  double condition = 0.0;

  // The polynomial tail block can be singular on near-coincident samples
  // (e.g. a tight cluster makes the linear tail unidentifiable); degrade the
  // tail before giving up on the kernel.
  for (int degree = tail_degree_for(n, dim); degree >= -1; --degree) {
  const int t = tail_size(degree, dim);
  const Eigen::MatrixXd basis = polynomial_basis(samples, degree);
  // Ridge schedule: scale-relative start, x100 escalation up to 3 times.
  double ridge = ridge_start;

  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(n + t, n + t);
  base.topLeftCorner(n, n) = phi;
  if (t > 0) {
    base.topRightCorner(n, t) = basis;
    base.bottomLeftCorner(t, n) = basis.transpose();
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + t, values.cols());
  rhs.topRows(n) = values;
  const double rhs_scale = 1.0 + rhs.cwiseAbs().maxCoeff();

  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd system = base;
    system.topLeftCorner(n, n) += ridge * Eigen::MatrixXd::Identity(n, n);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    const double rcond = lu.rcond();
    condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd direct = lu.solve(rhs);
    Eigen::MatrixXd solution = direct;

    // The ridge perturbs the interpolation conditions by ridge * lambda, so
    // refine against the unridged system while it keeps improving.
    if (solution.allFinite()) {
      double best_residual = (base * solution - rhs).cwiseAbs().maxCoeff();
      Eigen::MatrixXd refined = solution;
      for (int iter = 0; iter < 3 && best_residual > 1e-12 * rhs_scale; ++iter) {
        const Eigen::MatrixXd correction = lu.solve(rhs - base * refined);
        if (!correction.allFinite()) break;
        refined += correction;
        const double candidate = (base * refined - rhs).cwiseAbs().maxCoeff();
        if (!refined.allFinite() || candidate >= best_residual) break;
        best_residual = candidate;
        solution = refined;
      }
    }

    const double residual = solution.allFinite()
                                ? (base * solution - rhs).cwiseAbs().maxCoeff()
                                : std::numeric_limits<double>::infinity();
    const bool accurate = residual <= 1e-7 * rhs_scale;
    // when exact interpolation is numerically out of reach, keep the
    // ridge-stabilized solution and report the system as effectively singular
    const bool degraded =
        !accurate &&
        direct.allFinite() &&
        (system * direct - rhs).cwiseAbs().maxCoeff() <= 1e-7 * rhs_scale;
    if (degraded) {
      condition = std::numeric_limits<double>::infinity();
      solution = direct;
    }
    if (solution.allFinite() && (accurate || degraded)) {
      std::vector<RbfModel> models;
      models.reserve(values.cols());
      for (int c = 0; c < values.cols(); ++c) {
        RbfModel model;
        model.kernel = kernel;
        model.centers = samples;
        model.sigma = sigma;
        model.rbf_weights = solution.col(c).head(n);
        model.tail_degree = degree;
        model.tail_weights = solution.col(c).tail(t);
        model.ridge = ridge;
        model.condition_estimate = condition;
        models.push_back(std::move(model));
      }
      return models;
    }
    ridge = ridge > 0.0 ? ridge * 100.0 : ridge_fallback;
  }
  }
  throw FitError("fit_rbf: solve failed after ridge escalation", condition);
}

RbfModel fit_rbf(const KernelSpec& kernel, const Eigen::MatrixXd& samples,
                 const Eigen::VectorXd& values) {
  return std::move(fit_rbf_many(kernel, samples, values)[0]);
}

SurrogatePool fit_pool(const Dataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("fit_pool: dataset is empty");
  const int n = static_cast<int>(dataset.size());
  const int dim = static_cast<int>(dataset.front().x.size());
  const int m = static_cast<int>(dataset.front().g.size());

  Eigen::MatrixXd samples(n, dim);
  Eigen::MatrixXd values(n, 1 + m);
  for (int j = 0; j < n; ++j) {
    samples.row(j) = dataset[j].x.transpose();
    values(j, 0) = dataset[j].f;
    values.row(j).tail(m) = dataset[j].g.transpose();
  }

  SurrogatePool pool;
  pool.sets.reserve(kPoolSize);
  for (int i = 0; i < kPoolSize; ++i) {
    const KernelSpec& kernel = canonical_pool()[i];
    std::vector<RbfModel> models;
    try {
      models = fit_rbf_many(kernel, samples, values);
    } catch (const FitError& error) {
      throw FitError("pool kernel " + std::to_string(i) + ": " + error.what(),
                     error.condition_estimate);
    }
    SurrogateSet set;
    set.kernel = kernel;
    set.objective = std::move(models[0]);
    set.constraints.assign(std::make_move_iterator(models.begin() + 1),
                           std::make_move_iterator(models.end()));
    pool.sets.push_back(std::move(set));
  }
  return pool;
}

double loo_error(const KernelSpec& kernel, const Dataset& dataset, int window) {
  const int n = static_cast<int>(dataset.size());
  if (n < 2) throw std::invalid_argument("loo_error: need at least 2 points");
  const int dim = static_cast<int>(dataset.front().x.size());

  double f_min = dataset.front().f;
  double f_max = f_min;
  for (const auto& eval : dataset) {
    f_min = std::min(f_min, eval.f);
    f_max = std::max(f_max, eval.f);
  }
  const double range = f_max - f_min;
  if (range <= 0.0) return 0.0;

  const int count = std::min(window, n);
  Eigen::MatrixXd reduced_x(n - 1, dim);
  Eigen::VectorXd reduced_y(n - 1);
  double total = 0.0;
  for (int j = n - count; j < n; ++j) {
    int row = 0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      reduced_x.row(row) = dataset[i].x.transpose();
      reduced_y[row] = dataset[i].f;
      ++row;
    }
    double error = range;
    try {
      const RbfModel model = fit_rbf(kernel, reduced_x, reduced_y);
      error = std::abs(model.predict(dataset[j].x) - dataset[j].f);
    } catch (const FitError&) {
      // unfit leave-one-out system counts as a full-range miss
    }
    total += error;
  }
  return std::clamp(total / count / range, 0.0, 1.0);
}

}  // namespace cobrapp
