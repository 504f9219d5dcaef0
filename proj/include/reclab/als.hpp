#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "reclab/feedback.hpp"
#include "reclab/parallel.hpp"
#include "reclab/rng.hpp"

namespace reclab {

// Implicit-feedback ALS. Views become binary preferences p = [r > 0] with
// confidence c = 1 + alpha * r; the objective is
//   sum_{u,i} c_ui (p_ui - x_u . y_i)^2 + lambda (sum ||x_u||^2 + sum ||y_i||^2)
// over ALL user-item pairs, zeros included. Each half-iteration solves the
// per-row ridge systems exactly, so the objective never increases.
struct AlsConfig {
  double alpha = 80.0;
  int factors = 32;
  double regularization = 0.01;
  int iterations = 15;
  std::uint64_t seed = 42;
};

struct FactorModel {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  Eigen::MatrixXd user_factors;  // users x factors
  Eigen::MatrixXd item_factors;  // items x factors
  AlsConfig config;
  std::vector<double> loss_history;  // one entry per completed iteration
  double final_loss = 0.0;

  std::optional<int> user_row(const std::string& user) const {
    auto it = user_index.find(user);
    if (it == user_index.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> item_row(const std::string& item) const {
    auto it = item_index.find(item);
    if (it == item_index.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

using SparseCells = std::vector<std::vector<std::pair<int, std::int64_t>>>;

inline SparseCells transpose_rows(const FeedbackMatrix& m) {
  SparseCells cols(m.num_items());
  for (int u = 0; u < m.num_users(); ++u)
    for (const auto& [i, c] : m.rows[u]) cols[i].emplace_back(u, c);
  return cols;
}

// Solves rows of X against fixed other-side factors. For row u with
// observed cells (i, r): (Y^T Y + alpha * sum r y y^T + lambda I) x = sum (1 + alpha r) y.
inline void solve_side(const SparseCells& cells, const Eigen::MatrixXd& fixed,
                       double alpha, double lambda, Eigen::MatrixXd& out) {
  const int k = static_cast<int>(fixed.cols());
  const Eigen::MatrixXd gram = fixed.transpose() * fixed;
  parallel_for(cells.size(), [&](std::size_t row) {
    Eigen::MatrixXd m = gram;
    m.diagonal().array() += lambda;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (const auto& [other, count] : cells[row]) {
      const auto y = fixed.row(other);
      m.noalias() += (alpha * double(count)) * (y.transpose() * y);
      b.noalias() += (1.0 + alpha * double(count)) * y.transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "als: singular normal-equation system; set regularization > 0");
    out.row(row) = llt.solve(b).transpose();
  });
}

}  // namespace detail

// Exposed for tests: one exact half-step against fixed item factors.
inline Eigen::MatrixXd als_solve_users(const FeedbackMatrix& matrix,
                                       const Eigen::MatrixXd& item_factors,
                                       const AlsConfig& config) {
  Eigen::MatrixXd users(matrix.num_users(), config.factors);
  detail::solve_side(matrix.rows, item_factors, config.alpha, config.regularization, users);
  return users;
}

inline Eigen::MatrixXd als_solve_items(const FeedbackMatrix& matrix,
                                       const Eigen::MatrixXd& user_factors,
                                       const AlsConfig& config) {
  Eigen::MatrixXd items(matrix.num_items(), config.factors);
  detail::solve_side(detail::transpose_rows(matrix), user_factors, config.alpha,
                     config.regularization, items);
  return items;
}

// The exact objective, computed naively over all pairs. Per-user partials
// are accumulated into a vector and summed sequentially so the value does
// not depend on thread scheduling.
inline double weighted_loss_factors(const Eigen::MatrixXd& user_factors,
                                    const Eigen::MatrixXd& item_factors,
                                    const FeedbackMatrix& matrix, const AlsConfig& config) {
  std::vector<double> partial(matrix.num_users(), 0.0);
  parallel_for(matrix.num_users(), [&](std::size_t u) {
    const Eigen::VectorXd scores = item_factors * user_factors.row(u).transpose();
    double sum = scores.squaredNorm();  // c=1, p=0 baseline for every item
    for (const auto& [i, r] : matrix.rows[u]) {
      const double s = scores(i);
      const double c = 1.0 + config.alpha * double(r);
      sum += c * (1.0 - s) * (1.0 - s) - s * s;
    }
    partial[u] = sum;
  });
  double loss = 0.0;
  for (double p : partial) loss += p;
  loss += config.regularization * (user_factors.squaredNorm() + item_factors.squaredNorm());
  return loss;
}

inline double weighted_loss(const FactorModel& model, const FeedbackMatrix& matrix,
                            const AlsConfig& config) {
  if (model.user_factors.rows() != matrix.num_users() ||
      model.item_factors.rows() != matrix.num_items())
    throw std::invalid_argument("weighted_loss: model/matrix shape mismatch");
  return weighted_loss_factors(model.user_factors, model.item_factors, matrix, config);
}

inline FactorModel train_als(const FeedbackMatrix& matrix, const AlsConfig& config = {}) {
  if (matrix.empty()) throw std::invalid_argument("train_als: empty matrix");
  if (config.factors < 1 || config.iterations < 1 || config.alpha < 0.0 ||
      config.regularization < 0.0)
    throw std::invalid_argument("train_als: invalid config");

  FactorModel model;
  model.config = config;
  model.user_ids = matrix.user_ids;
  model.item_ids = matrix.item_ids;
  model.user_index = matrix.user_index;
  model.item_index = matrix.item_index;

  // Uniform [-0.01, 0.01] init from the seed; user rows first, then item
  // rows, row-major, so the draw order is part of the contract.
  Rng rng(config.seed);
  model.user_factors.resize(matrix.num_users(), config.factors);
  model.item_factors.resize(matrix.num_items(), config.factors);
  for (int u = 0; u < matrix.num_users(); ++u)
    for (int f = 0; f < config.factors; ++f) model.user_factors(u, f) = rng.uniform(-0.01, 0.01);
  for (int i = 0; i < matrix.num_items(); ++i)
    for (int f = 0; f < config.factors; ++f) model.item_factors(i, f) = rng.uniform(-0.01, 0.01);

  const detail::SparseCells cols = detail::transpose_rows(matrix);
  model.loss_history.reserve(config.iterations);
  for (int it = 0; it < config.iterations; ++it) {
    detail::solve_side(matrix.rows, model.item_factors, config.alpha, config.regularization,
                       model.user_factors);
    detail::solve_side(cols, model.user_factors, config.alpha, config.regularization,
                       model.item_factors);
    model.loss_history.push_back(
        weighted_loss_factors(model.user_factors, model.item_factors, matrix, config));
  }
  model.final_loss = model.loss_history.back();
  return model;
}

// Scores x_u . y_i for every item. The caller resolves ids to rows; an
// unknown user is a cold signal surfaced by the lookup, not by this call.
inline std::vector<double> predict_scores(const FactorModel& model, int user_row) {
  if (user_row < 0 || user_row >= model.user_factors.rows())
    throw std::out_of_range("predict_scores: user row out of range");
  const Eigen::VectorXd scores = model.item_factors * model.user_factors.row(user_row).transpose();
  return {scores.data(), scores.data() + scores.size()};
}

// Text export: a header line, then id-tagged factor rows.
inline void save_factor_model(const FactorModel& m, std::ostream& out) {
  out << "reclab-als 1 " << m.user_ids.size() << ' ' << m.item_ids.size() << ' '
      << m.config.factors << ' ' << m.config.alpha << ' ' << m.config.regularization << ' '
      << m.config.seed << '\n';
  out.precision(17);
  for (std::size_t u = 0; u < m.user_ids.size(); ++u) {
    out << "user " << m.user_ids[u];
    for (int f = 0; f < m.config.factors; ++f) out << ' ' << m.user_factors(u, f);
    out << '\n';
  }
  for (std::size_t i = 0; i < m.item_ids.size(); ++i) {
    out << "item " << m.item_ids[i];
    for (int f = 0; f < m.config.factors; ++f) out << ' ' << m.item_factors(i, f);
    out << '\n';
  }
}

inline void save_factor_model_file(const FactorModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model: " + path);
  save_factor_model(m, out);
}

inline FactorModel load_factor_model(std::istream& in) {
  FactorModel m;
  std::string magic;
  int version = 0;
  std::size_t users = 0, items = 0;
  in >> magic >> version >> users >> items >> m.config.factors >> m.config.alpha >>
      m.config.regularization >> m.config.seed;
  if (!in || magic != "reclab-als" || version != 1)
    throw std::runtime_error("factor model: unrecognized header");
  m.user_factors.resize(users, m.config.factors);
  m.item_factors.resize(items, m.config.factors);
  for (std::size_t n = 0; n < users + items; ++n) {
    std::string kind, id;
    in >> kind >> id;
    if (!in || (kind != "user" && kind != "item"))
      throw std::runtime_error("factor model: malformed row " + std::to_string(n));
    Eigen::MatrixXd& target = kind == "user" ? m.user_factors : m.item_factors;
    auto& ids = kind == "user" ? m.user_ids : m.item_ids;
    auto& index = kind == "user" ? m.user_index : m.item_index;
    const std::size_t row = ids.size();
    if (row >= static_cast<std::size_t>(target.rows()))
      throw std::runtime_error("factor model: too many " + kind + " rows");
    for (int f = 0; f < m.config.factors; ++f)
      if (!(in >> target(row, f))) throw std::runtime_error("factor model: truncated row");
    index.emplace(id, static_cast<int>(row));
    ids.push_back(id);
  }
  if (m.user_ids.size() != users || m.item_ids.size() != items)
    throw std::runtime_error("factor model: row counts disagree with header");
  return m;
}

inline FactorModel load_factor_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model: " + path);
  return load_factor_model(in);
}

}  // namespace reclab
