#pragma once

// Grouped multivariate regression data and per-group least-squares fits.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sct/error.hpp"

namespace sct {

struct Group {
  std::string label;
  Eigen::MatrixXd X;  // n x (p+1), first column all ones
  Eigen::MatrixXd Y;  // n x m
};

struct GroupedDataset {
  std::vector<Group> groups;
  int p = 0;  // covariates
  int m = 0;  // responses

  int k() const { return static_cast<int>(groups.size()); }
};

struct FittedModels {
  std::vector<std::string> labels;
  std::vector<int> n;
  std::vector<Eigen::MatrixXd> bhat;      // (p+1) x m each
  std::vector<Eigen::MatrixXd> gram;      // X'X
  std::vector<Eigen::MatrixXd> gram_inv;  // (X'X)^{-1}
  Eigen::MatrixXd pooled_scatter;         // nu * Omega-hat, m x m
  int nu = 0;
  int p = 0;
  int m = 0;
  int k = 0;
  /// Set when pooled_scatter is not numerically positive definite. Anything
  /// that needs its inverse refuses such a fit with DegenerateScatter.
  bool degenerate_scatter = false;

  /// Delta_ij = (X_i'X_i)^{-1} + (X_j'X_j)^{-1}, 0-based indices.
  Eigen::MatrixXd delta(int i, int j) const { return gram_inv[i] + gram_inv[j]; }
};

/// Relative singular-value floor below which a design is rank deficient.
inline constexpr double kRankTolerance = 1e-10;

inline GroupedDataset validate_dataset(GroupedDataset data) {
  if (data.groups.empty()) throw Error(Errc::EmptyGroup, "dataset has no groups");
  if (data.p < 0 || data.m < 1) throw Error(Errc::ShapeMismatch, "need p >= 0 and m >= 1");
  const Eigen::Index cols = data.p + 1;
  for (const Group& g : data.groups) {
    const std::string who = "group '" + g.label + "'";
    if (g.X.cols() != cols)
      throw Error(Errc::ShapeMismatch, who + ": design has " + std::to_string(g.X.cols()) + " columns, expected " +
                                           std::to_string(cols));
    if (g.Y.cols() != data.m)
      throw Error(Errc::ShapeMismatch, who + ": response has " + std::to_string(g.Y.cols()) + " columns, expected " +
                                           std::to_string(data.m));
    if (g.X.rows() != g.Y.rows()) throw Error(Errc::ShapeMismatch, who + ": X and Y row counts differ");
    if ((g.X.col(0).array() != 1.0).any()) throw Error(Errc::ShapeMismatch, who + ": first design column must be ones");
    if (g.X.rows() < data.p + 2)
      throw Error(Errc::InsufficientObservations,
                  who + ": n = " + std::to_string(g.X.rows()) + " < p + 2 = " + std::to_string(data.p + 2));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.X);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > kRankTolerance * sv(0)))
      throw Error(Errc::RankDeficientDesign, who + ": design matrix is not of full column rank");
  }
  return data;
}

inline FittedModels fit_models(const GroupedDataset& data) {
  FittedModels fit;
  fit.p = data.p;
  fit.m = data.m;
  fit.k = data.k();
  fit.pooled_scatter = Eigen::MatrixXd::Zero(data.m, data.m);
  double response_scale = 0.0;
  for (const Group& g : data.groups) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g.X);
    if (qr.rank() < g.X.cols()) throw Error(Errc::SingularGram, "group '" + g.label + "': numerically singular design");
    Eigen::MatrixXd b = qr.solve(g.Y);
    const Eigen::MatrixXd residual = g.Y - g.X * b;
    fit.pooled_scatter.noalias() += residual.transpose() * residual;

    Eigen::MatrixXd gram = g.X.transpose() * g.X;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw Error(Errc::SingularGram, "group '" + g.label + "': X'X not positive definite");
    Eigen::MatrixXd gram_inv = llt.solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
    gram_inv = 0.5 * (gram_inv + gram_inv.transpose()).eval();

    fit.labels.push_back(g.label);
    fit.n.push_back(static_cast<int>(g.X.rows()));
    fit.bhat.push_back(std::move(b));
    fit.gram.push_back(std::move(gram));
    fit.gram_inv.push_back(std::move(gram_inv));
    fit.nu += static_cast<int>(g.X.rows()) - data.p - 1;
    response_scale += g.Y.squaredNorm();
  }
  fit.pooled_scatter = 0.5 * (fit.pooled_scatter + fit.pooled_scatter.transpose()).eval();

  // Residual cross-products at round-off level (~1e-32 relative) are treated
  // as zero: anything below 1e-24 of the response energy is degenerate.
  if (fit.nu < fit.m) {
    fit.degenerate_scatter = true;
  } else {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.pooled_scatter, Eigen::EigenvaluesOnly);
    fit.degenerate_scatter = !(eig.eigenvalues()(0) > 1e-24 * response_scale);
  }
  return fit;
}

inline void require_nondegenerate(const FittedModels& fit) {
  if (fit.degenerate_scatter)
    throw Error(Errc::DegenerateScatter, "pooled residual scatter is not positive definite (nu = " +
                                             std::to_string(fit.nu) + ", m = " + std::to_string(fit.m) + ")");
}

}  // namespace sct
