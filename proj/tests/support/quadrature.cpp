#include "support/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace convexlab::testing {

GaussHermite::GaussHermite(int node_count) {
  if (node_count < 1) throw std::invalid_argument("GaussHermite: need >= 1 node");
  // Jacobi matrix of the monic probabilists' Hermite polynomials:
  // He_{k+1} = x He_k - k He_{k-1}, so diagonal 0 and off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(node_count, node_count);
  for (int k = 1; k < node_count; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(jacobi);
  nodes = eigensolver.eigenvalues();
  weights.resize(node_count);
  for (int i = 0; i < node_count; ++i) {
    const double first = eigensolver.eigenvectors()(0, i);
    weights[i] = first * first;  // mu_0 = 1 for the normalized Gaussian weight
  }
}

double GaussHermite::integrate(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (int i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
  return acc;
}

double GaussHermite::integrate2d(const std::function<double(double, double)>& f) const {
  double acc = 0.0;
  for (int i = 0; i < nodes.size(); ++i) {
    for (int j = 0; j < nodes.size(); ++j) {
      acc += weights[i] * weights[j] * f(nodes[i], nodes[j]);
    }
  }
  return acc;
}

PanelGaussNormal::PanelGaussNormal(int panels, int nodes_per_panel, double z_max) {
  if (panels < 2 || panels % 2 != 0) throw std::invalid_argument("PanelGaussNormal: even panels");
  // Gauss-Legendre nodes/weights on [-1, 1] via Golub-Welsch.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(nodes_per_panel, nodes_per_panel);
  for (int k = 1; k < nodes_per_panel; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(jacobi);
  const Eigen::VectorXd ref_nodes = eigensolver.eigenvalues();
  Eigen::VectorXd ref_weights(nodes_per_panel);
  for (int i = 0; i < nodes_per_panel; ++i) {
    const double first = eigensolver.eigenvectors()(0, i);
    ref_weights[i] = 2.0 * first * first;
  }

  const int total = panels * nodes_per_panel;
  nodes.resize(total);
  weights.resize(total);
  const double panel_width = 2.0 * z_max / panels;  // even panel count pins an edge at 0
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
  int out = 0;
  for (int p = 0; p < panels; ++p) {
    const double lo = -z_max + p * panel_width;
    for (int i = 0; i < nodes_per_panel; ++i) {
      const double z = lo + 0.5 * panel_width * (ref_nodes[i] + 1.0);
      nodes[out] = z;
      weights[out] = 0.5 * panel_width * ref_weights[i] * inv_sqrt_2pi * std::exp(-0.5 * z * z);
      ++out;
    }
  }
}

double PanelGaussNormal::integrate(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (int i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
  return acc;
}

}  // namespace convexlab::testing
