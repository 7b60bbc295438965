#include "mg/quadrature.hpp"

#include <Eigen/Dense>
#include <map>
#include <mutex>

#include "mg/errors.hpp"

namespace mg {

namespace {

/// Golub-Welsch for the physicists' Hermite weight e^{-t^2}: the Jacobi
/// matrix is zero on the diagonal with off-diagonal sqrt(k/2); eigenvalues
/// are the nodes and sqrt(pi) * (first eigenvector row)^2 the weights.
QuadratureGrid build_hermite(int order) {
    if (order < 1) throw Error("quadrature: order must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(order > 1 ? order - 1 : 0);
    for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(0.5 * k);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw Error("quadrature: eigen decomposition failed");

    QuadratureGrid q;
    q.order = order;
    q.nodes.resize(order);
    q.weights.resize(order);
    const double sqrt_pi = 1.7724538509055160273;
    for (int k = 0; k < order; ++k) {
        q.nodes[k] = es.eigenvalues()[k];  // ascending by Eigen's convention
        double v = es.eigenvectors()(0, k);
        q.weights[k] = sqrt_pi * v * v;
    }

    // Symmetrize exactly: mirror the lower half onto the upper half so that
    // node[n-1-k] == -node[k] and weight[n-1-k] == weight[k] bitwise.
    for (int k = 0; k < order / 2; ++k) {
        int j = order - 1 - k;
        double node = 0.5 * (q.nodes[k] - q.nodes[j]);
        double w = 0.5 * (q.weights[k] + q.weights[j]);
        q.nodes[k] = node;
        q.nodes[j] = -node;
        q.weights[k] = w;
        q.weights[j] = w;
    }
    if (order % 2) q.nodes[order / 2] = 0.0;
    return q;
}

}  // namespace

const QuadratureGrid& QuadratureGrid::hermite(int order) {
    static std::mutex mu;
    static std::map<int, QuadratureGrid> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_hermite(order)).first;
    return it->second;
}

}  // namespace mg
