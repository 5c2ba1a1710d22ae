#ifndef COGBIAS_ATTRIBUTION_PCA_HPP
#define COGBIAS_ATTRIBUTION_PCA_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../types.hpp"

namespace cogbias {

/**
 * Two-dimensional projection of bias vectors.
 */
struct PcaProjection {
    std::vector<std::string> run_ids;
    std::vector<std::array<double, 2>> coordinates;
    std::array<double, 2> explained{0, 0};
    std::vector<double> explained_all; ///< every component's ratio, non-increasing
    std::vector<std::string> features;
    std::vector<std::array<double, 2>> loadings; ///< per feature: PC1, PC2

    bool operator==(const PcaProjection&) const = default;
};

/**
 * PCA of mean-centred vectors (no variance scaling) from the eigendecomposition of the sample
 * covariance. When there are more features than runs the N x N Gram matrix is decomposed
 * instead; it has the same non-zero spectrum. Each component's sign is fixed so its
 * largest-magnitude loading is positive. A missing second direction gets ratio 0.
 */
inline PcaProjection pca_project(const BiasVectorSet& set) {
    const auto n = static_cast<Eigen::Index>(set.size());
    const auto m = static_cast<Eigen::Index>(set.dimension());
    if (n < 2) {
        throw Error("PCA needs at least 2 runs");
    }
    if (m < 1) {
        throw Error("PCA needs at least 1 feature");
    }

    Eigen::MatrixXd x(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index f = 0; f < m; ++f) {
            x(i, f) = set.vectors[static_cast<std::size_t>(i)].scores[static_cast<std::size_t>(f)];
        }
    }
    x.rowwise() -= x.colwise().mean();
    const double denom = static_cast<double>(n - 1);

    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd components(m, 2);
    components.setZero();
    if (m <= n) {
        Eigen::MatrixXd cov = (x.transpose() * x) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        eigenvalues = solver.eigenvalues().reverse();
        Eigen::MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
        for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, m); ++c) {
            components.col(c) = vecs.col(c);
        }
    } else {
        Eigen::MatrixXd gram = (x * x.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        eigenvalues = solver.eigenvalues().reverse();
        Eigen::MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
        for (Eigen::Index c = 0; c < 2; ++c) {
            double lambda = eigenvalues(c);
            if (lambda > 0) {
                Eigen::VectorXd v = x.transpose() * vecs.col(c);
                double norm = v.norm();
                if (norm > 0) {
                    components.col(c) = v / norm;
                }
            }
        }
    }

    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        eigenvalues(i) = std::max(0.0, eigenvalues(i));
    }
    const double total = eigenvalues.sum();
    // Numerical noise below this fraction of the total variance counts as no direction at all.
    const double floor = total * 1e-12;

    PcaProjection out;
    out.features = set.features;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        double ratio = total > 0 && eigenvalues(i) > floor ? eigenvalues(i) / total : 0.0;
        out.explained_all.push_back(ratio);
    }
    for (int c = 0; c < 2; ++c) {
        if (c < static_cast<int>(out.explained_all.size())) {
            out.explained[c] = out.explained_all[static_cast<std::size_t>(c)];
        }
        if (out.explained[c] == 0) {
            components.col(c).setZero();
            continue;
        }
        Eigen::Index argmax = 0;
        for (Eigen::Index f = 1; f < m; ++f) {
            if (std::abs(components(f, c)) > std::abs(components(argmax, c))) {
                argmax = f;
            }
        }
        if (components(argmax, c) < 0) {
            components.col(c) *= -1.0;
        }
    }

    Eigen::MatrixXd coords = x * components;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.run_ids.push_back(set.vectors[static_cast<std::size_t>(i)].run_id);
        out.coordinates.push_back({coords(i, 0), coords(i, 1)});
    }
    for (Eigen::Index f = 0; f < m; ++f) {
        out.loadings.push_back({components(f, 0), components(f, 1)});
    }
    return out;
}

}

#endif
