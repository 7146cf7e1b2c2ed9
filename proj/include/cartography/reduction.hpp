// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_REDUCTION_HPP
#define CARTOGRAPHY_REDUCTION_HPP

#include "cartography/common.hpp"

#include <utility>
#include <variant>

namespace cartography
{
    /// Orthonormal reduction basis. Projection is basis^T (phi - mean); the
    /// Gram-Schmidt basis from matrix completion uses a zero mean.
    struct ReducedBasis
    {
        Eigen::VectorXd mean;            // M
        Eigen::MatrixXd basis;           // M x r, orthonormal columns
        Eigen::VectorXd singular_values; // full nonincreasing spectrum (empty when not SVD-derived)

        Eigen::Index input_dim() const { return basis.rows(); }
        Eigen::Index rank() const { return basis.cols(); }
    };

    struct Centered
    {
        Eigen::VectorXd mean;
        Eigen::MatrixXd matrix;
    };

    /// Subtracts the row-wise mean: Phi - (1/N) Phi 1 1^T.
    Centered center(const Eigen::MatrixXd &features);

    /// Smallest r whose leading energy fraction reaches eta.
    int select_rank(const Eigen::VectorXd &singular_values, double eta);

    struct EnergyFraction
    {
        double eta = 0.99;
    };
    struct FixedRank
    {
        int r = 1;
    };
    using RankRule = std::variant<EnergyFraction, FixedRank>;

    struct Reduction
    {
        ReducedBasis basis;
        Eigen::MatrixXd reduced; // r x N
    };

    /// Centers, takes the SVD and keeps the dominant left singular vectors.
    /// Each kept vector is oriented so that its largest-magnitude entry is positive.
    Reduction reduce(const Eigen::MatrixXd &features, const RankRule &rule);

    Eigen::VectorXd project(const ReducedBasis &basis, const Eigen::VectorXd &phi);
    Eigen::MatrixXd project_columns(const ReducedBasis &basis, const Eigen::MatrixXd &features);

    /// Singular values of a matrix padded with zeros to `rows` entries.
    Eigen::VectorXd singular_values(const Eigen::MatrixXd &m);

} // namespace cartography

#endif
