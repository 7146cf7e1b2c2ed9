// SPDX-License-Identifier: Apache-2.0
#include "cartography/reduction.hpp"

#include <Eigen/SVD>

namespace cartography
{
    Centered center(const Eigen::MatrixXd &features)
    {
        if (features.cols() < 1)
            throw InputError("centering needs at least one column");
        Centered c;
        c.mean = features.rowwise().mean();
        c.matrix = features.colwise() - c.mean;
        return c;
    }

    int select_rank(const Eigen::VectorXd &sv, double eta)
    {
        if (!(eta > 0.0 && eta <= 1.0))
            throw ConfigError("energy fraction must lie in (0, 1]");
        const double total = sv.squaredNorm();
        if (!(total > 0.0))
            throw InputError("degenerate input: all singular values are zero");
        double acc = 0.0;
        for (Eigen::Index r = 0; r < sv.size(); ++r)
        {
            acc += sv[r] * sv[r];
            if (acc / total >= eta)
                return static_cast<int>(r + 1);
        }
        // Rounding can leave the full sum a hair below total when eta == 1.
        return static_cast<int>(sv.size());
    }

    Eigen::VectorXd singular_values(const Eigen::MatrixXd &m)
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(m.rows());
        out.head(svd.singularValues().size()) = svd.singularValues();
        return out;
    }

    Reduction reduce(const Eigen::MatrixXd &features, const RankRule &rule)
    {
        const Centered c = center(features);
        const Eigen::Index M = features.rows();

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.matrix, Eigen::ComputeThinU);
        Eigen::VectorXd sv = Eigen::VectorXd::Zero(M);
        sv.head(svd.singularValues().size()) = svd.singularValues();

        int r = 0;
        if (const auto *fixed = std::get_if<FixedRank>(&rule))
        {
            r = fixed->r;
            if (r < 1 || r > svd.matrixU().cols())
                throw ConfigError("fixed rank must lie in [1, min(M, N)]");
        }
        else
        {
            r = select_rank(sv, std::get<EnergyFraction>(rule).eta);
            r = std::min<int>(r, static_cast<int>(svd.matrixU().cols()));
        }

        Reduction out;
        out.basis.mean = c.mean;
        out.basis.singular_values = sv;
        out.basis.basis = svd.matrixU().leftCols(r);
        for (int j = 0; j < r; ++j)
        {
            Eigen::Index imax = 0;
            out.basis.basis.col(j).cwiseAbs().maxCoeff(&imax);
            if (out.basis.basis(imax, j) < 0.0)
                out.basis.basis.col(j) *= -1.0;
        }
        out.reduced = out.basis.basis.transpose() * c.matrix;
        return out;
    }

    Eigen::VectorXd project(const ReducedBasis &basis, const Eigen::VectorXd &phi)
    {
        if (phi.size() != basis.input_dim())
            throw InputError("feature dimension does not match the reduction basis");
        if (!phi.allFinite())
            throw InputError("projection needs a complete feature vector");
        return basis.basis.transpose() * (phi - basis.mean);
    }

    Eigen::MatrixXd project_columns(const ReducedBasis &basis, const Eigen::MatrixXd &features)
    {
        if (features.rows() != basis.input_dim())
            throw InputError("feature dimension does not match the reduction basis");
        return basis.basis.transpose() * (features.colwise() - basis.mean);
    }

} // namespace cartography
