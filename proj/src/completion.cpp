// SPDX-License-Identifier: Apache-2.0
#include "cartography/completion.hpp"

#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace cartography
{
    IncompleteFeatureMatrix IncompleteFeatureMatrix::from_sentinels(const Eigen::MatrixXd &values)
    {
        IncompleteFeatureMatrix out;
        out.values = values;
        out.mask = (values.array() == values.array()).matrix();
        return out;
    }

    Eigen::MatrixXd truncate_rank(const Eigen::MatrixXd &m, int r)
    {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::Index k = std::min<Eigen::Index>(r, svd.singularValues().size());
        return svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
               svd.matrixV().leftCols(k).transpose();
    }

    CompletionResult svp_complete(const IncompleteFeatureMatrix &incomplete, const CompletionConfig &config)
    {
        const Eigen::Index M = incomplete.values.rows();
        const Eigen::Index N = incomplete.values.cols();
        if (incomplete.mask.rows() != M || incomplete.mask.cols() != N)
            throw InputError("mask dimensions differ from the feature matrix");
        if (config.target_rank < 1 || config.target_rank > std::min(M, N))
            throw ConfigError("target rank must lie in [1, min(M, N)]");
        if (!(config.step_size > 0.0) || !(config.tol > 0.0) || config.max_iters < 1)
            throw ConfigError("completion needs positive step size, tolerance and iteration budget");

        const Eigen::MatrixXd observed = incomplete.mask.cast<double>();
        // Masked-out values are replaced by zeros so they are never read.
        const Eigen::MatrixXd target = incomplete.mask.select(incomplete.values, 0.0);
        if (!target.allFinite())
            throw InputError("observed feature entries must be finite");

        const double scale = std::max(target.norm(), 1e-300);
        CompletionResult out;
        out.completed = Eigen::MatrixXd::Zero(M, N);
        out.residual = target.norm();

        double step = config.step_size;
        double prev = out.residual;
        Eigen::MatrixXd best = out.completed;
        double best_residual = out.residual;
        int growing = 0;

        Eigen::MatrixXd x = out.completed;
        for (int it = 1; it <= config.max_iters; ++it)
        {
            const Eigen::MatrixXd grad = observed.cwiseProduct(x) - target;
            Eigen::MatrixXd next = truncate_rank(x - step * grad, config.target_rank);
            const double res = (observed.cwiseProduct(next) - target).norm();
            out.iterations = it;
            if (config.record_residuals)
                out.residual_log.push_back(res);
            if (!std::isfinite(res))
                throw NumericalError("singular value projection produced non-finite iterates; use a smaller step");

            growing = res > prev ? growing + 1 : 0;
            if (res < best_residual)
            {
                best_residual = res;
                best = next;
            }
            if (growing >= 10)
            {
                step *= 0.5;
                if (step < 1e-6)
                    throw NumericalError("singular value projection diverged; use a smaller step size");
                x = best;
                prev = best_residual;
                growing = 0;
                continue;
            }

            const bool converged = res / scale < config.tol || std::abs(prev - res) / scale < config.tol;
            x = std::move(next);
            prev = res;
            if (converged)
                break;
        }

        out.completed = std::move(x);
        out.residual = (observed.cwiseProduct(out.completed) - target).norm();
        out.relative_residual = out.residual / scale;
        out.final_step = step;
        return out;
    }

    Eigen::MatrixXd gram_schmidt_basis(const Eigen::MatrixXd &completed, int r)
    {
        if (r < 1)
            throw ConfigError("basis rank must be at least 1");
        const Eigen::Index M = completed.rows();
        Eigen::MatrixXd q(M, r);
        int found = 0;
        for (Eigen::Index j = 0; j < completed.cols() && found < r; ++j)
        {
            const Eigen::VectorXd col = completed.col(j);
            const double norm = col.norm();
            if (!(norm > 0.0))
                continue;
            Eigen::VectorXd v = col;
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i < found; ++i)
                    v -= q.col(i).dot(v) * q.col(i);
            const double resid = v.norm();
            if (resid > 1e-8 * norm)
                q.col(found++) = v / resid;
        }
        if (found < r)
            throw NumericalError("completed matrix has only " + std::to_string(found) +
                                 " linearly independent columns; rank " + std::to_string(r) + " requested");
        return q;
    }

    QueryRecoveryContext build_recovery_context(const Eigen::MatrixXd &basis, const Eigen::MatrixXd &reduced_training,
                                                double mu)
    {
        if (reduced_training.cols() < 2)
            throw InputError("recovery statistics need at least two training columns");
        if (reduced_training.rows() != basis.cols())
            throw InputError("reduced features must have one row per basis vector");
        if (!(mu > 0.0))
            throw ConfigError("recovery regularization mu must be positive");

        QueryRecoveryContext ctx;
        ctx.basis = basis;
        ctx.mu = mu;
        ctx.mean = reduced_training.rowwise().mean();
        const Eigen::MatrixXd c = reduced_training.colwise() - ctx.mean;
        ctx.covariance = c * c.transpose() / static_cast<double>(reduced_training.cols());

        const Eigen::Index r = ctx.covariance.rows();
        Eigen::MatrixXd cov = ctx.covariance;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
        const double top = eig.eigenvalues().maxCoeff();
        if (!(eig.eigenvalues().minCoeff() > 1e-12 * top))
        {
            const double trace = cov.trace();
            const double jitter = trace > 0.0 ? 1e-8 * trace / static_cast<double>(r) : 1e-8;
            cov.diagonal().array() += jitter;
            ctx.jittered = true;
        }
        ctx.covariance_inverse = cov.llt().solve(Eigen::MatrixXd::Identity(r, r));
        return ctx;
    }

    RecoveryResult rls_recover_query(const QueryRecoveryContext &ctx, const Eigen::VectorXd &phi)
    {
        const Eigen::Index M = ctx.basis.rows();
        const Eigen::Index r = ctx.basis.cols();
        if (phi.size() != M)
            throw InputError("query feature vector has the wrong length");

        std::vector<Eigen::Index> rows;
        for (Eigen::Index m = 0; m < M; ++m)
        {
            if (is_missing(phi[m]))
                continue;
            if (!std::isfinite(phi[m]))
                throw InputError("observed query features must be finite");
            rows.push_back(m);
        }

        RecoveryResult out;
        out.observed = static_cast<int>(rows.size());
        if (rows.empty())
            return out;

        Eigen::MatrixXd us(rows.size(), r);
        Eigen::VectorXd ps(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            us.row(i) = ctx.basis.row(rows[i]);
            ps[i] = phi[rows[i]];
        }
        const Eigen::MatrixXd a = us.transpose() * us + ctx.mu * ctx.covariance_inverse;
        const Eigen::VectorXd b = us.transpose() * ps + ctx.mu * ctx.covariance_inverse * ctx.mean;
        out.reduced = a.ldlt().solve(b);
        out.status = out.observed >= r ? RecoveryStatus::recovered : RecoveryStatus::underdetermined;
        return out;
    }

    void write_residual_log(std::ostream &out, const std::vector<double> &log)
    {
        out << "iter,residual\n";
        out.precision(17);
        for (std::size_t i = 0; i < log.size(); ++i)
            out << (i + 1) << ',' << log[i] << '\n';
    }

} // namespace cartography
