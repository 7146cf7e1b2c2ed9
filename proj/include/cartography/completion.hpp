// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_COMPLETION_HPP
#define CARTOGRAPHY_COMPLETION_HPP

#include "cartography/common.hpp"

#include <iosfwd>
#include <vector>

namespace cartography
{
    /// Feature matrix with an observation mask; masked-out values are never read.
    struct IncompleteFeatureMatrix
    {
        Eigen::MatrixXd values;                                 // M x N
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask; // true = observed

        /// Builds the mask from missing_value sentinels in `values`.
        static IncompleteFeatureMatrix from_sentinels(const Eigen::MatrixXd &values);

        Eigen::Index observed_count() const { return mask.count(); }
        Eigen::Index missing_count() const { return mask.size() - mask.count(); }
    };

    struct CompletionConfig
    {
        int target_rank = 4;
        double step_size = 1.0;
        int max_iters = 5000;
        double tol = 1e-10;
        bool record_residuals = false;
    };

    struct CompletionResult
    {
        Eigen::MatrixXd completed;
        double residual = 0.0;        // ||P_Omega(X - Phi)||_F at the returned iterate
        double relative_residual = 0.0;
        int iterations = 0;
        double final_step = 0.0;
        std::vector<double> residual_log; // one entry per iteration when recorded
    };

    /// Singular value projection: X <- P_r(X - step * P_Omega(X - Phi)),
    /// starting from X = 0. The step is halved whenever the observed residual
    /// grows for 10 consecutive iterations.
    CompletionResult svp_complete(const IncompleteFeatureMatrix &incomplete, const CompletionConfig &config);

    /// Best rank-r approximation (truncated SVD).
    Eigen::MatrixXd truncate_rank(const Eigen::MatrixXd &m, int r);

    /// Orthonormalizes the first r linearly independent columns (modified
    /// Gram-Schmidt with one re-orthogonalization pass).
    Eigen::MatrixXd gram_schmidt_basis(const Eigen::MatrixXd &completed, int r);

    /// Prior statistics of the reduced training features used to regularize
    /// query recovery.
    struct QueryRecoveryContext
    {
        Eigen::MatrixXd basis;       // M x r orthonormal
        Eigen::VectorXd mean;        // r
        Eigen::MatrixXd covariance;  // r x r sample covariance (1/N normalization)
        Eigen::MatrixXd covariance_inverse;
        double mu = 5.42;
        bool jittered = false;       // true when a diagonal jitter was needed to invert C
    };

    QueryRecoveryContext build_recovery_context(const Eigen::MatrixXd &basis, const Eigen::MatrixXd &reduced_training,
                                                double mu);

    enum class RecoveryStatus
    {
        recovered,      // at least r observed features
        underdetermined, // 0 < observed < r, prior dominates
        fallback,       // nothing observed; caller should predict the spatial average
    };

    struct RecoveryResult
    {
        RecoveryStatus status = RecoveryStatus::fallback;
        Eigen::VectorXd reduced; // empty on fallback
        int observed = 0;
    };

    /// Regularized least squares estimate of the reduced feature vector from
    /// the observed entries of phi (missing entries hold missing_value):
    /// (U_S^T U_S + mu C^-1)^-1 (U_S^T phi_S + mu C^-1 phi_avg).
    RecoveryResult rls_recover_query(const QueryRecoveryContext &ctx, const Eigen::VectorXd &incomplete_phi);

    /// Writes `iter,residual` rows.
    void write_residual_log(std::ostream &out, const std::vector<double> &log);

} // namespace cartography

#endif
