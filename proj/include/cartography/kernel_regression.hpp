// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_KERNEL_REGRESSION_HPP
#define CARTOGRAPHY_KERNEL_REGRESSION_HPP

#include "cartography/reduction.hpp"

#include <filesystem>
#include <optional>

#include <json.hpp>

namespace cartography
{
    /// exp(-||a - b||^2 / (2 sigma^2))
    class GaussianKernel
    {
    public:
        explicit GaussianKernel(double sigma);

        double sigma() const { return sigma_; }

        template <typename A, typename B>
        double operator()(const Eigen::MatrixBase<A> &a, const Eigen::MatrixBase<B> &b) const
        {
            return std::exp(-(a - b).squaredNorm() * inv_two_sigma2_);
        }

    private:
        double sigma_;
        double inv_two_sigma2_;
    };

    struct TrainingSet
    {
        Eigen::MatrixXd features; // M x N, one column per measurement
        Eigen::VectorXd targets;  // N, dBW
    };

    struct FitOptions
    {
        bool center_targets = false; // regress p - mean(p) and add the mean back at prediction
    };

    /// Immutable kernel ridge regression model.
    class FittedMap
    {
    public:
        FittedMap(GaussianKernel kernel, double lambda, Eigen::MatrixXd features, Eigen::VectorXd alpha,
                  double target_offset = 0.0, std::optional<ReducedBasis> basis = std::nullopt);

        const GaussianKernel &kernel() const { return kernel_; }
        double lambda() const { return lambda_; }
        const Eigen::MatrixXd &features() const { return features_; }
        const Eigen::VectorXd &coefficients() const { return alpha_; }
        double target_offset() const { return offset_; }
        const std::optional<ReducedBasis> &basis() const { return basis_; }

        /// Dimension of vectors accepted by predict() (before any reduction).
        Eigen::Index input_dim() const;

        /// Kernel expansion evaluated directly in the model's (possibly reduced) feature space.
        double evaluate(const Eigen::VectorXd &z) const;

        /// Copy of this model carrying a reduction basis applied by predict().
        FittedMap with_basis(ReducedBasis basis) const;

    private:
        GaussianKernel kernel_;
        double lambda_;
        Eigen::MatrixXd features_;
        Eigen::VectorXd alpha_;
        double offset_;
        std::optional<ReducedBasis> basis_;
    };

    /// N x N matrix of pairwise kernel values over the feature columns.
    Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd &features, const GaussianKernel &kernel);

    /// Solves (K + lambda N I) alpha = p.
    FittedMap fit(const TrainingSet &train, const GaussianKernel &kernel, double lambda, const FitOptions &options = {});

    /// Projects phi through the model's basis (if any) and evaluates the kernel expansion.
    double predict(const FittedMap &map, const Eigen::VectorXd &phi);

    /// (1/N)||p - K alpha||^2 + lambda alpha^T K alpha for an arbitrary coefficient vector.
    double objective_value(const FittedMap &map, const TrainingSet &train, const Eigen::VectorXd &alpha);
    double objective_value(const FittedMap &map, const TrainingSet &train);

    /// Gradient of the objective with respect to alpha.
    Eigen::VectorXd objective_gradient(const FittedMap &map, const TrainingSet &train, const Eigen::VectorXd &alpha);

    nlohmann::json model_to_json(const FittedMap &map);
    FittedMap model_from_json(const nlohmann::json &doc);
    void save_model(const FittedMap &map, const std::filesystem::path &path);
    FittedMap load_model(const std::filesystem::path &path);

} // namespace cartography

#endif
