// SPDX-License-Identifier: Apache-2.0
#include "cartography/kernel_regression.hpp"

#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace cartography
{
    GaussianKernel::GaussianKernel(double sigma) : sigma_(sigma), inv_two_sigma2_(1.0 / (2.0 * sigma * sigma))
    {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw ConfigError("kernel width sigma must be positive");
    }

    FittedMap::FittedMap(GaussianKernel kernel, double lambda, Eigen::MatrixXd features, Eigen::VectorXd alpha,
                         double target_offset, std::optional<ReducedBasis> basis)
        : kernel_(kernel), lambda_(lambda), features_(std::move(features)), alpha_(std::move(alpha)),
          offset_(target_offset), basis_(std::move(basis))
    {
        if (features_.cols() != alpha_.size())
            throw InputError("coefficient count must equal the number of training columns");
        if (basis_ && basis_->rank() != features_.rows())
            throw InputError("reduction basis rank must equal the stored feature dimension");
    }

    Eigen::Index FittedMap::input_dim() const { return basis_ ? basis_->input_dim() : features_.rows(); }

    double FittedMap::evaluate(const Eigen::VectorXd &z) const
    {
        if (z.size() != features_.rows())
            throw InputError("feature dimension " + std::to_string(z.size()) + " does not match the model (" +
                             std::to_string(features_.rows()) + ")");
        if (!z.allFinite())
            throw InputError("prediction needs a complete, finite feature vector");
        double acc = 0.0;
        for (Eigen::Index n = 0; n < features_.cols(); ++n)
            acc += alpha_[n] * kernel_(z, features_.col(n));
        return offset_ + acc;
    }

    FittedMap FittedMap::with_basis(ReducedBasis basis) const
    {
        return FittedMap(kernel_, lambda_, features_, alpha_, offset_, std::move(basis));
    }

    Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd &features, const GaussianKernel &kernel)
    {
        const Eigen::Index N = features.cols();
        if (N < 1)
            throw InputError("Gram matrix needs at least one feature column");
        if (!features.allFinite())
            throw InputError("feature matrix contains non-finite entries");
        Eigen::MatrixXd K(N, N);
        for (Eigen::Index j = 0; j < N; ++j)
        {
            K(j, j) = 1.0;
            for (Eigen::Index i = j + 1; i < N; ++i)
            {
                const double v = kernel(features.col(i), features.col(j));
                K(i, j) = v;
                K(j, i) = v;
            }
        }
        return K;
    }

    FittedMap fit(const TrainingSet &train, const GaussianKernel &kernel, double lambda, const FitOptions &options)
    {
        const Eigen::Index N = train.features.cols();
        if (train.targets.size() != N)
            throw InputError("target count must equal the number of feature columns");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw ConfigError("regularization lambda must be nonnegative");
        if (!train.targets.allFinite())
            throw InputError("targets contain non-finite values");

        const double offset = options.center_targets ? train.targets.mean() : 0.0;
        const Eigen::VectorXd p = train.targets.array() - offset;

        Eigen::MatrixXd A = gram_matrix(train.features, kernel);
        A.diagonal().array() += lambda * static_cast<double>(N);

        Eigen::VectorXd alpha;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success)
            alpha = llt.solve(p);
        else
            alpha = A.completeOrthogonalDecomposition().solve(p);

        const double residual = (A * alpha - p).norm();
        if (!alpha.allFinite() || residual > 1e-8 * std::max(p.norm(), 1e-300))
        {
            if (lambda == 0.0)
                throw NumericalError("kernel matrix is numerically singular; use lambda > 0");
            throw NumericalError("kernel ridge regression solve did not converge (residual " +
                                 std::to_string(residual) + ")");
        }
        return FittedMap(kernel, lambda, train.features, std::move(alpha), offset);
    }

    double predict(const FittedMap &map, const Eigen::VectorXd &phi)
    {
        if (phi.size() != map.input_dim())
            throw InputError("feature dimension " + std::to_string(phi.size()) + " does not match the model (" +
                             std::to_string(map.input_dim()) + ")");
        if (map.basis())
            return map.evaluate(project(*map.basis(), phi));
        return map.evaluate(phi);
    }

    double objective_value(const FittedMap &map, const TrainingSet &train, const Eigen::VectorXd &alpha)
    {
        const Eigen::MatrixXd K = gram_matrix(train.features, map.kernel());
        const Eigen::VectorXd p = train.targets.array() - map.target_offset();
        const double N = static_cast<double>(p.size());
        const Eigen::VectorXd Ka = K * alpha;
        return (p - Ka).squaredNorm() / N + map.lambda() * alpha.dot(Ka);
    }

    double objective_value(const FittedMap &map, const TrainingSet &train)
    {
        return objective_value(map, train, map.coefficients());
    }

    Eigen::VectorXd objective_gradient(const FittedMap &map, const TrainingSet &train, const Eigen::VectorXd &alpha)
    {
        const Eigen::MatrixXd K = gram_matrix(train.features, map.kernel());
        const Eigen::VectorXd p = train.targets.array() - map.target_offset();
        const double N = static_cast<double>(p.size());
        return (2.0 / N) * K * (K * alpha - p) + 2.0 * map.lambda() * K * alpha;
    }

    namespace
    {
        using nlohmann::json;

        json vector_to_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

        Eigen::VectorXd vector_from_json(const json &j)
        {
            const auto v = j.get<std::vector<double>>();
            return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }

        // Column-major list of columns.
        json matrix_to_json(const Eigen::MatrixXd &m)
        {
            json cols = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                cols.push_back(vector_to_json(m.col(j)));
            return {{"rows", m.rows()}, {"cols", m.cols()}, {"columns", cols}};
        }

        Eigen::MatrixXd matrix_from_json(const json &j)
        {
            const auto rows = j.at("rows").get<Eigen::Index>();
            const auto cols = j.at("cols").get<Eigen::Index>();
            Eigen::MatrixXd m(rows, cols);
            const auto &data = j.at("columns");
            if (static_cast<Eigen::Index>(data.size()) != cols)
                throw InputError("matrix column count mismatch in model document");
            for (Eigen::Index c = 0; c < cols; ++c)
            {
                const Eigen::VectorXd v = vector_from_json(data[c]);
                if (v.size() != rows)
                    throw InputError("matrix row count mismatch in model document");
                m.col(c) = v;
            }
            return m;
        }
    } // namespace

    json model_to_json(const FittedMap &map)
    {
        json doc;
        doc["format"] = "cartography-krr";
        doc["version"] = 1;
        doc["sigma"] = map.kernel().sigma();
        doc["lambda"] = map.lambda();
        doc["target_offset"] = map.target_offset();
        doc["features"] = matrix_to_json(map.features());
        doc["alpha"] = vector_to_json(map.coefficients());
        if (map.basis())
        {
            const auto &b = *map.basis();
            doc["basis"] = {{"mean", vector_to_json(b.mean)},
                            {"basis", matrix_to_json(b.basis)},
                            {"singular_values", vector_to_json(b.singular_values)}};
        }
        return doc;
    }

    FittedMap model_from_json(const json &doc)
    {
        try
        {
            if (doc.value("format", std::string{}) != "cartography-krr")
                throw InputError("not a kernel regression model document");
            std::optional<ReducedBasis> basis;
            if (doc.contains("basis"))
            {
                const auto &b = doc.at("basis");
                basis = ReducedBasis{vector_from_json(b.at("mean")), matrix_from_json(b.at("basis")),
                                     vector_from_json(b.at("singular_values"))};
            }
            return FittedMap(GaussianKernel(doc.at("sigma").get<double>()), doc.at("lambda").get<double>(),
                             matrix_from_json(doc.at("features")), vector_from_json(doc.at("alpha")),
                             doc.at("target_offset").get<double>(), std::move(basis));
        }
        catch (const json::exception &e)
        {
            throw InputError(std::string("malformed model document: ") + e.what());
        }
    }

    void save_model(const FittedMap &map, const std::filesystem::path &path)
    {
        std::ofstream out(path);
        if (!out)
            throw ConfigError("cannot write model file " + path.string());
        out << model_to_json(map).dump(1) << '\n';
    }

    FittedMap load_model(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open model file " + path.string());
        try
        {
            return model_from_json(json::parse(in));
        }
        catch (const json::parse_error &e)
        {
            throw InputError(path.string() + ": " + e.what());
        }
    }

} // namespace cartography
