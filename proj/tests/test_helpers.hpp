// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_TEST_HELPERS_HPP
#define CARTOGRAPHY_TEST_HELPERS_HPP

#include "cartography/propagation.hpp"

#include <complex>
#include <random>
#include <vector>

namespace cartography::testing
{
    // Open rectangle with point transmitters of unit pilot power.
    inline Scenario open_scenario(const std::vector<Point2D> &tx, std::vector<WallSegment> walls = {},
                                  double noise_w = 0.0, Region region = {-10.0, -10.0, 60.0, 70.0})
    {
        ScenarioParams p;
        p.region = region;
        p.walls = std::move(walls);
        for (const auto &t : tx)
            p.transmitters.push_back({t, 1.0});
        p.noise_variance_w = noise_w;
        return Scenario(p);
    }

    inline Eigen::VectorXcd delta(int k, int K, cplx value = 1.0)
    {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(K);
        v[k] = value;
        return v;
    }

    inline Eigen::VectorXcd random_row(std::mt19937_64 &rng, int K)
    {
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::VectorXcd v(K);
        for (int k = 0; k < K; ++k)
            v[k] = cplx(n(rng), n(rng));
        return v;
    }

    inline Eigen::MatrixXd random_matrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols)
    {
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                m(i, j) = n(rng);
        return m;
    }

    // Exact pairwise range differences d_a - d_b (pair order (0,1), (0,2), ...).
    inline Eigen::MatrixXd exact_tdoa_matrix(const std::vector<Point2D> &anchors, const std::vector<Point2D> &points)
    {
        const auto L = static_cast<Eigen::Index>(anchors.size());
        Eigen::MatrixXd out(L * (L - 1) / 2, static_cast<Eigen::Index>(points.size()));
        for (std::size_t n = 0; n < points.size(); ++n)
        {
            Eigen::Index m = 0;
            for (Eigen::Index a = 0; a < L; ++a)
                for (Eigen::Index b = a + 1; b < L; ++b)
                    out(m++, static_cast<Eigen::Index>(n)) =
                        distance(anchors[a], points[n]) - distance(anchors[b], points[n]);
        }
        return out;
    }

    inline std::vector<Point2D> random_points(std::mt19937_64 &rng, int count, double lo, double hi)
    {
        std::uniform_real_distribution<double> u(lo, hi);
        std::vector<Point2D> out;
        for (int i = 0; i < count; ++i)
        {
            const double x = u(rng);
            out.push_back({x, u(rng)});
        }
        return out;
    }
} // namespace cartography::testing

#endif
