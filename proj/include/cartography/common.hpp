// SPDX-License-Identifier: Apache-2.0
//
// Location-free spectrum cartography toolkit.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CARTOGRAPHY_COMMON_HPP
#define CARTOGRAPHY_COMMON_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cartography
{
    using cplx = std::complex<double>;

    inline constexpr double speed_of_light = 299792458.0; // m/s
    inline constexpr double pi = 3.14159265358979323846;

    /// Sentinel for a feature that could not be extracted. Vectors keep their
    /// length; consumers test entries with is_missing().
    inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();

    inline bool is_missing(double v) { return std::isnan(v); }

    struct Point2D
    {
        double x = 0.0;
        double y = 0.0;

        Point2D operator+(const Point2D &o) const { return {x + o.x, y + o.y}; }
        Point2D operator-(const Point2D &o) const { return {x - o.x, y - o.y}; }
        Point2D operator*(double s) const { return {x * s, y * s}; }
        bool operator==(const Point2D &o) const = default;

        double dot(const Point2D &o) const { return x * o.x + y * o.y; }
        double cross(const Point2D &o) const { return x * o.y - y * o.x; }
        double norm() const { return std::hypot(x, y); }
    };

    inline double distance(const Point2D &a, const Point2D &b) { return (a - b).norm(); }

    // Error classes map onto CLI exit codes: configuration and input problems
    // exit with 2, numerical failures with 3.

    /// Invalid configuration or scenario definition.
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// Arguments outside the domain of an operation (e.g. near-field queries).
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    /// Malformed data passed to an operation (dimension mismatch, non-finite values).
    class InputError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// A solver failed to produce a usable result.
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }
    inline double watts_to_dbw(double w) { return 10.0 * std::log10(w); }
    inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

} // namespace cartography

#endif
