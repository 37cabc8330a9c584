#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "cve/errors.hpp"

namespace cve {

/// Regression sample: response y (length n) and predictors X (n x p,
/// rows are observations).
struct DataSet {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;

    DataSet() = default;
    DataSet(Eigen::VectorXd y_in, Eigen::MatrixXd X_in)
        : y(std::move(y_in)), X(std::move(X_in)) {
        validate();
    }

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    void validate() const {
        if (X.rows() != y.size())
            throw InvalidArgument("DataSet: y length and X row count differ");
        if (X.rows() < 2) throw InvalidArgument("DataSet: need n >= 2");
        if (X.cols() < 1) throw InvalidArgument("DataSet: need p >= 1");
        if (!y.allFinite() || !X.allFinite())
            throw InvalidArgument("DataSet: non-finite entries");
    }
};

enum class Kernel { gaussian, epanechnikov_squared, exponential };

/// Kernel K and squared-distance bandwidth h. K is applied at z = d/h
/// where d is already a squared distance.
struct KernelSpec {
    Kernel kind = Kernel::gaussian;
    double h = 1.0;

    double eval(double z) const {
        switch (kind) {
        case Kernel::gaussian: return std::exp(-0.5 * z * z);
        case Kernel::epanechnikov_squared: {
            double t = 1.0 - z * z;
            return t > 0.0 ? t * t : 0.0;
        }
        case Kernel::exponential: return std::exp(-z);
        }
        return 0.0;
    }

    void validate() const {
        if (!(h > 0.0)) throw InvalidArgument("KernelSpec: bandwidth must be positive");
    }
};

} // namespace cve
