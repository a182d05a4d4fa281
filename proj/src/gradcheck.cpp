#include "srdice/gradcheck.hpp"

#include <algorithm>
#include <stdexcept>

namespace srdice {

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("numeric_gradient: step must be positive");
    Vector probe = x;
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + h;
        const double up = f(probe);
        probe(i) = x(i) - h;
        const double down = f(probe);
        probe(i) = x(i);
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

double relative_error(const Vector& analytic, const Vector& numeric, double floor) {
    if (analytic.size() != numeric.size()) throw std::invalid_argument("relative_error: size mismatch");
    const double scale = std::max(analytic.norm(), numeric.norm());
    if (scale < floor) return 0.0;
    return (analytic - numeric).norm() / scale;
}

}  // namespace srdice
