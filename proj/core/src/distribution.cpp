#include "datamkt/distribution.hpp"

#include <cmath>

namespace datamkt {

TypeDistribution::TypeDistribution(Kind kind, double lo, double hi, double k)
    : kind_(kind), lo_(lo), hi_(hi), k_(k) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("TypeDistribution: support bounds must be finite");
    if (!(lo < hi))
        throw std::invalid_argument("TypeDistribution: requires lo < hi");
    if (kind == Kind::Power && !(k > 0.0))
        throw std::invalid_argument("TypeDistribution: power exponent must be positive");
}

TypeDistribution TypeDistribution::uniform(double lo, double hi) {
    return TypeDistribution(Kind::Uniform, lo, hi, 1.0);
}

TypeDistribution TypeDistribution::power(double lo, double hi, double exponent) {
    return TypeDistribution(Kind::Power, lo, hi, exponent);
}

void TypeDistribution::require_in_support(double x, const char* op) const {
    if (!contains(x))
        throw DomainError(std::string(op) + ": x = " + std::to_string(x) +
                          " outside support [" + std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
}

double TypeDistribution::density(double x) const {
    require_in_support(x, "density");
    if (kind_ == Kind::Uniform)
        return 1.0 / width();
    const double z = (x - lo_) / width();
    return k_ * std::pow(z, k_ - 1.0) / width();
}

double TypeDistribution::cdf(double x) const {
    require_in_support(x, "cdf");
    const double z = (x - lo_) / width();
    return kind_ == Kind::Uniform ? z : std::pow(z, k_);
}

double TypeDistribution::inverse_cdf(double u) const {
    if (u < 0.0 || u > 1.0)
        throw DomainError("inverse_cdf: u = " + std::to_string(u) + " outside [0, 1]");
    if (u == 0.0)
        return lo_;
    if (u == 1.0)
        return hi_;
    const double z = kind_ == Kind::Uniform ? u : std::pow(u, 1.0 / k_);
    return lo_ + z * width();
}

double TypeDistribution::hazard_complement(double x) const {
    require_in_support(x, "hazard_complement");
    const double f = density(x);
    if (f == 0.0)
        throw DomainError("hazard_complement: density vanishes at x = " + std::to_string(x));
    return (1.0 - cdf(x)) / f;
}

} // namespace datamkt
