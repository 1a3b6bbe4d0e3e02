#pragma once

#include <stdexcept>
#include <string>

namespace datamkt {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Type distribution of one market side. Two closed-form families:
///   Uniform:          F(x) = (x - lo) / (hi - lo)
///   Power (k > 0):    F(x) = ((x - lo) / (hi - lo))^k
/// Both have closed-form density, quantile and inverse hazard rate, so no
/// special functions are needed anywhere downstream.
class TypeDistribution {
public:
    enum class Kind { Uniform, Power };

    static TypeDistribution uniform(double lo, double hi);
    static TypeDistribution power(double lo, double hi, double exponent);

    Kind kind() const { return kind_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double width() const { return hi_ - lo_; }
    double exponent() const { return k_; }

    double density(double x) const;
    double cdf(double x) const;
    double inverse_cdf(double u) const;
    /// (1 - F(x)) / f(x), the inverse hazard rate.
    double hazard_complement(double x) const;

    bool contains(double x) const { return x >= lo_ && x <= hi_; }

private:
    TypeDistribution(Kind kind, double lo, double hi, double k);
    void require_in_support(double x, const char* op) const;

    Kind kind_;
    double lo_, hi_, k_;
};

} // namespace datamkt
