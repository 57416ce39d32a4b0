#include "exnls/domain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace exnls {

ModelParams ModelParams::make(int n, double p, double r_max) {
    ModelParams params;
    params.n = n;
    params.p = p;
    params.r_max = r_max;
    params.m_smooth = n / 2 + 1;
    params.validate();
    return params;
}

void ModelParams::validate() const {
    if (n < 2) throw std::invalid_argument("dimension n must be >= 2");
    if (!(p > 1.0)) throw std::invalid_argument("power p must be > 1");
    if (r_inner != 1.0) throw std::invalid_argument("inner radius is fixed to 1");
    if (!(r_max > r_inner)) throw std::invalid_argument("r_max must exceed 1");
    if (m_smooth != n / 2 + 1) throw std::invalid_argument("m_smooth must equal floor(n/2)+1");
}

double sphere_area(int n) {
    // 2 π^{n/2} / Γ(n/2)
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

}  // namespace

DiscDomain::DiscDomain(const ModelParams& params, int num_radial, int num_angular)
    : params_(params), num_angular_(num_angular) {
    params_.validate();
    if (num_radial < 8) throw std::invalid_argument("num_radial must be >= 8");
    if (num_angular < 1) throw std::invalid_argument("num_angular must be >= 1");
    if (num_angular > 1 && params_.n != 2)
        throw std::invalid_argument("angular resolution is only supported for n = 2");
    if (params_.n == 2 && !is_power_of_two(num_angular))
        throw std::invalid_argument("num_angular must be a power of two, got " +
                                    std::to_string(num_angular));

    dr_ = (params_.r_max - params_.r_inner) / (num_radial + 1);
    const double omega = sphere_area(params_.n);
    const double half_power = 0.5 * (params_.n - 1);
    nodes_.resize(static_cast<std::size_t>(num_radial));
    weights_.resize(nodes_.size());
    sym_.resize(nodes_.size());
    for (int j = 0; j < num_radial; ++j) {
        const double r = params_.r_inner + (j + 1) * dr_;
        nodes_[j] = r;
        weights_[j] = omega * std::pow(r, params_.n - 1) * dr_;
        sym_[j] = std::pow(r, half_power);
    }
}

double DiscDomain::integrate(const std::function<double(double)>& f) const {
    const double omega = sphere_area(params_.n);
    auto measure = [&](double r) { return f(r) * omega * std::pow(r, params_.n - 1); };
    double sum = 0.5 * (measure(params_.r_inner) + measure(params_.r_max));
    for (double r : nodes_) sum += measure(r);
    return sum * dr_;
}

double DiscDomain::exact_volume() const {
    const double omega = sphere_area(params_.n);
    const double n = params_.n;
    return omega / n * (std::pow(params_.r_max, n) - 1.0);
}

bool DiscDomain::same_geometry(const DiscDomain& other) const {
    return this == &other ||
           (params_.n == other.params_.n && params_.r_max == other.params_.r_max &&
            num_radial() == other.num_radial() && num_angular_ == other.num_angular_);
}

DomainPtr build_domain(const ModelParams& params, int num_radial, int num_angular) {
    return std::make_shared<const DiscDomain>(params, num_radial, num_angular);
}

FieldState::FieldState(DomainPtr domain, double time, Representation rep)
    : domain_(std::move(domain)), time_(time), rep_(rep) {
    if (!domain_) throw std::invalid_argument("FieldState needs a domain");
    values_.assign(static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols()),
                   Complex{});
}

std::span<Complex> FieldState::row(int a) {
    return std::span<Complex>(values_).subspan(index(a, 0), static_cast<std::size_t>(cols()));
}

std::span<const Complex> FieldState::row(int a) const {
    return std::span<const Complex>(values_).subspan(index(a, 0),
                                                     static_cast<std::size_t>(cols()));
}

void FieldState::require_same_domain(const FieldState& other) const {
    if (!domain_ || !other.domain_ || !domain_->same_geometry(*other.domain_))
        throw std::invalid_argument("field states live on different domains");
}

FieldState& FieldState::operator+=(const FieldState& other) {
    require_same_domain(other);
    if (rep_ != other.rep_ && !is_radial())
        throw std::invalid_argument("representation mismatch in field addition");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

FieldState& FieldState::operator-=(const FieldState& other) {
    require_same_domain(other);
    if (rep_ != other.rep_ && !is_radial())
        throw std::invalid_argument("representation mismatch in field subtraction");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

FieldState& FieldState::operator*=(Complex s) {
    for (auto& z : values_) z *= s;
    return *this;
}

FieldState operator+(FieldState a, const FieldState& b) { return a += b; }
FieldState operator-(FieldState a, const FieldState& b) { return a -= b; }
FieldState operator*(Complex s, FieldState a) { return a *= s; }

FieldState sample_radial(const DomainPtr& domain, const std::function<Complex(double)>& f) {
    FieldState state(domain, 0.0);
    const auto nodes = domain->nodes();
    for (int a = 0; a < state.rows(); ++a) {
        for (int j = 0; j < state.cols(); ++j) {
            const Complex z = f(nodes[j]);
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw std::invalid_argument("non-finite sample at r = " +
                                            std::to_string(nodes[j]));
            state(a, j) = z;
        }
    }
    return state;
}

FieldState sample_polar(const DomainPtr& domain,
                        const std::function<Complex(double, double)>& f) {
    FieldState state(domain, 0.0, Representation::AngularPoints);
    const int m = domain->num_angular();
    const auto nodes = domain->nodes();
    for (int a = 0; a < m; ++a) {
        const double theta = 2.0 * std::numbers::pi * a / m;
        for (int j = 0; j < state.cols(); ++j) {
            const Complex z = f(nodes[j], theta);
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw std::invalid_argument("non-finite polar sample");
            state(a, j) = z;
        }
    }
    return state;
}

int angular_wavenumber(int a, int num_angular) {
    return a <= num_angular / 2 ? a : a - num_angular;
}

namespace {

// Transforms every radial column along the angular direction.
FieldState transform_columns(const FieldState& state, bool forward) {
    FieldState out = state;
    const int m = state.rows();
    if (m == 1) {
        out.set_representation(forward ? Representation::AngularModes
                                       : Representation::AngularPoints);
        return out;
    }
    Eigen::FFT<double> fft;
    std::vector<Complex> in(static_cast<std::size_t>(m));
    std::vector<Complex> res(static_cast<std::size_t>(m));
    for (int j = 0; j < state.cols(); ++j) {
        for (int a = 0; a < m; ++a) in[a] = state(a, j);
        if (forward) {
            fft.fwd(res, in);
            for (int a = 0; a < m; ++a) out(a, j) = res[a] / static_cast<double>(m);
        } else {
            // Eigen's inverse carries the 1/M factor.
            fft.inv(res, in);
            for (int a = 0; a < m; ++a) out(a, j) = res[a] * static_cast<double>(m);
        }
    }
    out.set_representation(forward ? Representation::AngularModes
                                   : Representation::AngularPoints);
    return out;
}

}  // namespace

FieldState to_modes(const FieldState& state) {
    if (state.representation() == Representation::AngularModes) return state;
    return transform_columns(state, true);
}

FieldState to_points(const FieldState& state) {
    if (state.representation() == Representation::AngularPoints) return state;
    return transform_columns(state, false);
}

}  // namespace exnls
