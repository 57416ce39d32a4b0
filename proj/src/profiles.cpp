#include "exnls/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "exnls/functionals.hpp"
#include "exnls/operators.hpp"

namespace exnls {

double ProfileSpec::get(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

const std::vector<std::string>& profile_keys(const std::string& name) {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"zero", {"ell"}},
        {"gaussian_ring", {"a", "b", "amplitude", "peak", "ell"}},
        {"poly_exp", {"a", "amplitude", "ell"}},
        {"compact_bump", {"center", "width", "amplitude", "ell"}},
        {"sine_mode", {"k", "amplitude", "ell"}},
        {"eigenmodes", {"ell"}},
        {"random_modes", {"seed", "count", "max_index"}},
    };
    const auto it = keys.find(name);
    if (it == keys.end()) throw std::invalid_argument("unknown profile '" + name + "'");
    return it->second;
}

void validate_profile(const ProfileSpec& spec) {
    const auto& keys = profile_keys(spec.name);
    for (const auto& [k, v] : spec.values) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw std::invalid_argument("profile '" + spec.name + "' has no key '" + k + "'");
        if (!std::isfinite(v)) throw std::invalid_argument("profile key '" + k + "' is not finite");
    }
    if (spec.name == "eigenmodes") {
        if (spec.modes.empty() || spec.modes.size() != spec.coefficients.size())
            throw std::invalid_argument("eigenmodes profile needs matching modes and coefficients");
        for (int k : spec.modes)
            if (k < 1) throw std::invalid_argument("eigenmode indices are 1-based");
    } else if (!spec.modes.empty() || !spec.coefficients.empty()) {
        throw std::invalid_argument("only the eigenmodes profile takes modes/coefficients");
    }
    if (spec.name == "gaussian_ring") {
        if (spec.get("b", 1.0) <= 0.0) throw std::invalid_argument("gaussian_ring needs b > 0");
        if (spec.values.count("peak") && spec.values.count("amplitude"))
            throw std::invalid_argument("gaussian_ring takes either peak or amplitude");
    }
    if (spec.name == "compact_bump" && spec.get("width", 1.0) <= 0.0)
        throw std::invalid_argument("compact_bump needs width > 0");
    if (spec.name == "random_modes") {
        const double count = spec.get("count", 8);
        if (count < 1 || count > 8) throw std::invalid_argument("random_modes count must be in 1..8");
    }
}

namespace {

std::function<double(double)> radial_shape(const DiscDomain& d, const ProfileSpec& s) {
    const double amp = s.get("amplitude", 1.0);
    if (s.name == "zero") return [](double) { return 0.0; };
    if (s.name == "gaussian_ring") {
        const double a = s.get("a", 1.0), b = s.get("b", 1.0);
        double scale = amp;
        if (s.values.count("peak")) {
            const double sp = std::sqrt(a / (2.0 * b));
            scale = s.get("peak", 1.0) / (std::pow(sp, a) * std::exp(-b * sp * sp));
        }
        return [=](double r) { return scale * std::pow(r - 1.0, a) * std::exp(-b * (r - 1.0) * (r - 1.0)); };
    }
    if (s.name == "poly_exp") {
        const double a = s.get("a", 1.0);
        return [=](double r) { return amp * std::pow(r - 1.0, a) * std::exp(-(r - 1.0)); };
    }
    if (s.name == "compact_bump") {
        const double c = s.get("center", 3.0), w = s.get("width", 1.0);
        return [=](double r) {
            const double x = (r - c) / w;
            return std::abs(x) < 1.0 ? amp * std::pow(1.0 - x * x, 4) : 0.0;
        };
    }
    if (s.name == "sine_mode") {
        const double k = s.get("k", 1.0);
        const double L = d.r_max() - 1.0;
        const double e = 0.5 * (d.dim() - 1);
        return [=](double r) {
            return amp * std::sin(k * std::numbers::pi * (r - 1.0) / L) / std::pow(r, e);
        };
    }
    throw std::invalid_argument("profile '" + s.name + "' has no closed form");
}

FieldState angular_factor(const DomainPtr& domain, FieldState radial, int ell) {
    if (ell == 0) return radial;
    if (domain->radial_only())
        throw std::invalid_argument("angular profiles need an n = 2 domain with angular samples");
    const int M = domain->num_angular();
    FieldState out(domain, 0.0);
    for (int a = 0; a < M; ++a) {
        const double c = std::cos(ell * 2.0 * std::numbers::pi * a / M);
        auto row = out.row(a);
        auto src = radial.row(0);
        for (int j = 0; j < out.cols(); ++j) row[j] = c * src[j];
    }
    return out;
}

FieldState eigen_combination(const DomainPtr& domain, const std::vector<int>& modes,
                             const std::vector<Complex>& coefs) {
    const LaplacianOp op(domain);
    const int top = *std::max_element(modes.begin(), modes.end());
    const Eigenmodes eig = laplacian_eigenmodes(op, 1, top);
    FieldState out(domain, 0.0);
    for (std::size_t i = 0; i < modes.size(); ++i)
        out += coefs[i] * eig.modes[static_cast<std::size_t>(modes[i] - 1)];
    return out;
}

}  // namespace

FieldState random_mode_data(const DomainPtr& domain, std::uint64_t seed, int count, int max_index) {
    if (count < 1 || count > 8) throw std::invalid_argument("random_modes count must be in 1..8");
    if (max_index < count) throw std::invalid_argument("random_modes max_index must be >= count");
    std::mt19937_64 rng(seed);
    std::vector<int> pool(static_cast<std::size_t>(max_index));
    for (int k = 0; k < max_index; ++k) pool[static_cast<std::size_t>(k)] = k + 1;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<int> modes(pool.begin(), pool.begin() + count);
    std::vector<Complex> coefs;
    for (int i = 0; i < count; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        coefs.emplace_back(re, im);
    }
    FieldState u = eigen_combination(domain, modes, coefs);
    u *= Complex(1.0 / std::sqrt(mass(u)));
    return u;
}

FieldState make_profile(const DomainPtr& domain, const ProfileSpec& spec) {
    validate_profile(spec);
    const int ell = static_cast<int>(spec.get("ell", 0.0));
    if (ell != 0 && domain->radial_only())
        throw std::invalid_argument("angular profiles need an n = 2 domain with angular samples");
    if (spec.name == "random_modes")
        return random_mode_data(domain, static_cast<std::uint64_t>(spec.get("seed", 0.0)),
                                static_cast<int>(spec.get("count", 8.0)),
                                static_cast<int>(spec.get("max_index", 32.0)));
    const auto radial_domain =
        domain->radial_only() ? domain : build_domain(domain->params(), domain->num_radial(), 1);
    FieldState radial = spec.name == "eigenmodes"
                            ? eigen_combination(radial_domain, spec.modes, spec.coefficients)
                            : sample_radial(radial_domain, [f = radial_shape(*domain, spec)](double r) {
                                  return Complex(f(r), 0.0);
                              });
    if (domain->radial_only()) return radial;
    if (ell == 0) {
        FieldState out(domain, 0.0);
        for (int a = 0; a < out.rows(); ++a) {
            auto row = out.row(a);
            auto src = radial.row(0);
            std::copy(src.begin(), src.end(), row.begin());
        }
        return out;
    }
    return angular_factor(domain, radial, ell);
}

}  // namespace exnls
