#pragma once

// Problem parameters, the truncated radial grid on {1 < |x| < r_max}, and the
// complex field container shared by every other module.

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace exnls {

using Complex = std::complex<double>;

/// Physical description of the exterior problem i u_t + Δu = |u|^{p-1} u.
struct ModelParams {
    int n = 3;             // spatial dimension
    double p = 3.0;        // power of the defocusing nonlinearity
    double r_inner = 1.0;  // Dirichlet wall; always the unit sphere
    double r_max = 10.0;   // artificial outer Dirichlet wall
    int m_smooth = 2;      // floor(n/2) + 1

    /// Validates and fills m_smooth. Throws std::invalid_argument.
    static ModelParams make(int n, double p, double r_max);

    void validate() const;
};

/// Surface area of the unit sphere S^{n-1}.
double sphere_area(int n);

/// Uniform interior grid r_j = 1 + (j+1) dr, j = 0..N-1, with the field
/// implicitly zero on both walls.  For n = 2 the field may additionally carry
/// num_angular equispaced angular samples (a power of two).
class DiscDomain {
public:
    DiscDomain(const ModelParams& params, int num_radial, int num_angular);

    const ModelParams& params() const { return params_; }
    int dim() const { return params_.n; }
    int num_radial() const { return static_cast<int>(nodes_.size()); }
    int num_angular() const { return num_angular_; }
    bool radial_only() const { return num_angular_ == 1; }
    double dr() const { return dr_; }
    double r_max() const { return params_.r_max; }

    std::span<const double> nodes() const { return nodes_; }
    double node(int j) const { return nodes_[static_cast<std::size_t>(j)]; }

    /// Trapezoid weights against the full measure: ω_n r_j^{n-1} dr.  Wall
    /// nodes carry no weight because every field vanishes there.
    std::span<const double> quad_weights() const { return weights_; }

    /// r_j^{(n-1)/2}: maps u to the symmetrized variable v.
    std::span<const double> sym_factors() const { return sym_; }

    /// Composite trapezoid of f(r) ω_n r^{n-1} over [1, r_max], including the
    /// two wall nodes.  Used for integrands that do not vanish on the walls.
    double integrate(const std::function<double(double)>& f) const;

    /// Exact |{1 < |x| < r_max}|.
    double exact_volume() const;

    /// Same geometry (dimension, radii, node counts).
    bool same_geometry(const DiscDomain& other) const;

private:
    ModelParams params_;
    int num_angular_;
    double dr_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> sym_;
};

using DomainPtr = std::shared_ptr<const DiscDomain>;

/// Builds a shared domain.  Rejects num_radial < 8, num_angular > 1 for n != 2,
/// and angular counts that are not powers of two.
DomainPtr build_domain(const ModelParams& params, int num_radial, int num_angular = 1);

enum class Representation { AngularPoints, AngularModes };

/// Complex samples u(t, r_j, θ_a) stored row-major as (num_angular, num_radial).
/// For multi-angle n = 2 fields the rows are either angular collocation points
/// θ_a = 2πa/M or Fourier coefficients û_ℓ with u = Σ_ℓ û_ℓ e^{iℓθ}.
class FieldState {
public:
    FieldState() = default;
    FieldState(DomainPtr domain, double time,
               Representation rep = Representation::AngularPoints);

    const DiscDomain& domain() const { return *domain_; }
    const DomainPtr& domain_ptr() const { return domain_; }

    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    Representation representation() const { return rep_; }
    void set_representation(Representation rep) { rep_ = rep; }

    int rows() const { return domain_->num_angular(); }
    int cols() const { return domain_->num_radial(); }

    std::span<Complex> row(int a);
    std::span<const Complex> row(int a) const;

    Complex& operator()(int a, int j) { return values_[index(a, j)]; }
    const Complex& operator()(int a, int j) const { return values_[index(a, j)]; }

    std::span<Complex> values() { return values_; }
    std::span<const Complex> values() const { return values_; }

    bool is_radial() const { return domain_->radial_only(); }

    /// Throws std::invalid_argument when the other state lives on a
    /// different geometry.
    void require_same_domain(const FieldState& other) const;

    FieldState& operator+=(const FieldState& other);
    FieldState& operator-=(const FieldState& other);
    FieldState& operator*=(Complex s);

private:
    std::size_t index(int a, int j) const {
        return static_cast<std::size_t>(a) * static_cast<std::size_t>(cols()) +
               static_cast<std::size_t>(j);
    }

    DomainPtr domain_;
    double time_ = 0.0;
    Representation rep_ = Representation::AngularPoints;
    std::vector<Complex> values_;
};

FieldState operator+(FieldState a, const FieldState& b);
FieldState operator-(FieldState a, const FieldState& b);
FieldState operator*(Complex s, FieldState a);

/// values[0][j] = f(r_j) at time 0.  Rejects non-finite samples.
FieldState sample_radial(const DomainPtr& domain, const std::function<Complex(double)>& f);

/// values[a][j] = f(r_j, θ_a) in the point representation.
FieldState sample_polar(const DomainPtr& domain,
                        const std::function<Complex(double, double)>& f);

/// Angular collocation ↔ Fourier mode transforms (identity for radial fields).
FieldState to_modes(const FieldState& state);
FieldState to_points(const FieldState& state);

/// Angular wavenumber ℓ stored in mode row a (FFT ordering).
int angular_wavenumber(int a, int num_angular);

}  // namespace exnls
