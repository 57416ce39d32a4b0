#pragma once

// Named initial-data library.  Every profile is a closed-form radial function
// (optionally times cos ℓθ for n = 2) or a combination of discrete
// eigenmodes, so compatibility and weighted norms can be checked exactly.
//
//   zero
//   gaussian_ring   (r-1)^a exp(-b (r-1)²); scaled by `amplitude`, or so that
//                   the peak value equals `peak` when that key is given
//   poly_exp        amplitude (r-1)^a exp(-(r-1))
//   compact_bump    amplitude (1 - ((r-c)/w)²)^4 on |r-c| < w
//   sine_mode       amplitude sin(kπ(r-1)/(r_max-1)) / r^{(n-1)/2}
//   eigenmodes      Σ c_i φ_{k_i}, discrete eigenmodes of -Δ_h (1-based k)
//   random_modes    `count` ≤ 8 eigenmodes drawn from 1..`max_index` with
//                   N(0,1) complex coefficients from `seed`, unit L² norm
//
// Any profile accepts `ell` (n = 2 with angular samples): multiply by cos ℓθ.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "exnls/domain.hpp"

namespace exnls {

struct ProfileSpec {
    std::string name = "zero";
    std::map<std::string, double> values;
    std::vector<int> modes;               // eigenmodes
    std::vector<Complex> coefficients;    // eigenmodes

    double get(const std::string& key, double fallback) const;
};

/// Names of the numeric keys a profile accepts.
const std::vector<std::string>& profile_keys(const std::string& name);

/// Throws std::invalid_argument on unknown names or keys.
void validate_profile(const ProfileSpec& spec);

/// Samples the profile at time 0 (point representation).
FieldState make_profile(const DomainPtr& domain, const ProfileSpec& spec);

/// Seeded random eigenmode combination, unit L² norm.
FieldState random_mode_data(const DomainPtr& domain, std::uint64_t seed, int count, int max_index);

}  // namespace exnls
