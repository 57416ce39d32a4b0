#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/lambert_w.hpp>

#include "exnls/experiments.hpp"

namespace exnls {

namespace {

bool finite_record(const DiagnosticsRecord& r) {
    return std::isfinite(r.mass) && std::isfinite(r.energy) && std::isfinite(r.linf);
}

}  // namespace

Evolution evolve(const ModelParams& params, const FieldState& u0, const EvolveConfig& cfg) {
    if (cfg.stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (cfg.steps < 0) throw std::invalid_argument("step count must be >= 0");
    const LaplacianOp op(u0.domain_ptr());
    PropagatorConfig pc;
    pc.dt = cfg.dt;
    std::optional<StrangIntegrator> strang;
    std::optional<LinearPropagator> linear;
    if (cfg.flow == Flow::Defocusing) strang.emplace(op, params, pc);
    else linear.emplace(op, cfg.dt);

    Evolution ev;
    FieldState u = u0;
    auto record = [&](long long step) {
        DiagnosticsRecord rec = diagnostics(params, u);
        if (!finite_record(rec)) {
            ev.anomaly = true;
            ev.anomaly_reason = "non-finite field";
            ev.anomaly_step = step;
            return false;
        }
        if (!rec.valid) {
            ev.horizon_reached = true;
            if (cfg.horizon == HorizonPolicy::Stop) {
                ev.series.push_back(rec);
                if (cfg.keep_snapshots) ev.snapshots.push_back(u);
                ev.anomaly = true;
                ev.anomaly_reason = "validity horizon reached";
                ev.anomaly_step = step;
                return false;
            }
        }
        ev.series.push_back(rec);
        if (cfg.keep_snapshots) ev.snapshots.push_back(u);
        return true;
    };

    if (!record(0)) return ev;
    const double t0 = u0.time();
    for (long long done = 0; done < cfg.steps;) {
        const int chunk = static_cast<int>(std::min<long long>(cfg.stride, cfg.steps - done));
        if (strang) {
            u = strang->advance(u, chunk);
        } else {
            for (int k = 0; k < chunk; ++k) u = linear->step(u);
        }
        done += chunk;
        u.set_time(t0 + static_cast<double>(done) * cfg.dt);
        if (!record(done)) break;
    }
    return ev;
}

FitResult decay_fit(std::span<const DiagnosticsRecord> series, double t_a, double t_b,
                    double threshold) {
    if (!(t_a < t_b)) throw std::invalid_argument("decay_fit window must satisfy t_a < t_b");
    if (t_a < 1.0) throw std::invalid_argument("decay_fit window must start at t >= 1");
    FitResult fit;
    fit.t_a = t_a;
    fit.t_b = t_b;
    std::vector<double> x, y;
    bool zero = false;
    double last_valid = -kInfinity;
    for (const auto& r : series) {
        if (!r.valid) break;
        last_valid = r.time;
        if (r.time < t_a - 1e-12 || r.time > t_b + 1e-12) continue;
        if (r.sup_weighted_amp <= 0.0) {
            zero = true;
            continue;
        }
        x.push_back(0.5 * std::log1p(r.time * r.time));
        y.push_back(std::log(r.sup_weighted_amp));
    }
    fit.t_b = std::min(t_b, last_valid);
    fit.samples = static_cast<int>(x.size());
    if (zero) {
        fit.skipped = true;
        fit.note = "zero amplitude in window; fit skipped";
        return fit;
    }
    if (fit.samples < 8) throw std::invalid_argument("decay_fit needs at least 8 valid samples in the window");

    const double m = fit.samples;
    double mx = 0, my = 0;
    for (int i = 0; i < fit.samples; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < fit.samples; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.exponent = sxy / sxx;
    double ssr = 0;
    for (int i = 0; i < fit.samples; ++i) {
        const double e = y[i] - (my + fit.exponent * (x[i] - mx));
        ssr += e * e;
    }
    fit.residual = std::sqrt(ssr / m);
    const double se = std::sqrt(ssr / (m - 2.0) / sxx);
    const boost::math::students_t dist(m - 2.0);
    fit.confidence_halfwidth = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    fit.pass = fit.exponent <= threshold;
    return fit;
}

StabilityFit stability_fit(std::span<const double> times, std::span<const StabilityEnergy> w,
                           double curvature_tolerance) {
    if (times.size() != w.size() || times.empty())
        throw std::invalid_argument("stability_fit needs matching non-empty series");
    StabilityFit fit;
    fit.e_w0 = w[0].energy;
    fit.initial_size = w[0].energy + w[0].l2_squared;
    const double t0 = times[0];

    bool all_zero = true;
    for (const auto& s : w) all_zero = all_zero && s.energy == 0.0 && s.l2_squared == 0.0;
    if (all_zero) {
        fit.identical = true;
        fit.pass = true;
        return fit;
    }
    if (fit.initial_size <= 0.0) {
        fit.C = kInfinity;
        return fit;
    }

    double C = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double rho = w[i].energy / fit.initial_size;
        const double t = times[i] - t0;
        if (rho <= 0.0) continue;
        const double need = t > 0.0 ? boost::math::lambert_w0(t * rho) / t : rho;
        C = std::max(C, need);
    }
    fit.C = C;

    std::vector<double> ts, ls;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].energy > 0.0) {
            ts.push_back(times[i] - t0);
            ls.push_back(std::log(w[i].energy));
        }
    }
    if (ts.size() >= 3) {
        const Eigen::Index m = static_cast<Eigen::Index>(ts.size());
        Eigen::MatrixXd A(m, 3);
        Eigen::VectorXd b(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            A(i, 0) = 1.0;
            A(i, 1) = ts[static_cast<std::size_t>(i)];
            A(i, 2) = ts[static_cast<std::size_t>(i)] * ts[static_cast<std::size_t>(i)];
            b(i) = ls[static_cast<std::size_t>(i)];
        }
        const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
        fit.curvature = 2.0 * coef(2);
        for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
            const double h1 = ts[i] - ts[i - 1], h2 = ts[i + 1] - ts[i];
            const double d2 = 2.0 * (h1 * ls[i + 1] - (h1 + h2) * ls[i] + h2 * ls[i - 1]) /
                              (h1 * h2 * (h1 + h2));
            fit.max_second_difference = std::max(fit.max_second_difference, d2);
        }
    }
    fit.pass = std::isfinite(fit.C) && fit.curvature <= curvature_tolerance;
    return fit;
}

StabilityFit stability_fit(const ModelParams& params, std::span<const FieldState> u_series,
                           std::span<const FieldState> v_series, double curvature_tolerance) {
    if (u_series.size() != v_series.size())
        throw std::invalid_argument("stability_fit: mismatched sampling");
    std::vector<double> times;
    std::vector<StabilityEnergy> w;
    for (std::size_t i = 0; i < u_series.size(); ++i) {
        if (std::abs(u_series[i].time() - v_series[i].time()) > 1e-9 * std::max(1.0, u_series[i].time()))
            throw std::invalid_argument("stability_fit: mismatched sampling");
        times.push_back(u_series[i].time());
        w.push_back(stability_energy(params, u_series[i], v_series[i]));
    }
    return stability_fit(times, w, curvature_tolerance);
}

NonInflationReport noninflation_audit(std::span<const DiagnosticsRecord> series,
                                      const std::vector<int>& orders, const CompatReport* compat,
                                      double split, double threshold) {
    NonInflationReport rep;
    if (compat && !compat->pass()) {
        rep.refused = true;
        rep.reason = "compatibility fails at j = " + std::to_string(compat->first_failure()) +
                     " of order " + std::to_string(compat->order_requested);
        return rep;
    }
    rep.pass = true;
    for (int k : orders) {
        double early = 0.0, late = 0.0;
        bool have_late = false;
        for (const auto& r : series) {
            if (!r.valid) continue;
            const auto it = r.sobolev.find(k);
            if (it == r.sobolev.end())
                throw std::invalid_argument("noninflation_audit: order " + std::to_string(k) + " not recorded");
            if (r.time < split) early = std::max(early, it->second);
            else {
                late = std::max(late, it->second);
                have_late = true;
            }
        }
        if (early == 0.0 || !have_late) {
            rep.skipped = true;
            rep.reason = early == 0.0 ? "zero norm before the split time (0/0)"
                                      : "no valid samples after the split time";
            rep.ratios.emplace_back(k, std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double ratio = late / early;
        rep.ratios.emplace_back(k, ratio);
        rep.pass = rep.pass && ratio <= threshold;
    }
    if (rep.skipped) rep.pass = false;
    return rep;
}

StrichartzTable strichartz_quotient(const RunManifest& m) {
    const auto& op = m.options;
    for (const auto& [q, r] : op.pairs) {
        const Admissibility adm = check_admissible(m.params.n, q, r);
        if (!adm.admissible) throw std::invalid_argument("Strichartz pair is not admissible");
        if (adm.endpoint) throw std::invalid_argument("endpoint Strichartz pair is excluded");
        if (m.params.n == 2 && std::isinf(r))
            throw std::invalid_argument("r = inf is excluded for n = 2");
    }
    std::vector<int> res = op.resolutions;
    if (res.empty()) res = {m.num_radial, 2 * m.num_radial, 4 * m.num_radial};

    StrichartzTable table;
    const int stride = m.stride();
    const int steps = m.total_steps();
    for (int N : res) {
        const DomainPtr dom = build_domain(m.params, N, 1);
        const LinearPropagator prop(LaplacianOp(dom), m.dt);
        std::vector<std::vector<double>> quot(op.pairs.size());
        for (int e = 0; e < op.ensemble_size; ++e) {
            const FieldState u0 = random_mode_data(dom, m.seed + static_cast<std::uint64_t>(e),
                                                   op.mode_count, op.max_mode_index);
            std::vector<FieldState> traj{u0};
            FieldState u = u0;
            for (int k = 1; k <= steps; ++k) {
                u = prop.step(u);
                if (k % stride == 0) traj.push_back(u);
            }
            const double n0 = std::sqrt(mass(u0));
            for (std::size_t i = 0; i < op.pairs.size(); ++i) {
                MixedNormSpec spec{op.pairs[i].first, op.pairs[i].second, 0, u0.time(), u.time()};
                quot[i].push_back(mixed_norm(traj, spec, m.params, Flow::Linear) / n0);
            }
        }
        for (std::size_t i = 0; i < op.pairs.size(); ++i) {
            StrichartzRow row;
            row.q = op.pairs[i].first;
            row.r = op.pairs[i].second;
            row.num_radial = N;
            row.quotients = quot[i];
            std::vector<double> sorted = quot[i];
            std::sort(sorted.begin(), sorted.end());
            row.max = sorted.back();
            const std::size_t h = sorted.size() / 2;
            row.median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
            table.rows.push_back(std::move(row));
        }
    }
    table.pass = true;
    for (const auto& pr : op.pairs) {
        double lo = kInfinity, hi = 0.0;
        for (const auto& row : table.rows) {
            if (row.q != pr.first || row.r != pr.second) continue;
            lo = std::min(lo, row.max);
            hi = std::max(hi, row.max);
        }
        const double var = hi / lo;
        table.variation.emplace_back(pr, var);
        table.pass = table.pass && var < m.thresholds.strichartz_variation;
    }
    return table;
}

WConsistencyReport w_consistency(const RunManifest& m) {
    WConsistencyReport rep;
    const double eps = m.options.epsilons.front();
    for (int level = 0; level < m.options.levels; ++level) {
        const int scale = 1 << level;
        const int N = (m.num_radial + 1) * scale - 1;
        const double dt = m.dt / scale;
        const int steps = m.total_steps() * scale;
        const DomainPtr dom = build_domain(m.params, N, m.num_angular);
        const LaplacianOp op(dom);
        PropagatorConfig pc;
        pc.dt = dt;
        pc.potential_mode = PotentialMode::FrozenCoefficient;
        const StrangIntegrator strang(op, m.params, pc);
        const PerturbedIntegrator pert(op, pc);

        FieldState u = make_profile(dom, m.initial_data);
        FieldState phi = make_profile(dom, m.options.perturbation);
        phi *= Complex(1.0 / std::sqrt(mass(phi)));
        FieldState v = u + Complex(eps) * phi;
        FieldState w = Complex(eps) * phi;

        for (int k = 0; k < steps; ++k) {
            const double t = k * dt;
            FieldState u_next = strang.step(u);
            FieldState u_mid = Complex(0.5) * (u + u_next);
            u_mid.set_time(t + 0.5 * dt);
            const Linearization lin = linearize_nonlinearity(m.params, u_mid);
            FieldState rem = nonlinearity(m.params, u_mid + w) - nonlinearity(m.params, u_mid);
            {
                auto rv = rem.values();
                const auto wv = w.values();
                const auto a = lin.v1.values();
                const auto b = lin.v2.values();
                for (std::size_t i = 0; i < rv.size(); ++i)
                    rv[i] -= a[i] * wv[i] + b[i] * std::conj(wv[i]);
            }
            rem.set_time(t + 0.5 * dt);
            w.set_time(t);
            w = pert.step(w, lin.v1, lin.v2, rem);
            v = strang.step(v);
            u = std::move(u_next);
        }
        const FieldState diff = v - u;
        const double err = std::sqrt(mass(w - diff) / mass(diff));
        rep.levels.push_back({dt, dom->dr(), err});
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double L = static_cast<double>(rep.levels.size());
    for (const auto& l : rep.levels) {
        const double x = std::log(l.dt), y = std::log(l.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.order = (L * sxy - sx * sy) / (L * sxx - sx * sx);
    bool decreasing = true;
    for (std::size_t i = 1; i < rep.levels.size(); ++i)
        decreasing = decreasing && rep.levels[i].error < rep.levels[i - 1].error;
    rep.pass = decreasing && rep.order >= m.thresholds.w_order;
    return rep;
}

}  // namespace exnls
