#include "subdiff/levy_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subdiff/errors.hpp"
#include "subdiff/quadrature.hpp"

namespace subdiff {

namespace {

double normal_density(double y) {
    return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
}

void check_truncation(double c) {
    if (!(c > 0.0)) throw ParameterError("jump truncation c must be positive or infinite");
}

}  // namespace

JumpMeasureSpec JumpMeasureSpec::none() { return JumpMeasureSpec{}; }

JumpMeasureSpec JumpMeasureSpec::standard_normal(double intensity, double truncation) {
    if (!(intensity >= 0.0) || !std::isfinite(intensity))
        throw ParameterError("jump intensity must be finite and >= 0");
    check_truncation(truncation);
    JumpMeasureSpec spec;
    spec.law_ = Law::standard_normal;
    spec.intensity_ = intensity;
    spec.truncation_ = truncation;
    if (std::isinf(truncation)) {
        spec.total_mass_ = intensity;
        spec.second_moment_ = intensity;
    } else {
        const double c = truncation;
        const double inside = std::erf(c / std::numbers::sqrt2);
        spec.total_mass_ = intensity * inside;
        // ∫_{-c}^{c} y² φ(y) dy = P(|Z|<c) − 2cφ(c)
        spec.second_moment_ = intensity * (inside - 2.0 * c * normal_density(c));
    }
    return spec;
}

JumpMeasureSpec JumpMeasureSpec::discrete(std::vector<double> atoms, std::vector<double> weights,
                                          double truncation) {
    if (atoms.size() != weights.size() || atoms.empty())
        throw ParameterError("discrete jump law needs matching, nonempty atoms and weights");
    check_truncation(truncation);
    JumpMeasureSpec spec;
    spec.law_ = Law::discrete;
    spec.truncation_ = truncation;
    double mass = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (!(weights[j] >= 0.0) || !std::isfinite(weights[j]) || !std::isfinite(atoms[j]))
            throw ParameterError("discrete jump weights must be finite and >= 0");
        const bool inside = atoms[j] != 0.0 && std::abs(atoms[j]) < truncation;
        if (inside) {
            mass += weights[j];
            spec.second_moment_ += weights[j] * atoms[j] * atoms[j];
        }
        spec.cumulative_.push_back(mass);
    }
    spec.total_mass_ = mass;
    spec.atoms_ = std::move(atoms);
    spec.weights_ = std::move(weights);
    return spec;
}

double JumpMeasureSpec::sample_size(RandomStream& rng) const {
    switch (law_) {
    case Law::none:
        throw ParameterError("cannot sample a jump from the zero measure");
    case Law::standard_normal:
        for (;;) {
            const double y = rng.normal();
            if (std::abs(y) < truncation_) return y;
        }
    case Law::discrete: {
        const double target = rng.uniform() * total_mass_;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - cumulative_.begin(), static_cast<std::ptrdiff_t>(atoms_.size()) - 1));
        return atoms_[j];
    }
    }
    return 0.0;
}

double JumpMeasureSpec::integrate(const std::function<double(double)>& fn) const {
    double result = 0.0;
    switch (law_) {
    case Law::none:
        return 0.0;
    case Law::standard_normal:
        if (intensity_ == 0.0) return 0.0;
        if (std::isinf(truncation_)) {
            const auto& rule = gauss_hermite_normal(64);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                result += rule.weights[i] * fn(rule.nodes[i]);
        } else {
            const auto& rule = gauss_legendre(64);
            const double c = truncation_;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double y = c * rule.nodes[i];
                result += rule.weights[i] * c * fn(y) * normal_density(y);
            }
        }
        result *= intensity_;
        break;
    case Law::discrete:
        for (std::size_t j = 0; j < atoms_.size(); ++j) {
            if (atoms_[j] != 0.0 && std::abs(atoms_[j]) < truncation_ && weights_[j] > 0.0)
                result += weights_[j] * fn(atoms_[j]);
        }
        break;
    }
    if (!std::isfinite(result)) throw QuadratureError("jump integrand is not integrable against nu");
    return result;
}

NoiseBundle sample_noise(const InversePath& inverse, const JumpMeasureSpec& spec, RandomStream& rng) {
    if (inverse.e_values.size() != inverse.t_grid.size() || inverse.t_grid.size() < 2)
        throw ParameterError("inverse path must have at least one step and aligned arrays");
    const std::size_t n = inverse.n_steps();
    NoiseBundle bundle;
    bundle.inverse = inverse;
    bundle.delta_e.resize(n);
    bundle.delta_b.resize(n);
    bundle.jump_offsets.assign(n + 1, 0);
    const double mass = spec.total_mass();
    for (std::size_t i = 0; i < n; ++i) {
        const double de = inverse.e_values[i + 1] - inverse.e_values[i];
        if (de < 0.0) throw ParameterError("inverse path must be nondecreasing");
        bundle.delta_e[i] = de;
        if (de > 0.0) {
            bundle.delta_b[i] = std::sqrt(de) * rng.normal();
            const auto count = mass > 0.0 ? rng.poisson(mass * de) : 0;
            for (std::uint64_t j = 0; j < count; ++j) bundle.jump_sizes.push_back(spec.sample_size(rng));
        } else {
            bundle.delta_b[i] = 0.0;
        }
        bundle.jump_offsets[i + 1] = bundle.jump_sizes.size();
    }
    return bundle;
}

NoiseBundle coarsen(const NoiseBundle& fine, std::size_t factor) {
    if (factor < 1 || fine.steps() % factor != 0)
        throw ParameterError("coarsening factor must divide the number of steps");
    const std::size_t n = fine.steps() / factor;
    NoiseBundle coarse;
    coarse.delta_e.resize(n);
    coarse.delta_b.resize(n);
    coarse.jump_offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i <= n; ++i) {
        coarse.inverse.t_grid.push_back(fine.inverse.t_grid[i * factor]);
        coarse.inverse.e_values.push_back(fine.inverse.e_values[i * factor]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double db = 0.0;
        for (std::size_t k = i * factor; k < (i + 1) * factor; ++k) {
            db += fine.delta_b[k];
            const auto jumps = fine.jumps(k);
            coarse.jump_sizes.insert(coarse.jump_sizes.end(), jumps.begin(), jumps.end());
        }
        // exact E differences keep Σ ΔE telescoping to E_T − E_0
        coarse.delta_e[i] = coarse.inverse.e_values[i + 1] - coarse.inverse.e_values[i];
        coarse.delta_b[i] = db;
        coarse.jump_offsets[i + 1] = coarse.jump_sizes.size();
    }
    return coarse;
}

double compensated_sum(const std::function<double(double)>& gamma, std::span<const double> jumps,
                       double delta_e, double compensator) {
    double sum = 0.0;
    for (double y : jumps) sum += gamma(y);
    return sum - delta_e * compensator;
}

double compensated_integral(const std::function<double(double)>& gamma, std::span<const double> jumps,
                            double delta_e, const JumpMeasureSpec& spec) {
    const double compensator = delta_e > 0.0 ? spec.integrate(gamma) : 0.0;
    return compensated_sum(gamma, jumps, delta_e, compensator);
}

}  // namespace subdiff
