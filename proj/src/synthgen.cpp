#include "l1indep/synthgen.hpp"

#include <cmath>
#include <cstdio>

#include "l1indep/common.hpp"

namespace l1indep {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Uniform nudged into (0, 1) so the quantile transform stays finite.
double open_uniform(Philox& rng) {
    double u = rng.next_uniform();
    if (u <= 0.0) {
        u = 0x1.0p-54;
    }
    return u;
}

std::string format_theta(double theta) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", theta);
    return buf;
}

// Copula pair on [0,1)^2 for the univariate families.
void draw_pair(const AlternativeSpec& alt, Philox& rng, double& u, double& v) {
    switch (alt.family) {
        case Family::independent_uniform: {
            u = rng.next_uniform();
            v = rng.next_uniform();
            return;
        }
        case Family::gaussian_copula: {
            const double rho = alt.theta;
            const double z1 = normal_quantile(open_uniform(rng));
            const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) *
                                             normal_quantile(open_uniform(rng));
            u = normal_cdf(z1);
            v = normal_cdf(z2);
            return;
        }
        case Family::fgm: {
            // Conditional CDF of V given U=u is v(1 + a(1-v)) with
            // a = alpha(1-2u); the stable root of the inversion is
            // 2w / ((1+a) + sqrt((1+a)^2 - 4aw)).
            u = rng.next_uniform();
            const double w = rng.next_uniform();
            const double a = alt.theta * (1.0 - 2.0 * u);
            const double s = 1.0 + a;
            v = 2.0 * w / (s + std::sqrt(s * s - 4.0 * a * w));
            return;
        }
        case Family::functional: {
            u = rng.next_uniform();
            v = u + alt.theta * normal_quantile(open_uniform(rng));
            return;
        }
    }
    throw InvalidInput("generator: unknown family");
}

// Copula density on the closed unit square; zero outside, zero on the
// boundary for the Gaussian family whose density diverges there.
double copula_density(const AlternativeSpec& alt, double u, double v) {
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) {
        return 0.0;
    }
    switch (alt.family) {
        case Family::independent_uniform:
            return 1.0;
        case Family::fgm:
            return 1.0 + alt.theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
        case Family::gaussian_copula: {
            if (u <= 0.0 || u >= 1.0 || v <= 0.0 || v >= 1.0) {
                return 0.0;
            }
            const double rho = alt.theta;
            const double x = normal_quantile(u);
            const double y = normal_quantile(v);
            const double r2 = 1.0 - rho * rho;
            const double q = rho * rho * (x * x + y * y) - 2.0 * rho * x * y;
            return std::exp(-0.5 * q / r2) / std::sqrt(r2);
        }
        case Family::functional:
            break;
    }
    throw InvalidInput("density: family has no copula density");
}

} // namespace

std::string_view family_name(Family family) {
    switch (family) {
        case Family::independent_uniform: return "independent";
        case Family::gaussian_copula: return "gauss";
        case Family::fgm: return "fgm";
        case Family::functional: return "functional";
    }
    return "?";
}

void AlternativeSpec::validate() const {
    if (dim_x == 0 || dim_y == 0) {
        throw InvalidInput("generator: dimensions must be positive");
    }
    if (family != Family::independent_uniform && (dim_x != 1 || dim_y != 1)) {
        throw InvalidInput("generator: only the independent family supports multivariate blocks");
    }
    if (!std::isfinite(theta)) {
        throw InvalidInput("generator: theta must be finite");
    }
    switch (family) {
        case Family::independent_uniform:
            if (theta != 0.0) {
                throw InvalidInput("generator: the independent family takes no theta");
            }
            break;
        case Family::gaussian_copula:
            if (!(theta > -1.0 && theta < 1.0)) {
                throw InvalidInput("generator: gauss needs rho strictly inside (-1, 1)");
            }
            break;
        case Family::fgm:
            if (!(theta >= -1.0 && theta <= 1.0)) {
                throw InvalidInput("generator: fgm needs alpha in [-1, 1]");
            }
            break;
        case Family::functional:
            if (!(theta >= 0.0)) {
                throw InvalidInput("generator: functional needs sigma >= 0");
            }
            break;
    }
}

std::string AlternativeSpec::id() const {
    std::string out(family_name(family));
    if (family != Family::independent_uniform) {
        out += "(" + format_theta(theta) + ")";
    }
    if (dim_x != 1 || dim_y != 1) {
        out += "[" + std::to_string(dim_x) + "x" + std::to_string(dim_y) + "]";
    }
    return out;
}

void GeneratorSpec::validate() const {
    alt.validate();
    if (transform == MarginalTransform::normal_quantile &&
        alt.family == Family::functional) {
        throw InvalidInput("generator: the functional family has non-uniform marginals; "
                           "only the identity transform applies");
    }
}

std::string GeneratorSpec::id() const {
    std::string out = alt.id();
    if (transform == MarginalTransform::normal_quantile) {
        out += "|normal-margins";
    }
    return out;
}

PairedSample draw_sample_rng(const GeneratorSpec& spec, std::size_t n, Philox& rng) {
    spec.validate();
    PairedSample s;
    s.dim_x = spec.alt.dim_x;
    s.dim_y = spec.alt.dim_y;
    s.x.resize(n * s.dim_x);
    s.y.resize(n * s.dim_y);
    const bool to_normal = spec.transform == MarginalTransform::normal_quantile;
    auto finish = [&](double u) {
        if (!to_normal) {
            return u;
        }
        if (u <= 0.0) {
            u = 0x1.0p-54;
        }
        return normal_quantile(u);
    };
    if (spec.alt.family == Family::independent_uniform) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < s.dim_x; ++k) {
                s.x[i * s.dim_x + k] = finish(rng.next_uniform());
            }
            for (std::size_t k = 0; k < s.dim_y; ++k) {
                s.y[i * s.dim_y + k] = finish(rng.next_uniform());
            }
        }
        return s;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double u, v;
        draw_pair(spec.alt, rng, u, v);
        if (spec.alt.family == Family::functional) {
            s.x[i] = u;
            s.y[i] = v;
        } else {
            s.x[i] = finish(u);
            s.y[i] = finish(v);
        }
    }
    return s;
}

PairedSample draw_sample(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed) {
    Philox rng(seed, spec.stream);
    return draw_sample_rng(spec, n, rng);
}

DensityValue density_at(const GeneratorSpec& spec, double x, double y) {
    spec.validate();
    if (spec.alt.dim_x != 1 || spec.alt.dim_y != 1) {
        throw InvalidInput("density: pointwise densities are univariate only");
    }
    DensityValue d;
    if (spec.alt.family == Family::functional) {
        const double sigma = spec.alt.theta;
        if (!(sigma > 0.0)) {
            throw InvalidInput("density: functional family needs sigma > 0 for a joint density");
        }
        const bool in_x = x >= 0.0 && x <= 1.0;
        d.marginal_x = in_x ? 1.0 : 0.0;
        d.marginal_y = (normal_cdf(y / sigma) - normal_cdf((y - 1.0) / sigma));
        d.joint = in_x ? normal_pdf((y - x) / sigma) / sigma : 0.0;
        return d;
    }
    if (spec.transform == MarginalTransform::uniform) {
        const bool in_x = x >= 0.0 && x <= 1.0;
        const bool in_y = y >= 0.0 && y <= 1.0;
        d.marginal_x = in_x ? 1.0 : 0.0;
        d.marginal_y = in_y ? 1.0 : 0.0;
        d.joint = (in_x && in_y) ? copula_density(spec.alt, x, y) : 0.0;
        return d;
    }
    // Normal marginals: push the copula density through Phi.
    d.marginal_x = normal_pdf(x);
    d.marginal_y = normal_pdf(y);
    d.joint = copula_density(spec.alt, normal_cdf(x), normal_cdf(y)) *
              d.marginal_x * d.marginal_y;
    return d;
}

} // namespace l1indep
