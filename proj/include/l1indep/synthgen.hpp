#pragma once

#include <cstdint>
#include <string>

#include "l1indep/partition.hpp"
#include "l1indep/rng.hpp"

namespace l1indep {

// Dependence families with one strength parameter theta each:
//   independent_uniform  theta unused (must be 0); the only multivariate one
//   gaussian_copula      theta = rho in (-1, 1)
//   fgm                  theta = alpha in [-1, 1], Farlie-Gumbel-Morgenstern
//   functional           theta = sigma >= 0, X ~ U(0,1), Y = X + sigma * Z
enum class Family { independent_uniform, gaussian_copula, fgm, functional };

std::string_view family_name(Family family);

struct AlternativeSpec {
    Family family = Family::independent_uniform;
    double theta = 0.0;
    std::size_t dim_x = 1;
    std::size_t dim_y = 1;

    void validate() const;
    // Identifier like "independent", "gauss(0.5)", "fgm(0.25)"; dimensions
    // are appended as [dxd'] when not 1x1.
    std::string id() const;
};

// Marginal map applied to each coordinate after sampling. The families
// produce uniform marginals (functional excepted, which allows only the
// identity); normal_quantile sends them through Phi^{-1}.
enum class MarginalTransform { uniform, normal_quantile };

struct GeneratorSpec {
    AlternativeSpec alt;
    MarginalTransform transform = MarginalTransform::uniform;
    // Stream id for standalone draws; Monte Carlo drivers override it per
    // replicate.
    std::uint64_t stream = 0;

    void validate() const;
    std::string id() const;
};

// n pairs drawn from the spec, consuming the given generator. The mapping
// from RNG output to sample is fixed, so equal (seed, stream) means equal
// samples regardless of threading or call site.
PairedSample draw_sample_rng(const GeneratorSpec& spec, std::size_t n, Philox& rng);
PairedSample draw_sample(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed);

// Joint and marginal densities at one point, for univariate specs. The
// functional family needs sigma > 0 here (at sigma = 0 the pair has no joint
// density).
struct DensityValue {
    double joint = 0.0;
    double marginal_x = 0.0;
    double marginal_y = 0.0;
};
DensityValue density_at(const GeneratorSpec& spec, double x, double y);

} // namespace l1indep
