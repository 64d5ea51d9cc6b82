#pragma once

#include "epitwin/ad/tensor.hpp"
#include "epitwin/sim/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace epitwin::eval {

enum class Cadence { day, week };

const char* cadence_name(Cadence c);
Cadence cadence_from(const std::string& s);

/// Dense spatio-temporal signals D[l, t, f] with one declared target
/// feature (the observed series models are scored against).
struct Dataset {
    std::size_t L = 0, T = 0, d = 0;
    std::vector<double> values; // [l][t][f], row-major
    std::vector<std::string> feature_names;
    std::size_t target_feature = 0;
    Cadence cadence = Cadence::week;
    std::vector<double> population;
    ad::Tensor contact; // (L, L)
    std::string provenance;

    double at(std::size_t l, std::size_t t, std::size_t f) const
    {
        return values[(l * T + t) * d + f];
    }
    double& at_mut(std::size_t l, std::size_t t, std::size_t f)
    {
        return values[(l * T + t) * d + f];
    }

    sim::MetapopContext context() const;

    /// Copy of the window [t0, t0 + len); the temporal slice models
    /// train on.
    Dataset window(std::size_t t0, std::size_t len) const;

    /// Target series as a (T, L) tensor over [t0, t0 + len).
    ad::Tensor target_matrix(std::size_t t0, std::size_t len) const;

    double target(std::size_t l, std::size_t t) const { return at(l, t, target_feature); }
};

/// Load a dataset directory holding meta.json and data.csv (long form:
/// location,t,feature,value). Gaps are forward-filled then zero-filled
/// and noted in the provenance block.
Dataset ingest(const std::filesystem::path& dir);

/// Inverse of ingest for synthetic scenarios and tests.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

} // namespace epitwin::eval
