#pragma once

#include "epitwin/calib/calibnet.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace epitwin::agent {

/// Calibration hyperparameters a hybrid-mode candidate may tune.
/// Mechanistic mode locks these to the defaults.
struct CandidateConfig {
    std::size_t hidden = 32;
    calib::CellKind cell = calib::CellKind::gru;

    bool operator==(const CandidateConfig&) const = default;
    std::string canonical() const
    {
        return "hidden=" + std::to_string(hidden) + ";cell=" + calib::cell_name(cell);
    }
};

struct PopulationMember {
    std::string spec_text; // normalized (pretty-printed) form
    CandidateConfig config;
    double v = 0.0; // validation RMSE
    int generation = 0;
};

struct ErrEntry {
    int generation = 0;
    std::string code; // PARSE_ERROR, E2, SIM_DIVERGENCE, ...
    std::string message;
    std::string excerpt; // few lines of the candidate around the reported span
};

/// Agent-loop state at a generation: top-k population (ascending v),
/// append-only error log, and the latest reflection.
struct RunMemory {
    std::size_t k = 3;
    std::vector<PopulationMember> population;
    std::vector<ErrEntry> errors;
    std::string last_reflection;

    const PopulationMember* find(const std::string& spec_text, const CandidateConfig& cfg) const
    {
        for (const auto& m : population)
            if (m.spec_text == spec_text && m.config == cfg)
                return &m;
        return nullptr;
    }

    /// Keep the k lowest-v members; ties retain the earlier generation.
    void insert(PopulationMember member)
    {
        population.push_back(std::move(member));
        std::stable_sort(population.begin(), population.end(),
                         [](const PopulationMember& a, const PopulationMember& b) {
                             if (a.v != b.v)
                                 return a.v < b.v;
                             return a.generation < b.generation;
                         });
        if (population.size() > k)
            population.resize(k);
    }
};

} // namespace epitwin::agent
