#pragma once

#include "epitwin/ad/ops.hpp"
#include "epitwin/dsl/ast.hpp"
#include "epitwin/sim/paramfield.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace epitwin::sim {

/// Contact structure and population of the metapopulation patches.
struct MetapopContext {
    ad::Tensor contact;    // (L, L), entries in [0, 1]
    ad::Tensor population; // (L), strictly positive

    std::size_t patches() const { return population.shape()[0]; }
    static MetapopContext identity(std::vector<double> population);
    static MetapopContext mixing(std::vector<double> population, double off_diagonal);
    void validate() const;
};

/// ModelSpec resolved against compartment/channel indices. Assumes the
/// spec carries no E-level findings; compile throws CONTRACT_ERROR on
/// references it cannot resolve.
struct CompiledModel {
    dsl::ModelSpec spec;
    std::vector<std::string> compartments;
    int foi_compartment = -1; // index fed to foi() when used
    bool uses_foi = false;

    struct FlowRef {
        int from = -1; // -1 for SOURCE/SINK
        int to = -1;
        dsl::ExprPtr rate;
    };
    std::vector<FlowRef> flows;
    dsl::ExprPtr observation;
    std::vector<dsl::ExprPtr> init; // per compartment, null = zero
};

CompiledModel compile(const dsl::ModelSpec& spec);

/// I_eff_j = sum_i C[i,j] * infected_i and N_eff_j likewise; the
/// contact-weighted counts a patch is exposed to after mixing.
std::pair<ad::Tensor, ad::Tensor> effective_infections(const MetapopContext& ctx,
                                                       const ad::Tensor& infected);

/// lambda_j = beta_t[j] * I_eff_j / max(N_eff_j, guard_epsilon).
ad::Tensor force_of_infection(const ad::Tensor& beta_t, const MetapopContext& ctx,
                              const ad::Tensor& infected);

/// Initial per-compartment states (L) from the init expressions.
std::vector<ad::Tensor> initial_state(const CompiledModel& model, const MetapopContext& ctx);

struct StepResult {
    std::vector<ad::Tensor> state;        // per compartment, (L)
    ad::Tensor observed;                  // (L), evaluated on the pre-step state
    double clamped_mass = 0.0;            // total mass created by clamping at zero
    std::vector<double> clamped_by_patch; // (L)
};

/// One Euler step with dt = 1; compartments clamp at zero with the
/// clamped mass recorded. Throws SIM_DIVERGENCE on non-finite states.
StepResult step(const CompiledModel& model, const MetapopContext& ctx,
                const std::vector<ad::Tensor>& state, const ad::Tensor& params_t);
StepResult step(const dsl::ModelSpec& spec, const MetapopContext& ctx,
                const std::vector<ad::Tensor>& state, const ad::Tensor& params_t);

struct StateTrajectory {
    std::vector<std::string> compartments;
    std::vector<ad::Tensor> states;       // per compartment, (T+1, L)
    ad::Tensor yhat;                      // (T, L)
    double clamped_mass = 0.0;
    std::vector<double> clamped_by_patch; // (L)
};

/// T Euler steps driven by params[:, t, :]; differentiable end to end
/// when the parameter field is tracked.
StateTrajectory simulate(const CompiledModel& model, const MetapopContext& ctx,
                         const ParamField& params, std::size_t horizon);
StateTrajectory simulate(const dsl::ModelSpec& spec, const MetapopContext& ctx,
                         const ParamField& params, std::size_t horizon);

/// Rows (patch, t, compartments..., yhat); yhat is empty on the final
/// state row. Column order follows the spec's compartment declaration.
std::string trajectory_csv(const StateTrajectory& traj);
void write_trajectory_csv(std::ostream& out, const StateTrajectory& traj);

} // namespace epitwin::sim
