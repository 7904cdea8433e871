#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmdpair/data_model.hpp"
#include "mmdpair/missingness.hpp"
#include "mmdpair/rng.hpp"
#include "mmdpair/testing.hpp"

namespace mmdpair {

// ---------------------------------------------------------------------------
// Location-scale model on quantile functions
// ---------------------------------------------------------------------------
//
//   Q(t) = V1 + V2*eta(Z) + V2*tau(Z)*Q0(t),   Q0(t) = q0_intercept + q0_slope*t
//   eta(z) = a0 + a1*z,  tau(z) = b0 + b1*z
//   V1 = v1_shift + v1_scale*V1*,  V2 = v2_shift + v2_scale*V2*,
// with V1*, V2* uniform on (0,1); the transforms give E[V1]=0 and E[V2]=1.
struct LocationScaleModel {
    double a0 = 0.0, a1 = 0.3;
    double b0 = 0.0, b1 = 0.005;
    double q0_intercept = 70.0, q0_slope = 240.0;
    double v1_shift = -20.0, v1_scale = 40.0;
    double v2_shift = 0.8, v2_scale = 0.4;
    std::size_t grid_size = 100;                     // midpoint grid m
    QuantileFunction::GridPtr grid;                  // overrides grid_size when set

    double eta(double z) const { return a0 + a1 * z; }
    double tau(double z) const { return b0 + b1 * z; }
    QuantileFunction::GridPtr effective_grid() const {
        return grid ? grid : QuantileFunction::midpoint_grid(grid_size);
    }
};

enum class Mechanism { mcar, mar };

struct Range {
    double lo = 0.0, hi = 1.0;
};

// One simulation scenario (a study-table row at configurable scale).
struct ScenarioConfig {
    Mechanism mechanism = Mechanism::mcar;
    double rho = 0.0;            // cross-timepoint correlation of V1* and V2*, in [0,1)
    Range z1{30.0, 50.0};        // first-timepoint age range
    Range z2{30.0, 50.0};        // second-timepoint age range (U[50,70] = alternative)
    std::size_t n1 = 150, n2 = 150, n3 = 150;  // MCAR block sizes
    std::size_t n = 300;                        // MAR pair count
    std::size_t replications = 2000;
    int bootstrap = 2000;
    std::uint64_t seed = 1;
    LocationScaleModel model;

    // Test knobs (defaults mirror the test modules).
    std::optional<double> alpha;       // MCAR combination weight
    std::optional<double> l;
    std::optional<double> bandwidth;   // explicit sigma_sq; default median heuristic
    bool plus_one = false;
    double pi_floor = 0.01;            // MAR
    double ridge = 1e-6;               // MAR
    WeightMode mode = WeightMode::raw; // MAR
};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

// n pairs with U(0,1) marginals and Pearson correlation rho, via a Gaussian
// copula at Gaussian-level correlation r = 2*sin(pi*rho/6) (the exact inverse
// of the copula's uniform-correlation map).  Requires 0 <= rho < 1.
std::pair<std::vector<double>, std::vector<double>> correlated_uniforms(double rho, std::size_t n,
                                                                        RngStream& rng);

// Q from the model at (V1, V2, Z); errors DegenerateScale unless V2*tau(Z)>0.
QuantileFunction sample_quantile_obs(const LocationScaleModel& model, double v1, double v2,
                                     double z);

// MCAR dataset: n1 complete subjects whose (V1*, V2*) are rho-correlated
// across the two timepoints, plus n2/n3 incomplete subjects drawn i.i.d.
// First observations draw Z from z1, second observations from z2.
PairedDataset generate_mcar(const ScenarioConfig& config, RngStream& rng);

struct MarSample {
    PairedDataset data;
    // True observation probability per record with an observed first element
    // (complete block then first-only block): P(second element observed).
    std::vector<double> observe_prob;
};

// MAR dataset: n pairs generated like MCAR complete pairs; each pair's second
// element is dropped independently with probability sigmoid(1 - Y1 - Y2),
// Y1, Y2 fresh standard normals per subject.  `miss_prob_override`, when set,
// replaces that probability (e.g. a constant 0 forces a fully complete
// dataset).  Regenerates up to 10 times if no complete pair survives.
MarSample generate_mar(const ScenarioConfig& config, RngStream& rng,
                       const std::function<double(double, double)>* miss_prob_override = nullptr);

// ---------------------------------------------------------------------------
// Rejection-rate study
// ---------------------------------------------------------------------------

struct StudyDetail {
    std::size_t rep = 0;
    std::size_t n1 = 0, n2 = 0, n3 = 0;  // realized block sizes
    double statistic = 0.0;
    double p_value = 1.0;
};

struct StudyRow {
    ScenarioConfig config;
    double level = 0.05;
    double rejection_rate = 0.0;
    double mean_n1 = 0.0, mean_n2 = 0.0, mean_n3 = 0.0;
    std::vector<StudyDetail> details;  // one per replication, in order
};

// For each scenario: run `replications` independent replications (generate,
// test, record p), parallel across replications with derived seeds; the
// rejection rate is the fraction with p <= level.
std::vector<StudyRow> run_study(std::span<const ScenarioConfig> configs, double level,
                                unsigned threads);

}  // namespace mmdpair
