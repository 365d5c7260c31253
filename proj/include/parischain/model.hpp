#pragma once

#include "parischain/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace parischain {

enum class StateTransform { identity, exponential };

/// Jump measure of the model, with small jumps below `eps` already removed
/// (their second moment is folded into the diffusion coefficient by the
/// presets). `density(x, z)` is the Lebesgue density away from 0 and must be
/// zero inside (-eps, eps). `partial_moment(x, a, b, k)`, when present, is a
/// closed form for int_a^b z^k density(x, z) dz and is used instead of
/// quadrature.
struct JumpSpec {
    std::function<double(double x, double z)> density;
    double eps = 0.0;
    std::function<double(double x, double a, double b, int k)> partial_moment;
};

/// One-dimensional Markov model: drift, volatility and jump measure, plus the
/// state-to-price map.
struct ModelSpec {
    std::string name;
    std::function<double(double)> drift;
    std::function<double(double)> vol;
    std::optional<JumpSpec> jumps;
    StateTransform transform = StateTransform::identity;

    double x0 = 0.0;          // initial chain state
    double scale_proxy = 1.0; // localization scale (per-unit-time std dev)
    double risk_free = 0.0;
    double dividend = 0.0;

    bool has_jumps() const { return jumps.has_value(); }
    double price_of(double x) const {
        return transform == StateTransform::exponential ? std::exp(x) : x;
    }
    double state_of(double price) const {
        return transform == StateTransform::exponential ? std::log(price) : price;
    }
};

struct RegimeModel {
    std::vector<ModelSpec> regimes;
    Mat regime_generator; // m x m rate matrix, rows sum to zero
    double x0 = 0.0;
    int v0 = 0; // initial regime
};

enum class Preset { BM, BS, KOU, VG, RS_BS, CIR };

Preset parse_preset(const std::string& name);

using Params = std::map<std::string, double>;

/// Builds a preset parameterization. RS_BS yields a RegimeModel, everything
/// else a ModelSpec. Missing or nonpositive parameters raise ConfigError
/// naming the offending field.
std::variant<ModelSpec, RegimeModel> build_preset(Preset preset, const Params& params);

/// Convenience for presets known to be single-regime.
ModelSpec build_model_preset(Preset preset, const Params& params);

/// int_a^b z^k nu(x, dz) over the exposed jump density, k in {0, 1, 2}.
/// Infinite endpoints are allowed. Intervals overlapping the (-eps, eps) hole
/// are clipped to it.
double jump_partial_moment(const ModelSpec& model, double x, double a, double b, int k);

/// nu(x, [a, b)) -- the k = 0 moment.
double jump_mass(const ModelSpec& model, double x, double a, double b);

} // namespace parischain
