#include "parischain/model.hpp"
#include "parischain/errors.hpp"
#include "parischain/numerics.hpp"

#include <cmath>
#include <limits>

namespace parischain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double require(const Params& p, const std::string& key, const char* preset) {
    auto it = p.find(key);
    if (it == p.end())
        throw ConfigError("model." + key + " missing for preset " + preset);
    return it->second;
}

double require_positive(const Params& p, const std::string& key, const char* preset) {
    const double v = require(p, key, preset);
    if (!(v > 0.0))
        throw ConfigError("model." + key + " must be positive for preset " + preset);
    return v;
}

double get_or(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

// int_a^b z^k alpha e^{-alpha z} dz on 0 <= a <= b <= inf.
double exp_moment(int k, double alpha, double a, double b) {
    auto anti = [&](double z) -> double { // -F with F' = z^k alpha e^{-alpha z}
        if (std::isinf(z)) return 0.0;
        const double e = std::exp(-alpha * z);
        switch (k) {
            case 0: return e;
            case 1: return (z + 1.0 / alpha) * e;
            default: return (z * z + 2.0 * z / alpha + 2.0 / (alpha * alpha)) * e;
        }
    };
    return anti(a) - anti(b);
}

// int_a^b z^{k-1} e^{-alpha z} dz on 0 < a <= b <= inf (VG positive side,
// density C e^{-alpha z} / z).
double vg_side_moment(int k, double alpha, double a, double b) {
    if (k == 0) {
        const double upper = std::isinf(b) ? 0.0 : expint_e1(alpha * b);
        return expint_e1(alpha * a) - upper;
    }
    auto anti = [&](double z) -> double {
        if (std::isinf(z)) return 0.0;
        const double e = std::exp(-alpha * z);
        if (k == 1) return e / alpha;
        return (z / alpha + 1.0 / (alpha * alpha)) * e;
    };
    return anti(a) - anti(b);
}

double sign_pow(int k) { return k % 2 == 0 ? 1.0 : -1.0; }

ModelSpec make_bs(const Params& p) {
    ModelSpec m;
    m.name = "BS";
    const double sigma = require_positive(p, "sigma", "BS");
    m.risk_free = get_or(p, "r", 0.0);
    m.dividend = get_or(p, "d", 0.0);
    const double mu = m.risk_free - m.dividend - 0.5 * sigma * sigma;
    m.drift = [mu](double) { return mu; };
    m.vol = [sigma](double) { return sigma; };
    m.transform = StateTransform::exponential;
    m.scale_proxy = sigma;
    m.x0 = p.count("s0") ? std::log(require_positive(p, "s0", "BS"))
                         : get_or(p, "x0", 0.0);
    return m;
}

ModelSpec make_kou(const Params& p) {
    ModelSpec m;
    m.name = "KOU";
    const double sigma = require_positive(p, "sigma", "KOU");
    const double lambda = require_positive(p, "lambda", "KOU");
    // eta is the MEAN jump size; the exponential rate is its reciprocal
    const double eta_p = require_positive(p, "eta_plus", "KOU");
    const double eta_m = require_positive(p, "eta_minus", "KOU");
    const double p_up = require_positive(p, "p_plus", "KOU");
    const double p_dn = get_or(p, "p_minus", 1.0 - p_up);
    if (std::abs(p_up + p_dn - 1.0) > 1e-12)
        throw ConfigError("model.p_plus + model.p_minus must equal 1 for preset KOU");
    const double a_p = 1.0 / eta_p, a_m = 1.0 / eta_m;
    if (!(a_p > 1.0))
        throw ConfigError("model.eta_plus must be below 1 for preset KOU (E[e^J] finite)");
    m.risk_free = get_or(p, "r", 0.0);
    m.dividend = get_or(p, "d", 0.0);

    const double kappa = p_up * a_p / (a_p - 1.0) + p_dn * a_m / (a_m + 1.0) - 1.0;
    // compensator first moment restricted to |z| <= 1
    const double m1 = lambda * (p_up * exp_moment(1, a_p, 0.0, 1.0) -
                                p_dn * exp_moment(1, a_m, 0.0, 1.0));
    const double mu = m.risk_free - m.dividend - 0.5 * sigma * sigma - lambda * kappa + m1;
    m.drift = [mu](double) { return mu; };
    m.vol = [sigma](double) { return sigma; };
    m.transform = StateTransform::exponential;
    m.scale_proxy =
        std::sqrt(sigma * sigma +
                  lambda * 2.0 * (p_up * eta_p * eta_p + p_dn * eta_m * eta_m));
    m.x0 = p.count("s0") ? std::log(require_positive(p, "s0", "KOU"))
                         : get_or(p, "x0", 0.0);

    JumpSpec j;
    j.density = [lambda, p_up, p_dn, a_p, a_m](double, double z) {
        if (z > 0.0) return lambda * p_up * a_p * std::exp(-a_p * z);
        if (z < 0.0) return lambda * p_dn * a_m * std::exp(a_m * z);
        return 0.0;
    };
    j.partial_moment = [lambda, p_up, p_dn, a_p, a_m](double, double a, double b, int k) {
        double total = 0.0;
        if (b > 0.0) {
            const double lo = std::max(a, 0.0);
            total += lambda * p_up * exp_moment(k, a_p, lo, b);
        }
        if (a < 0.0) {
            const double hi = std::min(b, 0.0);
            total += sign_pow(k) * lambda * p_dn * exp_moment(k, a_m, -hi, -a);
        }
        return total;
    };
    m.jumps = std::move(j);
    return m;
}

ModelSpec make_vg(const Params& p) {
    ModelSpec m;
    m.name = "VG";
    const double sigma = require_positive(p, "sigma", "VG");
    const double nu = require_positive(p, "nu", "VG");
    const double theta = require(p, "theta", "VG");
    m.risk_free = get_or(p, "r", 0.0);
    m.dividend = get_or(p, "d", 0.0);
    const double eps = get_or(p, "eps", 1e-5);
    if (!(eps > 0.0)) throw ConfigError("model.eps must be positive for preset VG");

    const double w = std::sqrt(0.25 * theta * theta * nu * nu + 0.5 * sigma * sigma * nu);
    const double Gm = 1.0 / (w - 0.5 * theta * nu); // negative-jump decay
    const double Mp = 1.0 / (w + 0.5 * theta * nu); // positive-jump decay
    if (!(Mp > 1.0))
        throw ConfigError("model.theta/nu/sigma imply E[e^X] = inf for preset VG");
    const double C = 1.0 / nu;

    const double mart = 1.0 - theta * nu - 0.5 * sigma * sigma * nu;
    if (!(mart > 0.0))
        throw ConfigError("model parameters violate the VG martingale condition");
    const double mu_fv = m.risk_free - m.dividend + std::log(mart) / nu;
    // add the |z| <= 1 compensator of the full measure
    const double m1 = C * ((1.0 - std::exp(-Mp)) / Mp - (1.0 - std::exp(-Gm)) / Gm);
    const double mu = mu_fv + m1;

    // second moment of the removed small jumps becomes diffusion
    auto trunc2 = [](double alpha, double e) {
        return (1.0 - (1.0 + alpha * e) * std::exp(-alpha * e)) / (alpha * alpha);
    };
    const double sig_eps2 = C * (trunc2(Mp, eps) + trunc2(Gm, eps));
    const double vol = std::sqrt(sig_eps2);

    m.drift = [mu](double) { return mu; };
    m.vol = [vol](double) { return vol; };
    m.transform = StateTransform::exponential;
    m.scale_proxy = std::sqrt(sigma * sigma + nu * theta * theta);
    m.x0 = p.count("s0") ? std::log(require_positive(p, "s0", "VG"))
                         : get_or(p, "x0", 0.0);

    JumpSpec j;
    j.eps = eps;
    j.density = [C, Gm, Mp, eps](double, double z) {
        const double az = std::abs(z);
        if (az < eps) return 0.0;
        return C * std::exp(-(z > 0.0 ? Mp : Gm) * az) / az;
    };
    j.partial_moment = [C, Gm, Mp, eps](double, double a, double b, int k) {
        double total = 0.0;
        if (b > eps) {
            const double lo = std::max(a, eps);
            if (lo < b) total += C * vg_side_moment(k, Mp, lo, b);
        }
        if (a < -eps) {
            const double hi = std::min(b, -eps);
            if (a < hi) total += sign_pow(k) * C * vg_side_moment(k, Gm, -hi, -a);
        }
        return total;
    };
    m.jumps = std::move(j);
    return m;
}

ModelSpec make_bm(const Params& p) {
    ModelSpec m;
    m.name = "BM";
    const double sigma = get_or(p, "sigma", 1.0);
    const double mu = get_or(p, "mu", 0.0);
    if (!(sigma > 0.0)) throw ConfigError("model.sigma must be positive for preset BM");
    m.drift = [mu](double) { return mu; };
    m.vol = [sigma](double) { return sigma; };
    m.scale_proxy = sigma;
    m.x0 = get_or(p, "x0", 0.0);
    return m;
}

ModelSpec make_cir(const Params& p) {
    ModelSpec m;
    m.name = "CIR";
    const double kappa = require_positive(p, "kappa", "CIR");
    const double theta = require_positive(p, "theta", "CIR");
    const double sigma = require_positive(p, "sigma", "CIR");
    m.drift = [kappa, theta](double x) { return kappa * (theta - x); };
    m.vol = [sigma](double x) { return sigma * std::sqrt(std::max(x, 0.0)); };
    m.scale_proxy = sigma * std::sqrt(theta);
    m.x0 = get_or(p, "x0", theta);
    return m;
}

RegimeModel make_rs_bs(const Params& p) {
    RegimeModel rm;
    const double s1 = require_positive(p, "sigma1", "RS_BS");
    const double s2 = require_positive(p, "sigma2", "RS_BS");
    const double l12 = require_positive(p, "lambda12", "RS_BS");
    const double l21 = require_positive(p, "lambda21", "RS_BS");
    Params q1(p), q2(p);
    q1["sigma"] = s1;
    q2["sigma"] = s2;
    rm.regimes = {make_bs(q1), make_bs(q2)};
    rm.regime_generator = Mat::Zero(2, 2);
    rm.regime_generator << -l12, l12, l21, -l21;
    rm.x0 = rm.regimes[0].x0;
    rm.v0 = static_cast<int>(get_or(p, "v0", 0.0));
    if (rm.v0 < 0 || rm.v0 > 1)
        throw ConfigError("model.v0 must be 0 or 1 for preset RS_BS");
    return rm;
}

void validate_jump_integrability(const ModelSpec& m) {
    if (!m.has_jumps()) return;
    const double x = m.x0;
    const double small2 = jump_partial_moment(m, x, -1.0, 1.0, 2);
    const double tails = jump_mass(m, x, -kInf, -1.0) + jump_mass(m, x, 1.0, kInf);
    if (!std::isfinite(small2) || !std::isfinite(tails) || small2 < 0.0 || tails < 0.0)
        throw ConfigError("jump measure fails the (z^2 ^ 1)-integrability check");
}

} // namespace

Preset parse_preset(const std::string& name) {
    if (name == "BM") return Preset::BM;
    if (name == "BS") return Preset::BS;
    if (name == "KOU") return Preset::KOU;
    if (name == "VG") return Preset::VG;
    if (name == "RS_BS") return Preset::RS_BS;
    if (name == "CIR") return Preset::CIR;
    throw ConfigError("unknown model.type '" + name + "'");
}

std::variant<ModelSpec, RegimeModel> build_preset(Preset preset, const Params& params) {
    switch (preset) {
        case Preset::BM: return make_bm(params);
        case Preset::BS: return make_bs(params);
        case Preset::KOU: {
            ModelSpec m = make_kou(params);
            validate_jump_integrability(m);
            return m;
        }
        case Preset::VG: {
            ModelSpec m = make_vg(params);
            validate_jump_integrability(m);
            return m;
        }
        case Preset::CIR: return make_cir(params);
        case Preset::RS_BS: return make_rs_bs(params);
    }
    throw ConfigError("unhandled preset");
}

ModelSpec build_model_preset(Preset preset, const Params& params) {
    auto v = build_preset(preset, params);
    if (auto* m = std::get_if<ModelSpec>(&v)) return std::move(*m);
    throw UsageError("preset builds a regime model; use build_preset");
}

double jump_partial_moment(const ModelSpec& model, double x, double a, double b, int k) {
    if (!model.has_jumps()) return 0.0;
    if (!(a < b)) return 0.0;
    const JumpSpec& j = *model.jumps;
    if (j.partial_moment) return j.partial_moment(x, a, b, k);

    auto f = [&](double z) { return std::pow(z, k) * j.density(x, z); };
    // integrate piecewise around 0 and the truncation hole
    std::vector<double> cuts{a};
    for (double c : {-j.eps, 0.0, j.eps})
        if (c > a && c < b && (j.eps > 0.0 || c == 0.0)) cuts.push_back(c);
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        if (j.eps > 0.0 && lo >= -j.eps && hi <= j.eps) continue; // hole
        if (std::isinf(lo) && std::isinf(hi))
            throw DomainError("jump moment over the whole line: split at 0 first");
        if (std::isinf(hi))
            total += integrate_tail(f, lo);
        else if (std::isinf(lo))
            total += integrate_tail([&](double u) { return f(-u); }, -hi);
        else
            total += integrate(f, lo, hi);
    }
    return total;
}

double jump_mass(const ModelSpec& model, double x, double a, double b) {
    return jump_partial_moment(model, x, a, b, 0);
}

} // namespace parischain
