#include "qmest/estimate.hpp"

#include "qmest/bc.hpp"
#include "qmest/formula.hpp"
#include "qmest/qe.hpp"

namespace qmest {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::luo_wan: return "luo_wan";
        case Method::qe: return "qe";
        case Method::bc: return "bc";
        case Method::abc: return "abc";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

EstimateResult estimate(const QuantileSummary& summary, Method method,
                        const EstimatorConfig& config) {
    EstimateResult out;
    out.method = method;
    switch (method) {
        case Method::luo_wan: {
            require_valid(summary);
            const auto [shifted, record] = apply_shift(summary, config.shift);
            out.mean = luo_mean(shifted) - record.c;
            out.sd = wan_sd(shifted);
            out.shift = record;
            break;
        }
        case Method::qe: {
            const auto r = qe_estimate(summary, config.shift);
            out.mean = r.mean;
            out.sd = r.sd;
            out.shift = r.shift;
            out.selected = r.selected;
            out.objective = r.objective;
            break;
        }
        case Method::bc: {
            BcOptions opt;
            opt.mc_draws = config.mc_draws;
            opt.seed = config.seed;
            opt.shift = config.shift;
            const auto r = bc_estimate(summary, opt);
            out.mean = r.mean;
            out.sd = r.sd;
            out.shift = r.shift;
            out.lambda = r.lambda;
            out.heavy_truncation = r.heavy_truncation;
            break;
        }
        case Method::abc: {
            AbcConfig cfg;
            cfg.n_iter = config.abc_n_iter;
            cfg.accept_fraction = config.abc_accept_fraction;
            cfg.seed = config.seed;
            cfg.shift = config.shift;
            cfg.threads = config.threads;
            const auto r = abc_estimate(summary, cfg);
            out.mean = r.mean;
            out.sd = r.sd;
            out.shift = r.shift;
            out.selected = r.params;
            out.posterior_prob = r.posterior_prob;
            break;
        }
    }
    return out;
}

}  // namespace qmest
