#include "mlmcopt/config.hpp"

#include <fstream>
#include <json.hpp>

namespace mlmcopt {

using nlohmann::json;

void RunConfig::validate() const {
    problem.validate();
    optimizer.validate();
    if (method != "ncg" && method != "newton" && method != "both")
        throw std::invalid_argument("RunConfig: method must be ncg, newton or both");
    if (workers < 1) throw std::invalid_argument("RunConfig: workers must be >= 1");
    if (posthoc_samples < 2) throw std::invalid_argument("RunConfig: posthoc_samples must be >= 2");
    if (estimator.theta_split <= 0.0 || estimator.theta_split >= 1.0)
        throw std::invalid_argument("RunConfig: theta_split must be in (0,1)");
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    // constants shared by all experiments
    c.problem.covariance.lambda = 0.3;
    c.problem.covariance.n_kl = 500;
    c.problem.covariance.dim = 2;
    c.problem.hierarchy.m0 = 8;
    c.problem.hierarchy.dim = 2;
    c.problem.target = FieldSpec::box({0.25, 0.25}, {0.75, 0.75}, 1.0, 0.0);
    c.problem.control_mask = FieldSpec::constant(1.0);
    c.optimizer.q = 1.0;
    c.optimizer.eta = 0.2;
    c.optimizer.eps0 = 1e-2;

    std::string base = name;
    bool desk = false;
    if (base.size() > 5 && base.substr(base.size() - 5) == "-desk") {
        desk = true;
        base = base.substr(0, base.size() - 5);
    }
    if (base == "problem1") {
        c.problem.alpha = 1e-6;
        c.problem.gamma = 1.0;
        c.problem.covariance.sigma2 = 0.1;
        c.optimizer.tau = 1e-4;
    } else if (base == "problem2") {
        c.problem.alpha = 1e-5;
        c.problem.gamma = 0.0;
        c.problem.covariance.sigma2 = 0.5;
        c.optimizer.tau = 1e-4;
    } else if (base == "problem3") {
        c.problem.alpha = 1e-5;
        c.problem.gamma = 1.0;
        c.problem.covariance.sigma2 = 0.5;
        c.problem.reaction = Reaction::parse("exp");
        c.optimizer.tau = 5e-5;
    } else {
        throw std::invalid_argument("preset_config: unknown preset '" + name + "'");
    }
    if (desk) {
        c.problem.hierarchy.finest_level = 3;  // m = 8 .. 64
        c.optimizer.tau *= 10.0;
    } else {
        c.problem.hierarchy.finest_level = 5;  // m = 8 .. 256
    }
    return c;
}

namespace {

FieldSpec field_from_json(const json& j, const std::string& key) {
    FieldSpec f;
    std::string kind = j.value("kind", "constant");
    if (kind == "constant") {
        f = FieldSpec::constant(j.value("value", 0.0));
    } else if (kind == "box") {
        auto lo = j.value("lo", std::vector<double>{0.0, 0.0});
        auto hi = j.value("hi", std::vector<double>{1.0, 1.0});
        if (lo.size() != 2 || hi.size() != 2)
            throw std::invalid_argument("parse_config: " + key + ".lo/hi need two entries");
        f = FieldSpec::box({lo[0], lo[1]}, {hi[0], hi[1]}, j.value("inside", 1.0),
                           j.value("outside", 0.0));
    } else {
        throw std::invalid_argument("parse_config: unknown field kind '" + kind + "' in " + key);
    }
    for (const auto& item : j.items()) {
        const std::string& k = item.key();
        if (k != "kind" && k != "value" && k != "lo" && k != "hi" && k != "inside" && k != "outside")
            throw std::invalid_argument("parse_config: unknown key '" + key + "." + k + "'");
    }
    return f;
}

json field_to_json(const FieldSpec& f) {
    if (f.kind == FieldSpec::Kind::constant) return json{{"kind", "constant"}, {"value", f.value}};
    return json{{"kind", "box"},
                {"lo", std::vector<double>{f.lo[0], f.lo[1]}},
                {"hi", std::vector<double>{f.hi[0], f.hi[1]}},
                {"inside", f.inside},
                {"outside", f.outside}};
}

void apply_json(RunConfig& c, const json& j) {
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const json& v = item.value();
        if (key == "alpha") c.problem.alpha = v.get<double>();
        else if (key == "gamma") c.problem.gamma = v.get<double>();
        else if (key == "sigma2") c.problem.covariance.sigma2 = v.get<double>();
        else if (key == "lambda") c.problem.covariance.lambda = v.get<double>();
        else if (key == "n_kl") c.problem.covariance.n_kl = v.get<int>();
        else if (key == "kl_pool") c.kl_pool = v.get<int>();
        else if (key == "dim") {
            c.problem.covariance.dim = v.get<int>();
            c.problem.hierarchy.dim = v.get<int>();
        } else if (key == "m0") c.problem.hierarchy.m0 = v.get<int>();
        else if (key == "finest_level") c.problem.hierarchy.finest_level = v.get<int>();
        else if (key == "reaction") c.problem.reaction = Reaction::parse(v.get<std::string>());
        else if (key == "target") c.problem.target = field_from_json(v, key);
        else if (key == "control_mask") c.problem.control_mask = field_from_json(v, key);
        else if (key == "tau") c.optimizer.tau = v.get<double>();
        else if (key == "q") c.optimizer.q = v.get<double>();
        else if (key == "eta") c.optimizer.eta = v.get<double>();
        else if (key == "eps0") c.optimizer.eps0 = v.get<double>();
        else if (key == "k_max") c.optimizer.k_max = v.get<int>();
        else if (key == "s_init") c.optimizer.s_init = v.get<double>();
        else if (key == "refresh") c.optimizer.refresh = v.get<bool>();
        else if (key == "warmup_offset") c.estimator.warmup_offset = v.get<long>();
        else if (key == "warmup_scale") c.estimator.warmup_scale = v.get<long>();
        else if (key == "theta_split") c.estimator.theta_split = v.get<double>();
        else if (key == "variance_floor") c.estimator.variance_floor = v.get<double>();
        else if (key == "kappa") c.estimator.kappa = v.get<double>();
        else if (key == "budget_variance_test") c.estimator.budget_variance_test = v.get<bool>();
        else if (key == "sampler") {
            std::string s = v.get<std::string>();
            if (s == "v1") c.estimator.variant = VarianceSampler::shifted_chain;
            else if (s == "twoset") c.estimator.variant = VarianceSampler::twoset;
            else throw std::invalid_argument("parse_config: sampler must be 'v1' or 'twoset'");
        } else if (key == "method") c.method = v.get<std::string>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "out_dir") c.out_dir = v.get<std::string>();
        else if (key == "workers") c.workers = v.get<int>();
        else if (key == "posthoc_samples") c.posthoc_samples = v.get<long>();
        else if (key == "timing") c.timing = v.get<bool>();
        else if (key == "preset") {
            // informational echo from a saved config; must match if set
            if (!c.preset.empty() && v.get<std::string>() != c.preset)
                throw std::invalid_argument("parse_config: preset mismatch '" +
                                            v.get<std::string>() + "' vs '" + c.preset + "'");
        } else {
            throw std::invalid_argument("parse_config: unknown key '" + key + "'");
        }
    }
}

}  // namespace

RunConfig parse_config(const std::string& preset, const std::string& path,
                       const std::map<std::string, std::string>& overrides) {
    RunConfig c = preset.empty() ? RunConfig{} : preset_config(preset);
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("parse_config: cannot open " + path);
        json j = json::parse(is);
        apply_json(c, j);
    }
    if (!overrides.empty()) {
        json j;
        for (const auto& [key, value] : overrides) j[key] = json::parse(value);
        apply_json(c, j);
    }
    c.validate();
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["preset"] = c.preset;
    j["alpha"] = c.problem.alpha;
    j["gamma"] = c.problem.gamma;
    j["sigma2"] = c.problem.covariance.sigma2;
    j["lambda"] = c.problem.covariance.lambda;
    j["n_kl"] = c.problem.covariance.n_kl;
    j["kl_pool"] = c.kl_pool;
    j["dim"] = c.problem.hierarchy.dim;
    j["m0"] = c.problem.hierarchy.m0;
    j["finest_level"] = c.problem.hierarchy.finest_level;
    j["reaction"] = c.problem.reaction.name;
    j["target"] = field_to_json(c.problem.target);
    j["control_mask"] = field_to_json(c.problem.control_mask);
    j["tau"] = c.optimizer.tau;
    j["q"] = c.optimizer.q;
    j["eta"] = c.optimizer.eta;
    j["eps0"] = c.optimizer.eps0;
    j["k_max"] = c.optimizer.k_max;
    j["s_init"] = c.optimizer.s_init;
    j["refresh"] = c.optimizer.refresh;
    j["warmup_offset"] = c.estimator.warmup_offset;
    j["warmup_scale"] = c.estimator.warmup_scale;
    j["theta_split"] = c.estimator.theta_split;
    j["variance_floor"] = c.estimator.variance_floor;
    j["kappa"] = c.estimator.kappa;
    j["budget_variance_test"] = c.estimator.budget_variance_test;
    j["sampler"] = c.estimator.variant == VarianceSampler::twoset ? "twoset" : "v1";
    j["method"] = c.method;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    j["posthoc_samples"] = c.posthoc_samples;
    j["timing"] = c.timing;
    return j.dump(2) + "\n";
}

}  // namespace mlmcopt
