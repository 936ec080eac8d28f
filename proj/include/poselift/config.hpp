#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "poselift/camera.hpp"
#include "poselift/errors.hpp"
#include "poselift/generator.hpp"
#include "poselift/losses.hpp"
#include "poselift/rng.hpp"
#include "poselift/synth.hpp"

namespace poselift {

/// Everything a run needs, with published defaults. Unknown keys are
/// rejected; the effective (defaults-filled) document hashes identically
/// regardless of key order in the input file.
struct RunConfig {
    std::uint64_t seed = 1;
    int frames = 27;
    int batch_size = 1024;
    int epochs_pretrain = 40;
    int epochs_adapt = 30;
    double lr_gen_dis = 1e-4;
    double lr_estimator = 5e-5;
    double lr_pretrain = 5e-5;  // source pretraining may need a hotter rate at desk scale
    double alpha = 0.35;
    double beta = 2.5;
    double gamma = 2.5;
    double ema_eta = 0.99;
    std::string penalty_mode = "standard-gp";
    bool swap_critic_sign = false;
    bool couple_estimator_to_critic = false;
    double pixel_scale = 500.0;
    int estimator_channels = 128;
    int discriminator_hidden = 128;

    struct Diffusion {
        int T = 400;
        int steps = 40;
        double eta = 0.2;
        int epochs = 10;
        double lr = 2e-4;
        int batch_size = 64;
        int hidden = 128;
        int depth = 3;
        int pool_size = 256;
    } diffusion;

    GeneratorConfig generator;

    struct Ablation {
        bool ps = true;
        bool te = true;
        bool de = true;
        bool ema = true;
        bool ldis = true;
    } ablation;

    Camera camera;  // source camera, used for every projection

    struct DataSpec {
        std::string name;
        // either a synthetic spec...
        bool is_synth = false;
        SynthDomainSpec synth;
        int n_clips = 2000;
        // ...or pose files
        std::string pose2d, pose3d;
    };
    DataSpec source;
    std::vector<DataSpec> targets;

    std::string out_dir = "runs";

    static nlohmann::json default_json();
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
    nlohmann::json to_json() const;

    std::uint64_t hash() const { return fnv1a(to_json().dump()); }
    std::string hash_hex() const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash());
        return buf;
    }
    std::string run_dir() const {
        return out_dir + "/" + hash_hex().substr(0, 12) + "-s" + std::to_string(seed);
    }
};

namespace config_detail {

inline void check_known_keys(const nlohmann::json& doc, const nlohmann::json& schema,
                             const std::string& prefix) {
    if (!doc.is_object()) throw ConfigError(prefix + ": expected an object");
    for (const auto& [key, value] : doc.items()) {
        if (!schema.contains(key))
            throw ConfigError("unknown config key: " + prefix + key);
        if (schema.at(key).is_object() && !schema.at(key).empty() && value.is_object())
            check_known_keys(value, schema.at(key), prefix + key + ".");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config field " + key + ": " + e.what());
    }
}

inline RunConfig::DataSpec data_spec_from_json(const nlohmann::json& j,
                                               const std::string& where) {
    static const nlohmann::json schema = {
        {"name", ""}, {"synth", nlohmann::json::object()}, {"n_clips", 0},
        {"pose2d", ""}, {"pose3d", ""}};
    check_known_keys(j, schema, where + ".");
    RunConfig::DataSpec d;
    d.name = get_or<std::string>(j, "name", "");
    d.n_clips = get_or<int>(j, "n_clips", 2000);
    if (j.contains("synth")) {
        d.is_synth = true;
        nlohmann::json s = j.at("synth");
        if (!s.contains("name")) s["name"] = d.name;
        d.synth = SynthDomainSpec::from_json(s);
        if (d.name.empty()) d.name = d.synth.name;
    } else {
        d.pose2d = get_or<std::string>(j, "pose2d", "");
        d.pose3d = get_or<std::string>(j, "pose3d", "");
        if (d.pose2d.empty()) throw ConfigError(where + ": needs synth or pose2d");
        if (d.name.empty()) throw ConfigError(where + ": file-backed domains need a name");
    }
    return d;
}

inline nlohmann::json data_spec_to_json(const RunConfig::DataSpec& d) {
    nlohmann::json j{{"name", d.name}};
    if (d.is_synth) {
        j["synth"] = d.synth.to_json();
        j["n_clips"] = d.n_clips;
    } else {
        j["pose2d"] = d.pose2d;
        j["pose3d"] = d.pose3d;
    }
    return j;
}

}  // namespace config_detail

inline nlohmann::json RunConfig::default_json() {
    RunConfig c;
    nlohmann::json j = c.to_json();
    j["data"] = {{"source", nlohmann::json::object()},
                 {"targets", nlohmann::json::array()}};
    return j;
}

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["frames"] = frames;
    j["batch_size"] = batch_size;
    j["epochs_pretrain"] = epochs_pretrain;
    j["epochs_adapt"] = epochs_adapt;
    j["lr_gen_dis"] = lr_gen_dis;
    j["lr_estimator"] = lr_estimator;
    j["lr_pretrain"] = lr_pretrain;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["gamma"] = gamma;
    j["ema_eta"] = ema_eta;
    j["penalty_mode"] = penalty_mode;
    j["swap_critic_sign"] = swap_critic_sign;
    j["couple_estimator_to_critic"] = couple_estimator_to_critic;
    j["pixel_scale"] = pixel_scale;
    j["estimator_channels"] = estimator_channels;
    j["discriminator_hidden"] = discriminator_hidden;
    j["diffusion"] = {{"T", diffusion.T},           {"steps", diffusion.steps},
                      {"eta", diffusion.eta},       {"epochs", diffusion.epochs},
                      {"lr", diffusion.lr},         {"batch_size", diffusion.batch_size},
                      {"hidden", diffusion.hidden}, {"depth", diffusion.depth},
                      {"pool_size", diffusion.pool_size}};
    j["generator"] = {{"hidden", generator.hidden},
                      {"embed_jc", generator.embed_jc},
                      {"embed_bv", generator.embed_bv},
                      {"embed_ps_per_segment", generator.embed_ps_per_segment},
                      {"embed_te", generator.embed_te},
                      {"embed_de", generator.embed_de},
                      {"angle_gain", generator.angle_gain},
                      {"translation_gain", generator.translation_gain},
                      {"chain_order", generator.chain_order}};
    j["ablation"] = {{"ps", ablation.ps},
                     {"te", ablation.te},
                     {"de", ablation.de},
                     {"ema", ablation.ema},
                     {"ldis", ablation.ldis}};
    j["camera"] = camera.to_json();
    nlohmann::json data{{"source", config_detail::data_spec_to_json(source)},
                        {"targets", nlohmann::json::array()}};
    for (const auto& t : targets) data["targets"].push_back(config_detail::data_spec_to_json(t));
    j["data"] = data;
    j["out_dir"] = out_dir;
    return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    using config_detail::get_or;
    config_detail::check_known_keys(j, default_json(), "");
    RunConfig c;
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.frames = get_or<int>(j, "frames", c.frames);
    c.batch_size = get_or<int>(j, "batch_size", c.batch_size);
    c.epochs_pretrain = get_or<int>(j, "epochs_pretrain", c.epochs_pretrain);
    c.epochs_adapt = get_or<int>(j, "epochs_adapt", c.epochs_adapt);
    c.lr_gen_dis = get_or<double>(j, "lr_gen_dis", c.lr_gen_dis);
    c.lr_estimator = get_or<double>(j, "lr_estimator", c.lr_estimator);
    c.lr_pretrain = get_or<double>(j, "lr_pretrain",
                                   j.contains("lr_estimator") ? c.lr_estimator : c.lr_pretrain);
    c.alpha = get_or<double>(j, "alpha", c.alpha);
    c.beta = get_or<double>(j, "beta", c.beta);
    c.gamma = get_or<double>(j, "gamma", c.gamma);
    c.ema_eta = get_or<double>(j, "ema_eta", c.ema_eta);
    c.penalty_mode = get_or<std::string>(j, "penalty_mode", c.penalty_mode);
    penalty_mode_from_string(c.penalty_mode);  // validates
    c.swap_critic_sign = get_or<bool>(j, "swap_critic_sign", c.swap_critic_sign);
    c.couple_estimator_to_critic =
        get_or<bool>(j, "couple_estimator_to_critic", c.couple_estimator_to_critic);
    c.pixel_scale = get_or<double>(j, "pixel_scale", c.pixel_scale);
    c.estimator_channels = get_or<int>(j, "estimator_channels", c.estimator_channels);
    c.discriminator_hidden = get_or<int>(j, "discriminator_hidden", c.discriminator_hidden);
    if (j.contains("diffusion")) {
        const auto& d = j.at("diffusion");
        c.diffusion.T = get_or<int>(d, "T", c.diffusion.T);
        c.diffusion.steps = get_or<int>(d, "steps", c.diffusion.steps);
        c.diffusion.eta = get_or<double>(d, "eta", c.diffusion.eta);
        c.diffusion.epochs = get_or<int>(d, "epochs", c.diffusion.epochs);
        c.diffusion.lr = get_or<double>(d, "lr", c.diffusion.lr);
        c.diffusion.batch_size = get_or<int>(d, "batch_size", c.diffusion.batch_size);
        c.diffusion.hidden = get_or<int>(d, "hidden", c.diffusion.hidden);
        c.diffusion.depth = get_or<int>(d, "depth", c.diffusion.depth);
        c.diffusion.pool_size = get_or<int>(d, "pool_size", c.diffusion.pool_size);
    }
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        c.generator.hidden = get_or<int>(g, "hidden", c.generator.hidden);
        c.generator.embed_jc = get_or<int>(g, "embed_jc", c.generator.embed_jc);
        c.generator.embed_bv = get_or<int>(g, "embed_bv", c.generator.embed_bv);
        c.generator.embed_ps_per_segment =
            get_or<int>(g, "embed_ps_per_segment", c.generator.embed_ps_per_segment);
        c.generator.embed_te = get_or<int>(g, "embed_te", c.generator.embed_te);
        c.generator.embed_de = get_or<int>(g, "embed_de", c.generator.embed_de);
        c.generator.angle_gain = get_or<double>(g, "angle_gain", c.generator.angle_gain);
        c.generator.translation_gain =
            get_or<double>(g, "translation_gain", c.generator.translation_gain);
        c.generator.chain_order = get_or<std::string>(g, "chain_order", c.generator.chain_order);
        if (c.generator.chain_order != "bones_first" && c.generator.chain_order != "rigid_first")
            throw ConfigError("generator.chain_order must be bones_first or rigid_first");
    }
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        c.ablation.ps = get_or<bool>(a, "ps", true);
        c.ablation.te = get_or<bool>(a, "te", true);
        c.ablation.de = get_or<bool>(a, "de", true);
        c.ablation.ema = get_or<bool>(a, "ema", true);
        c.ablation.ldis = get_or<bool>(a, "ldis", true);
    }
    c.generator.enable_ps = c.ablation.ps;
    c.generator.enable_te = c.ablation.te;
    c.generator.enable_de = c.ablation.de;
    if (j.contains("camera")) c.camera = Camera::from_json(j.at("camera"));
    if (j.contains("data")) {
        const auto& d = j.at("data");
        config_detail::check_known_keys(
            d, {{"source", nlohmann::json::object()}, {"targets", nlohmann::json::array()}},
            "data.");
        if (d.contains("source"))
            c.source = config_detail::data_spec_from_json(d.at("source"), "data.source");
        if (d.contains("targets"))
            for (std::size_t i = 0; i < d.at("targets").size(); ++i)
                c.targets.push_back(config_detail::data_spec_from_json(
                    d.at("targets")[i], "data.targets[" + std::to_string(i) + "]"));
    }
    c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir);

    // range validation
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("config validation: " + what);
    };
    require(c.frames >= 3 && c.frames % 2 == 1, "frames must be odd and >= 3");
    require(c.batch_size >= 1, "batch_size must be >= 1");
    require(c.epochs_pretrain >= 0 && c.epochs_adapt >= 0, "epochs must be >= 0");
    require(c.lr_gen_dis > 0 && c.lr_estimator > 0 && c.lr_pretrain > 0,
            "learning rates must be positive");
    require(c.alpha >= 0 && c.beta >= 0 && c.gamma >= 0, "loss weights must be >= 0");
    require(c.ema_eta >= 0.0 && c.ema_eta <= 1.0, "ema_eta must be in [0,1]");
    require(c.pixel_scale > 0, "pixel_scale must be positive");
    require(c.diffusion.T >= 1, "diffusion.T must be >= 1");
    require(c.diffusion.steps >= 0 && c.diffusion.steps <= c.diffusion.T,
            "diffusion.steps must be in [0, T]");
    require(c.diffusion.eta >= 0.0 && c.diffusion.eta <= 1.0, "diffusion.eta must be in [0,1]");
    require(c.diffusion.pool_size >= 1 || !c.ablation.de,
            "diffusion.pool_size must be positive while DE is enabled");
    return c;
}

inline RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace poselift
