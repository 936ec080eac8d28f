#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "poselift/adversarial.hpp"
#include "poselift/checkpoint.hpp"
#include "poselift/config.hpp"
#include "poselift/domain.hpp"
#include "poselift/ema.hpp"
#include "poselift/metrics.hpp"

namespace poselift {

struct DomainEval {
    std::string name;
    double mpjpe = 0.0;
    double pa_mpjpe = 0.0;
    int clips = 0;
};

/// Per-phase evaluation over every domain seen so far. Phase 0 is the
/// source-only baseline over all targets.
struct EvaluationReport {
    int phase = 0;
    std::string model_tag;  // "source-only" or "anchor"
    std::vector<DomainEval> domains;
    double avg_mpjpe = 0.0;
    double avg_pa_mpjpe = 0.0;
    std::string config_hash;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json d = nlohmann::json::array();
        for (const auto& e : domains)
            d.push_back({{"name", e.name},
                         {"mpjpe", e.mpjpe},
                         {"pa_mpjpe", e.pa_mpjpe},
                         {"clips", e.clips}});
        return {{"phase", phase},         {"model", model_tag},
                {"domains", d},           {"avg_mpjpe", avg_mpjpe},
                {"avg_pa_mpjpe", avg_pa_mpjpe}, {"config_hash", config_hash},
                {"seed", seed}};
    }
    static EvaluationReport from_json(const nlohmann::json& j) {
        EvaluationReport r;
        r.phase = j.at("phase").get<int>();
        r.model_tag = j.at("model").get<std::string>();
        for (const auto& d : j.at("domains"))
            r.domains.push_back({d.at("name").get<std::string>(), d.at("mpjpe").get<double>(),
                                 d.at("pa_mpjpe").get<double>(), d.at("clips").get<int>()});
        r.avg_mpjpe = j.at("avg_mpjpe").get<double>();
        r.avg_pa_mpjpe = j.at("avg_pa_mpjpe").get<double>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    }
};

/// MPJPE drift on a past domain: error at phase j minus error right after
/// adapting to that domain.
struct ForgettingRecord {
    int domain = 0;  // d
    int phase = 0;   // j > d
    double value = 0.0;
};

/// Streamed line-delimited loss records.
class RunLog {
public:
    RunLog() = default;
    explicit RunLog(const std::string& path) {
        os_.open(path, std::ios::app);
        if (!os_) throw FormatError("cannot open run log: " + path);
    }
    void record(int step, int phase, const std::string& name, double value) {
        if (!os_.is_open()) return;
        nlohmann::json j{{"step", step}, {"phase", phase}, {"loss", name}, {"value", value}};
        os_ << j.dump() << "\n";
    }
    void flush() {
        if (os_.is_open()) os_.flush();
    }

private:
    std::ofstream os_;
};

/// Full training state between phases. Generator and discriminator
/// parameters cross phases directly; the estimator crosses only through
/// the EMA handoff; the sampler carries theta_j.
struct AdaptationState {
    LiftingModel anchor;
    GeneratorBundle generators;
    ParamModel discriminator;
    NoisePredictor sampler;
    int completed_phase = 0;
    std::vector<EvaluationReport> reports;
    std::vector<ForgettingRecord> forgetting;

    std::uint64_t state_hash() const {
        std::uint64_t h = anchor.net.param_hash();
        h ^= mix64(generators.param_hash());
        h ^= mix64(discriminator.param_hash());
        h ^= mix64(sampler.net.param_hash());
        return mix64(h + static_cast<std::uint64_t>(completed_phase));
    }
};

// ---- evaluation -------------------------------------------------------------

/// Prediction error of `model` on the labeled evaluation set: root-centered
/// MPJPE / PA-MPJPE averaged over clips.
inline DomainEval evaluate_domain(const LiftingModel& model, const ClipSet& eval_set) {
    if (!eval_set.labeled()) throw MissingLabels("evaluate_domain: " + eval_set.name);
    DomainEval out;
    out.name = eval_set.name;
    out.clips = static_cast<int>(eval_set.clips2d.size());
    const std::vector<Pose3D> preds = predict_batch(model, eval_set.clips2d);
    double acc_m = 0.0, acc_p = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Pose3D gt = root_center(eval_set.clips3d[i].center());
        const Pose3D pr = root_center(preds[i]);
        acc_m += mpjpe(pr, gt);
        acc_p += pa_mpjpe(pr, gt);
    }
    out.mpjpe = acc_m / preds.size();
    out.pa_mpjpe = acc_p / preds.size();
    return out;
}

/// Evaluate the given domains (1-based target indices) with one model.
inline EvaluationReport evaluate_all(const LiftingModel& model, DomainStream& stream,
                                     const std::vector<int>& domains, int phase,
                                     const std::string& tag, const RunConfig& cfg) {
    EvaluationReport r;
    r.phase = phase;
    r.model_tag = tag;
    r.config_hash = cfg.hash_hex();
    r.seed = cfg.seed;
    for (int d : domains) r.domains.push_back(evaluate_domain(model, stream.evaluation(d)));
    double am = 0.0, ap = 0.0;
    for (const auto& e : r.domains) {
        am += e.mpjpe;
        ap += e.pa_mpjpe;
    }
    r.avg_mpjpe = r.domains.empty() ? 0.0 : am / r.domains.size();
    r.avg_pa_mpjpe = r.domains.empty() ? 0.0 : ap / r.domains.size();
    return r;
}

// ---- phase adaptation --------------------------------------------------------

namespace orch_detail {

inline std::vector<Pose2D> center_frames_2d(const ClipSet& set) {
    std::vector<Pose2D> out;
    out.reserve(set.clips2d.size());
    for (const auto& c : set.clips2d) out.push_back(c.center());
    return out;
}

inline ChainSettings chain_settings(const RunConfig& cfg) {
    ChainSettings s;
    s.camera = cfg.camera;
    s.pixel_scale = cfg.pixel_scale;
    s.weights = LossWeights{cfg.alpha, cfg.beta, cfg.gamma};
    s.penalty = penalty_mode_from_string(cfg.penalty_mode);
    s.swap_critic_sign = cfg.swap_critic_sign;
    s.couple_estimator_to_critic = cfg.couple_estimator_to_critic;
    s.use_ldis = cfg.ablation.ldis;
    s.frames = cfg.frames;
    return s;
}

}  // namespace orch_detail

/// One adaptation phase on tg_j: the alternating two-step update over the
/// target's unlabeled 2D clips, the parallel sampler refresh, and the EMA
/// handoff. Seeded by hash(run seed, phase).
inline AdaptationState adapt_phase(const AdaptationState& in, DomainStream& stream, int j,
                                   const RunConfig& cfg, RunLog* log = nullptr) {
    stream.begin_phase(j);
    const ClipSet& tg = stream.target_training(j);
    if (tg.clips2d.empty()) throw EmptyDomain("adapt_phase: target " + tg.name + " is empty");

    const std::uint64_t phase_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(j));
    Rng batch_rng(derive_seed(phase_seed, 1));
    const SkeletonGraph sg(canonical_skeleton());
    const ChainSettings settings = orch_detail::chain_settings(cfg);
    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion.T);

    // Domain-aware priors come from the sampler trained through phase j-1.
    PriorPool pool;
    if (cfg.ablation.de)
        pool = sampler_pool(in.sampler, sched, static_cast<std::size_t>(cfg.diffusion.pool_size),
                            cfg.diffusion.steps, cfg.diffusion.eta, derive_seed(phase_seed, 2));

    AdversarialModels live{in.anchor, in.generators, in.discriminator};
    std::vector<OptimizerState> gen_opts;
    OptimizerState est_opt = OptimizerState::adamw(cfg.lr_estimator);
    OptimizerState disc_opt = OptimizerState::adam(cfg.lr_gen_dis);
    for (std::size_t m = 0; m < live.generators.models().size(); ++m)
        gen_opts.push_back(OptimizerState::adam(cfg.lr_gen_dis));

    const std::size_t n = tg.clips2d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    const int joints = in.anchor.joints;
    int step = 0;
    for (int e = 0; e < cfg.epochs_adapt; ++e) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[batch_rng.below(i)]);
        for (std::size_t start = 0; start < n;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Clip2D> clips;
            clips.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) clips.push_back(tg.clips2d[order[i]]);
            std::vector<Pose2D> priors;
            priors.reserve(clips.size());
            for (std::size_t i = 0; i < clips.size(); ++i)
                priors.push_back(cfg.ablation.de ? pool.draw(batch_rng) : Pose2D(joints));

            ChainBatch batch = make_chain_batch(clips, priors, live.estimator.norm, batch_rng);
            ChainLosses lg = generator_step(live, batch, settings, sg, gen_opts);
            ChainLosses ldp =
                estimator_discriminator_step(live, batch, settings, sg, est_opt, disc_opt);
            if (log) {
                log->record(step, j, "L_G", lg.total);
                log->record(step, j, "L_3D", lg.l3d);
                log->record(step, j, "L_DP", ldp.total);
                log->record(step, j, "L_2D", ldp.l2d);
                log->record(step, j, "L_dis", ldp.ldis);
            }
            ++step;
        }
    }

    // Sampler refresh on the current domain (runs alongside adaptation in
    // the protocol; consumed only from phase j+1 on).
    Rng sampler_rng(derive_seed(phase_seed, 3));
    NoisePredictor theta_j =
        train_sampler(orch_detail::center_frames_2d(tg), in.sampler, sched,
                      cfg.diffusion.epochs, cfg.diffusion.batch_size, cfg.diffusion.lr,
                      sampler_rng);

    AdaptationState out = in;
    const double eta = cfg.ablation.ema ? cfg.ema_eta : 0.0;
    out.anchor.net = ema_update(EmaPair{in.anchor.net, live.estimator.net, eta});
    out.generators = std::move(live.generators);
    out.discriminator = std::move(live.discriminator);
    out.sampler = std::move(theta_j);
    out.completed_phase = j;
    if (log) log->flush();
    return out;
}

// ---- report rendering ---------------------------------------------------------

/// Aligned text table over the full target list; unseen domains print "-".
inline std::string render_report_table(const std::vector<EvaluationReport>& reports,
                                       const std::vector<std::string>& all_targets) {
    auto cell = [](double m, double p) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.1f/%.1f", m, p);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"Time", "Method"};
    for (const auto& t : all_targets) head.push_back(t);
    head.push_back("Avg");
    rows.push_back(head);
    for (const auto& r : reports) {
        std::vector<std::string> row;
        row.push_back("t = " + std::to_string(r.phase));
        row.push_back(r.model_tag);
        for (const auto& t : all_targets) {
            std::string v = "-";
            for (const auto& d : r.domains)
                if (d.name == t) v = cell(d.mpjpe, d.pa_mpjpe);
            row.push_back(v);
        }
        row.push_back(r.domains.empty() ? "-" : cell(r.avg_mpjpe, r.avg_pa_mpjpe));
        rows.push_back(row);
    }
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            out += std::string(width[c] - row[c].size() + 2, ' ');
        }
        out += "\n";
    }
    return out;
}

inline std::string render_report_records(const std::vector<EvaluationReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        for (const auto& d : r.domains) {
            nlohmann::json j{{"phase", r.phase},   {"model", r.model_tag},
                             {"domain", d.name},   {"mpjpe", d.mpjpe},
                             {"pa_mpjpe", d.pa_mpjpe}, {"config_hash", r.config_hash},
                             {"seed", r.seed}};
            out += j.dump() + "\n";
        }
    }
    return out;
}

// ---- state persistence ----------------------------------------------------------

namespace orch_detail {

inline void save_bundle(const std::string& path, const GeneratorBundle& b) {
    ParamModel flat;
    nlohmann::json descs = nlohmann::json::array();
    int mi = 0;
    for (const ParamModel* m : b.models()) {
        descs.push_back(m->desc);
        char prefix[16];
        std::snprintf(prefix, sizeof(prefix), "m%02d.", mi++);
        for (const auto& [name, t] : m->params) flat.params.emplace_back(prefix + name, t);
    }
    flat.desc = {{"kind", "generator-bundle"}, {"models", descs}};
    nlohmann::json manifest{{"generator_config",
                             {{"hidden", b.cfg.hidden},
                              {"embed_jc", b.cfg.embed_jc},
                              {"embed_bv", b.cfg.embed_bv},
                              {"embed_ps_per_segment", b.cfg.embed_ps_per_segment},
                              {"embed_te", b.cfg.embed_te},
                              {"embed_de", b.cfg.embed_de},
                              {"angle_gain", b.cfg.angle_gain},
                              {"translation_gain", b.cfg.translation_gain},
                              {"chain_order", b.cfg.chain_order},
                              {"enable_ps", b.cfg.enable_ps},
                              {"enable_te", b.cfg.enable_te},
                              {"enable_de", b.cfg.enable_de}}}};
    save_checkpoint(path, flat, manifest);
}

inline GeneratorBundle load_bundle(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    GeneratorBundle b;
    const auto& g = ck.manifest.at("generator_config");
    b.cfg.hidden = g.at("hidden").get<int>();
    b.cfg.embed_jc = g.at("embed_jc").get<int>();
    b.cfg.embed_bv = g.at("embed_bv").get<int>();
    b.cfg.embed_ps_per_segment = g.at("embed_ps_per_segment").get<int>();
    b.cfg.embed_te = g.at("embed_te").get<int>();
    b.cfg.embed_de = g.at("embed_de").get<int>();
    b.cfg.angle_gain = g.at("angle_gain").get<double>();
    b.cfg.translation_gain = g.at("translation_gain").get<double>();
    b.cfg.chain_order = g.at("chain_order").get<std::string>();
    b.cfg.enable_ps = g.at("enable_ps").get<bool>();
    b.cfg.enable_te = g.at("enable_te").get<bool>();
    b.cfg.enable_de = g.at("enable_de").get<bool>();
    b.enc_ps.resize(6);
    const auto descs = ck.model.desc.at("models");
    auto model_ptrs = b.models();
    if (descs.size() != model_ptrs.size()) throw FormatError("bundle model count mismatch");
    std::size_t cursor = 0;
    for (std::size_t m = 0; m < model_ptrs.size(); ++m) {
        model_ptrs[m]->desc = descs[m];
        while (cursor < ck.model.params.size()) {
            const auto& [name, t] = ck.model.params[cursor];
            char prefix[16];
            std::snprintf(prefix, sizeof(prefix), "m%02zu.", m);
            if (name.rfind(prefix, 0) != 0) break;
            model_ptrs[m]->params.emplace_back(name.substr(4), t);
            ++cursor;
        }
    }
    if (cursor != ck.model.params.size()) throw FormatError("bundle parameter mismatch");
    return b;
}

}  // namespace orch_detail

inline void save_state(const std::string& dir, const AdaptationState& st,
                       const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json est_manifest{{"version", 1},
                                {"seed", cfg.seed},
                                {"step", st.completed_phase},
                                {"config_hash", cfg.hash_hex()},
                                {"frames", st.anchor.frames},
                                {"joints", st.anchor.joints},
                                {"normalize", st.anchor.norm.to_json()}};
    save_checkpoint(dir + "/estimator.ckpt", st.anchor.net, est_manifest);
    orch_detail::save_bundle(dir + "/generators.ckpt", st.generators);
    save_checkpoint(dir + "/discriminator.ckpt", st.discriminator,
                    {{"version", 1}, {"seed", cfg.seed}, {"config_hash", cfg.hash_hex()}});
    nlohmann::json samp_manifest{{"version", 1},
                                 {"seed", cfg.seed},
                                 {"config_hash", cfg.hash_hex()},
                                 {"joints", st.sampler.joints},
                                 {"t_embed_dim", st.sampler.t_embed_dim},
                                 {"norm_rms", st.sampler.norm_rms},
                                 {"trained", st.sampler.trained},
                                 {"schedule_hash", st.sampler.schedule_hash},
                                 {"domains_seen", st.sampler.domains_seen}};
    save_checkpoint(dir + "/sampler.ckpt", st.sampler.net, samp_manifest);

    nlohmann::json sj;
    sj["completed_phase"] = st.completed_phase;
    sj["config_hash"] = cfg.hash_hex();
    sj["seed"] = cfg.seed;
    sj["reports"] = nlohmann::json::array();
    for (const auto& r : st.reports) sj["reports"].push_back(r.to_json());
    sj["forgetting"] = nlohmann::json::array();
    for (const auto& f : st.forgetting)
        sj["forgetting"].push_back(
            {{"domain", f.domain}, {"phase", f.phase}, {"value", f.value}});
    std::ofstream os(dir + "/state.json", std::ios::trunc);
    os << sj.dump(2) << "\n";
    if (!os) throw FormatError("cannot write state.json under " + dir);
}

inline AdaptationState load_state(const std::string& dir) {
    AdaptationState st;
    Checkpoint est = load_checkpoint(dir + "/estimator.ckpt");
    st.anchor.net = std::move(est.model);
    st.anchor.frames = est.manifest.at("frames").get<int>();
    st.anchor.joints = est.manifest.at("joints").get<int>();
    st.anchor.norm = NormalizeSpec::from_json(est.manifest.at("normalize"));
    st.generators = orch_detail::load_bundle(dir + "/generators.ckpt");
    st.discriminator = load_checkpoint(dir + "/discriminator.ckpt").model;
    Checkpoint samp = load_checkpoint(dir + "/sampler.ckpt");
    st.sampler.net = std::move(samp.model);
    st.sampler.joints = samp.manifest.at("joints").get<int>();
    st.sampler.t_embed_dim = samp.manifest.at("t_embed_dim").get<int>();
    st.sampler.norm_rms = samp.manifest.at("norm_rms").get<double>();
    st.sampler.trained = samp.manifest.at("trained").get<bool>();
    st.sampler.schedule_hash = samp.manifest.at("schedule_hash").get<std::uint64_t>();
    st.sampler.domains_seen = samp.manifest.at("domains_seen").get<int>();

    std::ifstream is(dir + "/state.json");
    if (!is) throw FormatError("missing state.json under " + dir);
    nlohmann::json sj;
    is >> sj;
    st.completed_phase = sj.at("completed_phase").get<int>();
    for (const auto& r : sj.at("reports")) st.reports.push_back(EvaluationReport::from_json(r));
    for (const auto& f : sj.at("forgetting"))
        st.forgetting.push_back({f.at("domain").get<int>(), f.at("phase").get<int>(),
                                 f.at("value").get<double>()});
    return st;
}

// ---- the full experiment ---------------------------------------------------------

struct ExperimentOptions {
    bool write_artifacts = true;
    bool force = false;
    bool resume = false;
    int stop_after_phase = -1;  // -1: every phase
    std::function<void(const std::string&)> progress;  // optional status sink
};

struct ExperimentResult {
    AdaptationState state;
    std::string run_dir;
};

inline DomainStream make_stream(const RunConfig& cfg) {
    const Skeleton& skel = canonical_skeleton();
    auto make_handle = [&](const RunConfig::DataSpec& d) {
        if (d.is_synth) return DatasetHandle::from_synth(d.synth, d.n_clips, cfg.frames);
        return DatasetHandle::from_files(d.name, d.pose2d, d.pose3d, skel, cfg.frames);
    };
    std::vector<DatasetHandle> targets;
    for (const auto& t : cfg.targets) targets.push_back(make_handle(t));
    return DomainStream(make_handle(cfg.source), std::move(targets));
}

/// Phase 0: build and pretrain every model on the source domain.
inline AdaptationState pretrain_state(const RunConfig& cfg, DomainStream& stream,
                                      const ExperimentOptions& opt = {}) {
    const std::uint64_t s0 = derive_seed(cfg.seed, 0);
    Rng est_rng(derive_seed(s0, 1)), gen_rng(derive_seed(s0, 2)), disc_rng(derive_seed(s0, 3));
    Rng samp_init_rng(derive_seed(s0, 4)), pre_rng(derive_seed(s0, 5)),
        samp_train_rng(derive_seed(s0, 6));

    NormalizeSpec norm{cfg.camera.cx, cfg.camera.cy, cfg.pixel_scale};
    AdaptationState st;
    st.anchor = make_lifting(cfg.frames, canonical_skeleton().joint_count(),
                             cfg.estimator_channels, norm, est_rng);
    st.generators = make_generators(cfg.generator, canonical_skeleton(), gen_rng);
    st.discriminator = make_discriminator(canonical_skeleton().joint_count(),
                                          cfg.discriminator_hidden, disc_rng);
    st.sampler = make_noise_predictor(canonical_skeleton().joint_count(), cfg.diffusion.hidden,
                                      cfg.diffusion.depth, samp_init_rng);

    stream.begin_phase(0);
    const ClipSet& src = stream.source_training();
    if (!src.labeled()) throw EmptySource("source domain must carry 3D labels");
    if (opt.progress) opt.progress("pretraining on " + src.name);
    std::vector<Pose3D> centers;
    centers.reserve(src.clips3d.size());
    for (const auto& c : src.clips3d) centers.push_back(c.center());
    pretrain_source(st.anchor, src.clips2d, centers, cfg.epochs_pretrain, cfg.batch_size,
                    cfg.lr_pretrain, pre_rng);

    const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion.T);
    st.sampler = train_sampler(orch_detail::center_frames_2d(src), st.sampler, sched,
                               cfg.diffusion.epochs, cfg.diffusion.batch_size, cfg.diffusion.lr,
                               samp_train_rng);
    st.completed_phase = 0;
    return st;
}

inline ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentOptions& opt = {}) {
    namespace fs = std::filesystem;
    const std::string dir = cfg.run_dir();
    std::unique_ptr<RunLog> log;
    if (opt.write_artifacts) {
        if (fs::exists(dir) && !opt.force && !opt.resume)
            throw ConfigError("run directory exists (use --force or --resume): " + dir);
        fs::create_directories(dir + "/checkpoints");
        fs::create_directories(dir + "/reports");
        nlohmann::json manifest{{"config", cfg.to_json()},
                                {"config_hash", cfg.hash_hex()},
                                {"seed", cfg.seed},
                                {"version", 1}};
        std::ofstream os(dir + "/manifest.json", std::ios::trunc);
        os << manifest.dump(2) << "\n";
        log = std::make_unique<RunLog>(dir + "/run.log");
    }

    DomainStream stream = make_stream(cfg);
    const int n_targets = stream.target_count();
    std::vector<int> all_domains(n_targets);
    for (int d = 1; d <= n_targets; ++d) all_domains[d - 1] = d;

    AdaptationState st;
    int start_phase = 1;
    bool resumed = false;
    if (opt.resume && opt.write_artifacts) {
        for (int j = n_targets; j >= 0; --j) {
            const std::string pdir = dir + "/checkpoints/phase_" + std::to_string(j);
            if (fs::exists(pdir + "/state.json")) {
                st = load_state(pdir);
                start_phase = j + 1;
                resumed = true;
                break;
            }
        }
    }
    if (!resumed) {
        st = pretrain_state(cfg, stream, opt);
        st.reports.push_back(
            evaluate_all(st.anchor, stream, all_domains, 0, "source-only", cfg));
        if (opt.write_artifacts) save_state(dir + "/checkpoints/phase_0", st, cfg);
    }

    const int last_phase =
        opt.stop_after_phase >= 0 ? std::min(opt.stop_after_phase, n_targets) : n_targets;
    for (int j = start_phase; j <= last_phase; ++j) {
        if (opt.progress)
            opt.progress("phase " + std::to_string(j) + " on " + stream.target_name(j));
        st = adapt_phase(st, stream, j, cfg, log.get());
        std::vector<int> seen(j);
        for (int d = 1; d <= j; ++d) seen[d - 1] = d;
        EvaluationReport r = evaluate_all(st.anchor, stream, seen, j, "anchor", cfg);
        // forgetting on every previously adapted domain
        for (int d = 1; d < j; ++d) {
            double now = 0.0, then = 0.0;
            for (const auto& e : r.domains)
                if (e.name == stream.target_name(d)) now = e.mpjpe;
            for (const auto& rep : st.reports)
                if (rep.phase == d)
                    for (const auto& e : rep.domains)
                        if (e.name == stream.target_name(d)) then = e.mpjpe;
            st.forgetting.push_back({d, j, now - then});
        }
        st.reports.push_back(std::move(r));
        if (opt.write_artifacts) save_state(dir + "/checkpoints/phase_" + std::to_string(j), st, cfg);
    }

    if (opt.write_artifacts) {
        std::vector<std::string> names;
        for (int d = 1; d <= n_targets; ++d) names.push_back(stream.target_name(d));
        std::ofstream t(dir + "/reports/report.txt", std::ios::trunc);
        t << render_report_table(st.reports, names);
        std::ofstream rec(dir + "/reports/records.jsonl", std::ios::trunc);
        rec << render_report_records(st.reports);
        std::ofstream fg(dir + "/reports/forgetting.jsonl", std::ios::trunc);
        for (const auto& f : st.forgetting) {
            nlohmann::json j{{"domain", f.domain}, {"phase", f.phase}, {"value", f.value}};
            fg << j.dump() << "\n";
        }
    }
    return {std::move(st), dir};
}

}  // namespace poselift
