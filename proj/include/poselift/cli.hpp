#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "poselift/orchestrator.hpp"

namespace poselift {

namespace cli_detail {

inline std::string sibling_3d_path(const std::string& path2d) {
    std::string p = path2d;
    const auto pos = p.rfind("_2d");
    if (pos != std::string::npos) {
        p.replace(pos, 3, "_3d");
        return p;
    }
    return "";
}

inline PoseFileHeader make_header(const std::string& domain, int dims, int frames,
                                  const std::string& units, std::uint64_t seed,
                                  std::uint64_t config_hash) {
    PoseFileHeader h;
    h.skeleton_hash = canonical_skeleton().hash();
    h.units = units;
    h.dims = dims;
    h.joints = canonical_skeleton().joint_count();
    h.frames_per_clip = frames;
    h.domain = domain;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, config_hash);
    h.extra["config_hash"] = buf;
    h.extra["seed"] = std::to_string(seed);
    return h;
}

inline void write_synth_set(const SynthSet& set, const std::string& prefix, int frames,
                            std::uint64_t seed, std::uint64_t config_hash) {
    PoseFileData d2;
    d2.header = make_header(set.domain_name, 2, frames, "px", seed, config_hash);
    for (const auto& c : set.clips2d)
        for (const auto& f : c.frames) d2.frames.push_back(f.uv);
    write_pose_file(prefix + "_2d.pose", d2);
    PoseFileData d3;
    d3.header = make_header(set.domain_name, 3, frames, "mm", seed, config_hash);
    for (const auto& c : set.clips3d)
        for (const auto& f : c.frames) d3.frames.push_back(f.xyz);
    write_pose_file(prefix + "_3d.pose", d3);
}

inline int run_probes(std::ostream& out) {
    int failures = 0;
    auto probe = [&](const std::string& name, auto&& fn) {
        try {
            fn();
            out << "[ok]   " << name << "\n";
        } catch (const std::exception& e) {
            out << "[FAIL] " << name << ": " << e.what() << "\n";
            ++failures;
        }
    };
    auto expect = [](bool ok, const std::string& what) {
        if (!ok) throw Error("probe expectation failed: " + what);
    };
    const Skeleton& skel = canonical_skeleton();

    probe("kinematic round-trip (1000 random poses, 1e-9 mm)", [&] {
        Rng rng(101);
        for (int it = 0; it < 1000; ++it) {
            BoneSet bs;
            for (int b = 0; b < skel.bone_count(); ++b) {
                double v[3] = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
                const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + 1e-12;
                bs.unit.push_back({v[0] / n, v[1] / n, v[2] / n});
                bs.length.push_back(50.0 + 400.0 * rng.uniform());
            }
            Pose3D p = joints_from_bones(bs, {rng.gaussian(), rng.gaussian(), rng.gaussian()},
                                         skel);
            BoneSet dec = bones_from_joints(p, skel);
            Pose3D back = joints_from_bones(dec, {p.x(0), p.y(0), p.z(0)}, skel);
            for (std::size_t i = 0; i < p.xyz.size(); ++i)
                expect(std::abs(p.xyz[i] - back.xyz[i]) <= 1e-9, "round-trip");
        }
    });

    probe("pinhole projection hand cases", [&] {
        Camera cam;
        Pose3D p(skel.joint_count());
        Pose2D q = project(p, cam);
        expect(q.u(0) == 500.0 && q.v(0) == 500.0, "on-axis joint");
        p.x(1) = 100.0;
        q = project(p, cam);
        expect(q.u(1) == 520.0 && q.v(1) == 500.0, "off-axis joint");
    });

    probe("procrustes removes similarity transforms", [&] {
        Rng rng(202);
        for (int it = 0; it < 200; ++it) {
            Pose3D gt(skel.joint_count());
            for (double& v : gt.xyz) v = 100.0 * rng.gaussian();
            Pose3D pred = g_rt({0.2 * rng.gaussian(), 0.2 * rng.gaussian(),
                                0.2 * rng.gaussian(), 0.2 * rng.gaussian(), rng.gaussian(),
                                rng.gaussian(), rng.gaussian()},
                               gt, 300.0, skel);
            for (double& v : pred.xyz) v *= 1.3;
            expect(pa_mpjpe(pred, gt) <= 1e-6, "alignment residual");
            expect(pa_mpjpe(pred, gt) <= mpjpe(root_center(pred), root_center(gt)) + 1e-9,
                   "pa <= mpjpe");
        }
    });

    probe("gradient check: mlp and temporal conv (rel < 1e-4)", [&] {
        Rng rng(303);
        ParamModel mlp = make_mlp({6, 8, 4}, "tanh", rng);
        expect(gradient_probe(mlp, 6, rng) < 1e-4, "mlp probe");
        ParamModel tc = make_tconv(9, 4, 6, 5, tconv_dilations_for(9), "tanh", rng);
        expect(gradient_probe(tc, 9 * 4, rng) < 1e-4, "tconv probe");
    });

    probe("gradient-of-gradient-norm on a linear critic", [&] {
        Rng rng(404);
        Tensor wt(5, 1);
        for (double& v : wt.data) v = rng.gaussian();
        Tensor xt(3, 5);
        for (double& v : xt.data) v = rng.gaussian();
        ad::Var w = ad::leaf(wt);
        ad::Var x = ad::leaf(xt);
        ad::Var gx = ad::grad(ad::sum_all(ad::matmul(x, w)), {x})[0];
        ad::Var loss = ad::mean_all(ad::sqrt(ad::row_sum(ad::mul(gx, gx))));
        ad::Var gw = ad::grad(loss, {w})[0];
        double wn = 0.0;
        for (double v : wt.data) wn += v * v;
        wn = std::sqrt(wn);
        for (int i = 0; i < 5; ++i)
            expect(std::abs(gw->value.data[i] - wt.data[i] / wn) < 1e-9, "w/||w||");
    });

    probe("ddim sigma formula matches direct evaluation", [&] {
        DiffusionSchedule sched = DiffusionSchedule::linear(400);
        for (int k : {10, 40, 200, 400}) {
            const double ak = sched.abar(k), ap = sched.abar(k - 1);
            const double direct =
                0.2 * std::sqrt((1.0 - ap) / (1.0 - ak)) * std::sqrt(1.0 - ak / ap);
            expect(std::abs(ddim_sigma(0.2, ap, ak) - direct) <= 1e-12, "sigma");
        }
    });

    probe("ema endpoints and the 0.99 scalar case", [&] {
        ParamModel a, l;
        a.desc = l.desc = {{"kind", "probe"}};
        a.params.emplace_back("w", Tensor::scalar(0.0));
        l.params.emplace_back("w", Tensor::scalar(1.0));
        expect(ema_update({a, l, 1.0}).params[0].second.item() == 0.0, "eta=1");
        expect(ema_update({a, l, 0.0}).params[0].second.item() == 1.0, "eta=0");
        expect(std::abs(ema_update({a, l, 0.99}).params[0].second.item() - 0.01) < 1e-15,
               "eta=0.99");
    });

    probe("augmentation is the exact identity at initialization", [&] {
        Rng rng(505);
        GeneratorConfig gc;
        gc.hidden = 16;
        GeneratorBundle gb = make_generators(gc, skel, rng);
        BoneSet bs;
        for (int b = 0; b < skel.bone_count(); ++b) {
            double v[3] = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
            const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + 1e-12;
            bs.unit.push_back({v[0] / n, v[1] / n, v[2] / n});
            bs.length.push_back(100.0 + 300.0 * rng.uniform());
        }
        Pose3D p = joints_from_bones(bs, {0, 0, 0}, skel);
        Clip3D clip;
        for (int t = 0; t < 9; ++t) clip.frames.push_back(p);
        Pose2D prior(skel.joint_count());
        for (double& v : prior.uv) v = 40.0 * rng.gaussian();
        Pose3D aug = augment(clip, prior, gb, skel);
        for (std::size_t i = 0; i < p.xyz.size(); ++i)
            expect(aug.xyz[i] == p.xyz[i], "identity");
    });

    probe("pose file round-trip is bit-exact", [&] {
        Rng rng(606);
        PoseFileData d;
        d.header = make_header("probe", 2, 1, "px", 7, 0);
        for (int i = 0; i < 64; ++i) {
            std::vector<double> f(32);
            for (double& v : f) v = rng.gaussian() * 1e3;
            d.frames.push_back(std::move(f));
        }
        const std::string tmp =
            (std::filesystem::temp_directory_path() / "poselift_probe.pose").string();
        write_pose_file(tmp, d);
        PoseFileData r = read_pose_file(tmp);
        std::filesystem::remove(tmp);
        expect(r.frames.size() == d.frames.size(), "frame count");
        for (std::size_t i = 0; i < d.frames.size(); ++i)
            for (std::size_t c = 0; c < d.frames[i].size(); ++c)
                expect(r.frames[i][c] == d.frames[i][c], "bit-exact value");
    });

    out << (failures ? "FAILED" : "all probes passed") << "\n";
    return failures ? 1 : 0;
}

}  // namespace cli_detail

/// Library entry point for the command-line surface. Usage errors exit 2,
/// runtime failures exit 1.
inline int cli_dispatch(std::vector<std::string> args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    CLI::App app{"lifelong domain-adaptive 2D-to-3D pose lifting"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled domain");
    std::string synth_spec, synth_out = "domain";
    int synth_clips = 2000, synth_frames = 27;
    std::uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    synth->add_option("--spec", synth_spec, "domain spec JSON file")->required();
    synth->add_option("--n-clips", synth_clips, "clips to generate");
    synth->add_option("--frames", synth_frames, "frames per clip");
    synth->add_option("--out", synth_out, "output path prefix");
    synth->add_option("--seed", synth_seed, "override the spec's motion seed")
        ->each([&](const std::string&) { synth_seed_set = true; });

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "source-domain supervised pretraining");
    std::string pre_source, pre_source3d, pre_config, pre_out = "estimator.ckpt";
    std::uint64_t pre_seed = 0;
    bool pre_seed_set = false;
    pretrain->add_option("--source", pre_source, "source 2D pose file")->required();
    pretrain->add_option("--source3d", pre_source3d, "source 3D pose file (default: _2d->_3d)");
    pretrain->add_option("--config", pre_config, "run config JSON");
    pretrain->add_option("--out", pre_out, "output checkpoint");
    pretrain->add_option("--seed", pre_seed, "override config seed")
        ->each([&](const std::string&) { pre_seed_set = true; });

    // run / adapt
    auto* run = app.add_subcommand("run", "full lifelong experiment");
    std::string run_config, run_out;
    std::uint64_t run_seed = 0;
    bool run_seed_set = false, run_force = false, run_resume = false;
    int run_stop = -1;
    run->add_option("--config", run_config, "run config JSON")->required();
    run->add_option("--seed", run_seed, "override config seed")
        ->each([&](const std::string&) { run_seed_set = true; });
    run->add_option("--out", run_out, "override output directory");
    run->add_flag("--force", run_force, "overwrite an existing run directory");
    run->add_flag("--resume", run_resume, "continue from the last phase checkpoint");
    run->add_option("--stop-after-phase", run_stop, "stop after this phase");

    auto* adapt = app.add_subcommand("adapt", "advance one adaptation phase");
    std::string adapt_state, adapt_config;
    adapt->add_option("--state", adapt_state, "existing run directory")->required();
    adapt->add_option("--config", adapt_config, "run config JSON")->required();

    // eval / report
    auto* eval = app.add_subcommand("eval", "evaluate a run state on labeled domains");
    std::string eval_state;
    std::vector<std::string> eval_domains;
    eval->add_option("--state", eval_state, "run directory")->required();
    eval->add_option("--domains", eval_domains, "2D pose files (3D siblings required)")
        ->required();

    auto* report = app.add_subcommand("report", "render stored evaluation reports");
    std::string report_state, report_format = "table";
    report->add_option("--state", report_state, "run directory")->required();
    report->add_option("--format", report_format, "table|records")
        ->check(CLI::IsMember({"table", "records"}));

    // diffusion
    auto* dtrain = app.add_subcommand("diffuse-train", "train the 2D pose diffusion sampler");
    std::string dt_domain, dt_init, dt_out = "sampler.ckpt", dt_config;
    std::uint64_t dt_seed = 0;
    bool dt_seed_set = false;
    dtrain->add_option("--domain", dt_domain, "2D pose file")->required();
    dtrain->add_option("--init", dt_init, "initial sampler checkpoint");
    dtrain->add_option("--out", dt_out, "output checkpoint");
    dtrain->add_option("--config", dt_config, "run config JSON");
    dtrain->add_option("--seed", dt_seed, "override config seed")
        ->each([&](const std::string&) { dt_seed_set = true; });

    auto* dsample = app.add_subcommand("diffuse-sample", "sample domain-aware 2D priors");
    std::string ds_ckpt, ds_out = "priors_2d.pose";
    int ds_n = 64, ds_steps = 40;
    double ds_eta = 0.2;
    std::uint64_t ds_seed = 1;
    dsample->add_option("--ckpt", ds_ckpt, "sampler checkpoint")->required();
    dsample->add_option("--n", ds_n, "number of priors");
    dsample->add_option("--steps", ds_steps, "sampling steps");
    dsample->add_option("--eta", ds_eta, "ddim eta");
    dsample->add_option("--seed", ds_seed, "sampling seed");
    dsample->add_option("--out", ds_out, "output pose file");

    auto* check = app.add_subcommand("check", "run the invariant probe suite");
    (void)check;

    std::vector<const char*> argv;
    const std::string prog = "poselift";
    argv.push_back(prog.c_str());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*check) return cli_detail::run_probes(out);

        if (*synth) {
            std::ifstream is(synth_spec);
            if (!is) throw ConfigError("cannot open spec: " + synth_spec);
            nlohmann::json sj;
            is >> sj;
            SynthDomainSpec spec = SynthDomainSpec::from_json(sj);
            if (synth_seed_set) spec.motion_seed = synth_seed;
            SynthSet set = synth_domain(spec, synth_clips, synth_frames);
            cli_detail::write_synth_set(set, synth_out, synth_frames, spec.motion_seed,
                                        fnv1a(spec.to_json().dump()));
            out << "wrote " << synth_out << "_2d.pose and _3d.pose (" << set.clips2d.size()
                << " clips)\n";
            return 0;
        }

        if (*pretrain) {
            RunConfig cfg = pre_config.empty() ? RunConfig{} : RunConfig::from_file(pre_config);
            if (pre_seed_set) cfg.seed = pre_seed;
            const std::string p3 =
                pre_source3d.empty() ? cli_detail::sibling_3d_path(pre_source) : pre_source3d;
            if (p3.empty()) throw ConfigError("cannot derive 3D path; pass --source3d");
            PoseFileData d2 = read_pose_file(pre_source);
            PoseFileData d3 = read_pose_file(p3);
            check_skeleton_hash(d2.header, canonical_skeleton(), pre_source);
            check_skeleton_hash(d3.header, canonical_skeleton(), p3);
            auto clips2 = clips2d_from_file(d2);
            auto clips3 = clips3d_from_file(d3);
            if (clips2.size() != clips3.size()) throw FormatError("2D/3D clip count mismatch");
            NormalizeSpec norm{cfg.camera.cx, cfg.camera.cy, cfg.pixel_scale};
            const std::uint64_t s0 = derive_seed(cfg.seed, 0);
            Rng init_rng(derive_seed(s0, 1)), train_rng(derive_seed(s0, 5));
            LiftingModel model = make_lifting(cfg.frames, canonical_skeleton().joint_count(),
                                              cfg.estimator_channels, norm, init_rng);
            std::vector<Pose3D> centers;
            for (const auto& c : clips3) centers.push_back(c.center());
            PretrainReport rep = pretrain_source(model, clips2, centers, cfg.epochs_pretrain,
                                                 cfg.batch_size, cfg.lr_pretrain, train_rng);
            nlohmann::json manifest{{"version", 1},
                                    {"seed", cfg.seed},
                                    {"step", cfg.epochs_pretrain},
                                    {"config_hash", cfg.hash_hex()},
                                    {"frames", model.frames},
                                    {"joints", model.joints},
                                    {"normalize", model.norm.to_json()}};
            save_checkpoint(pre_out, model.net, manifest);
            out << "pretrained " << cfg.epochs_pretrain << " epochs";
            if (!rep.epoch_loss.empty()) out << ", final loss " << rep.epoch_loss.back();
            out << "; wrote " << pre_out << "\n";
            return 0;
        }

        if (*run) {
            RunConfig cfg = RunConfig::from_file(run_config);
            if (run_seed_set) cfg.seed = run_seed;
            if (!run_out.empty()) cfg.out_dir = run_out;
            ExperimentOptions opt;
            opt.force = run_force;
            opt.resume = run_resume;
            opt.stop_after_phase = run_stop;
            opt.progress = [&](const std::string& msg) { out << msg << "\n"; };
            ExperimentResult res = run_experiment(cfg, opt);
            std::vector<std::string> names;
            DomainStream stream = make_stream(cfg);
            for (int d = 1; d <= stream.target_count(); ++d)
                names.push_back(stream.target_name(d));
            out << render_report_table(res.state.reports, names);
            out << "artifacts under " << res.run_dir << "\n";
            return 0;
        }

        if (*adapt) {
            RunConfig cfg = RunConfig::from_file(adapt_config);
            cfg.out_dir = adapt_state.substr(0, adapt_state.rfind('/'));
            ExperimentOptions opt;
            opt.resume = true;
            // run exactly one more phase than is already checkpointed
            int last = -1;
            for (int j = 0; j <= static_cast<int>(cfg.targets.size()); ++j)
                if (std::filesystem::exists(adapt_state + "/checkpoints/phase_" +
                                            std::to_string(j) + "/state.json"))
                    last = j;
            if (last < 0) throw ConfigError("no phase checkpoints under " + adapt_state);
            opt.stop_after_phase = last + 1;
            ExperimentResult res = run_experiment(cfg, opt);
            out << "advanced to phase " << res.state.completed_phase << "\n";
            return 0;
        }

        if (*eval) {
            int last = -1;
            for (int j = 0; j < 512; ++j)
                if (std::filesystem::exists(eval_state + "/checkpoints/phase_" +
                                            std::to_string(j) + "/state.json"))
                    last = j;
            if (last < 0) throw ConfigError("no phase checkpoints under " + eval_state);
            AdaptationState st =
                load_state(eval_state + "/checkpoints/phase_" + std::to_string(last));
            std::vector<EvaluationReport> reports;
            EvaluationReport r;
            r.phase = last;
            r.model_tag = "anchor";
            std::vector<std::string> names;
            for (const auto& path2d : eval_domains) {
                const std::string p3 = cli_detail::sibling_3d_path(path2d);
                if (p3.empty()) throw ConfigError("cannot derive 3D sibling for " + path2d);
                PoseFileData d2 = read_pose_file(path2d);
                PoseFileData d3 = read_pose_file(p3);
                check_skeleton_hash(d2.header, canonical_skeleton(), path2d);
                ClipSet set;
                set.name = d2.header.domain;
                set.clips2d = clips2d_from_file(d2);
                set.clips3d = clips3d_from_file(d3);
                r.domains.push_back(evaluate_domain(st.anchor, set));
                names.push_back(set.name);
            }
            double am = 0.0, ap = 0.0;
            for (const auto& d : r.domains) {
                am += d.mpjpe;
                ap += d.pa_mpjpe;
            }
            r.avg_mpjpe = am / r.domains.size();
            r.avg_pa_mpjpe = ap / r.domains.size();
            reports.push_back(r);
            out << render_report_table(reports, names);
            return 0;
        }

        if (*report) {
            int last = -1;
            for (int j = 0; j < 512; ++j)
                if (std::filesystem::exists(report_state + "/checkpoints/phase_" +
                                            std::to_string(j) + "/state.json"))
                    last = j;
            if (last < 0) throw ConfigError("no phase checkpoints under " + report_state);
            AdaptationState st =
                load_state(report_state + "/checkpoints/phase_" + std::to_string(last));
            std::vector<std::string> names;
            for (const auto& r : st.reports)
                for (const auto& d : r.domains)
                    if (std::find(names.begin(), names.end(), d.name) == names.end())
                        names.push_back(d.name);
            if (report_format == "records")
                out << render_report_records(st.reports);
            else
                out << render_report_table(st.reports, names);
            return 0;
        }

        if (*dtrain) {
            RunConfig cfg = dt_config.empty() ? RunConfig{} : RunConfig::from_file(dt_config);
            if (dt_seed_set) cfg.seed = dt_seed;
            PoseFileData d2 = read_pose_file(dt_domain);
            check_skeleton_hash(d2.header, canonical_skeleton(), dt_domain);
            std::vector<Pose2D> poses;
            for (const auto& f : d2.frames) {
                Pose2D p(d2.header.joints);
                p.uv = f;
                poses.push_back(std::move(p));
            }
            NoisePredictor np;
            if (!dt_init.empty()) {
                Checkpoint ck = load_checkpoint(dt_init);
                np.net = std::move(ck.model);
                np.joints = ck.manifest.at("joints").get<int>();
                np.t_embed_dim = ck.manifest.at("t_embed_dim").get<int>();
                np.norm_rms = ck.manifest.at("norm_rms").get<double>();
                np.trained = ck.manifest.at("trained").get<bool>();
                np.schedule_hash = ck.manifest.at("schedule_hash").get<std::uint64_t>();
                np.domains_seen = ck.manifest.at("domains_seen").get<int>();
            } else {
                Rng init_rng(derive_seed(derive_seed(cfg.seed, 0), 4));
                np = make_noise_predictor(d2.header.joints, cfg.diffusion.hidden,
                                          cfg.diffusion.depth, init_rng);
            }
            const DiffusionSchedule sched = DiffusionSchedule::linear(cfg.diffusion.T);
            Rng train_rng(derive_seed(cfg.seed, 7));
            DiffusionTrainReport rep;
            NoisePredictor trained =
                train_sampler(poses, np, sched, cfg.diffusion.epochs, cfg.diffusion.batch_size,
                              cfg.diffusion.lr, train_rng, &rep);
            nlohmann::json manifest{{"version", 1},
                                    {"seed", cfg.seed},
                                    {"config_hash", cfg.hash_hex()},
                                    {"joints", trained.joints},
                                    {"t_embed_dim", trained.t_embed_dim},
                                    {"norm_rms", trained.norm_rms},
                                    {"trained", trained.trained},
                                    {"schedule_hash", trained.schedule_hash},
                                    {"domains_seen", trained.domains_seen}};
            save_checkpoint(dt_out, trained.net, manifest);
            out << "trained sampler on " << poses.size() << " poses";
            if (!rep.epoch_loss.empty()) out << ", final loss " << rep.epoch_loss.back();
            out << "; wrote " << dt_out << "\n";
            return 0;
        }

        if (*dsample) {
            Checkpoint ck = load_checkpoint(ds_ckpt);
            NoisePredictor np;
            np.net = std::move(ck.model);
            np.joints = ck.manifest.at("joints").get<int>();
            np.t_embed_dim = ck.manifest.at("t_embed_dim").get<int>();
            np.norm_rms = ck.manifest.at("norm_rms").get<double>();
            np.trained = ck.manifest.at("trained").get<bool>();
            np.schedule_hash = ck.manifest.at("schedule_hash").get<std::uint64_t>();
            np.domains_seen = ck.manifest.at("domains_seen").get<int>();
            const DiffusionSchedule sched = DiffusionSchedule::linear();
            std::vector<Pose2D> priors =
                ddim_sample(static_cast<std::size_t>(ds_n), ds_steps, ds_eta, np, sched, ds_seed);
            PoseFileData d;
            d.header = cli_detail::make_header("priors", 2, 1, "px", ds_seed,
                                               fnv1a(ck.manifest.dump()));
            for (const auto& p : priors) d.frames.push_back(p.uv);
            write_pose_file(ds_out, d);
            out << "sampled " << priors.size() << " priors; wrote " << ds_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace poselift
