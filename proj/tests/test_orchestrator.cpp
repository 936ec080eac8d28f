#include "test_support.hpp"

#include <filesystem>

#include "poselift/orchestrator.hpp"

using namespace poselift;
namespace fs = std::filesystem;

namespace {

nlohmann::json synth_json(const std::string& name, std::uint64_t seed, double scale,
                          double view, std::vector<double> mixture) {
    return {{"name", name},
            {"motion_seed", seed},
            {"scale", scale},
            {"camera",
             {{"fx", 1000.0}, {"fy", 1000.0}, {"cx", 500.0}, {"cy", 500.0},
              {"subject_depth_offset", 5000.0}}},
            {"view_rotation_deg", view},
            {"noise_sigma_px", 0.5},
            {"mixture", mixture}};
}

/// Micro two-target config that runs in well under a second.
RunConfig micro_config(std::uint64_t seed = 3) {
    nlohmann::json j = {
        {"seed", seed},
        {"frames", 9},
        {"batch_size", 8},
        {"epochs_pretrain", 2},
        {"epochs_adapt", 1},
        {"estimator_channels", 8},
        {"discriminator_hidden", 8},
        {"diffusion",
         {{"T", 40}, {"steps", 4}, {"epochs", 1}, {"pool_size", 8}, {"hidden", 12}, {"depth", 2}}},
        {"generator", {{"hidden", 8}}},
        {"data",
         {{"source", {{"n_clips", 16}, {"synth", synth_json("src", 11, 1.0, 0.0, {0.4, 0.3, 0.2, 0.1})}}},
          {"targets",
           {{{"n_clips", 12}, {"synth", synth_json("tg1", 22, 1.15, 20.0, {0.1, 0.5, 0.3, 0.1})}},
            {{"n_clips", 12}, {"synth", synth_json("tg2", 33, 0.9, -20.0, {0.2, 0.2, 0.5, 0.1})}}}}}},
    };
    return RunConfig::from_json(j);
}

}  // namespace

TEST_CASE("zero-epoch phase keeps the anchor bitwise", "[orchestrator]") {
    RunConfig cfg = micro_config();
    cfg.epochs_adapt = 0;
    DomainStream stream = make_stream(cfg);
    AdaptationState st = pretrain_state(cfg, stream);
    const std::uint64_t before = st.anchor.net.param_hash();
    AdaptationState out = adapt_phase(st, stream, 1, cfg);
    REQUIRE(out.anchor.net.param_hash() == before);
    REQUIRE(out.completed_phase == 1);
    // the sampler still advances (it trains in parallel with adaptation)
    REQUIRE(out.sampler.domains_seen == st.sampler.domains_seen + 1);
}

TEST_CASE("training reads of earlier domains are violations", "[orchestrator]") {
    RunConfig cfg = micro_config();
    DomainStream stream = make_stream(cfg);
    stream.begin_phase(2);
    REQUIRE_THROWS_AS(stream.target_training(1), AccessViolation);
    REQUIRE_THROWS_AS(stream.source_training(), AccessViolation);
}

TEST_CASE("identical seeds give identical runs", "[orchestrator]") {
    RunConfig cfg = micro_config(9);
    ExperimentOptions opt;
    opt.write_artifacts = false;
    ExperimentResult a = run_experiment(cfg, opt);
    ExperimentResult b = run_experiment(cfg, opt);
    REQUIRE(a.state.state_hash() == b.state.state_hash());
    REQUIRE(a.state.reports.size() == b.state.reports.size());
    for (std::size_t i = 0; i < a.state.reports.size(); ++i) {
        REQUIRE(a.state.reports[i].avg_mpjpe == b.state.reports[i].avg_mpjpe);
        REQUIRE(a.state.reports[i].avg_pa_mpjpe == b.state.reports[i].avg_pa_mpjpe);
    }
}

TEST_CASE("different seeds give different runs", "[orchestrator]") {
    ExperimentOptions opt;
    opt.write_artifacts = false;
    ExperimentResult a = run_experiment(micro_config(1), opt);
    ExperimentResult b = run_experiment(micro_config(2), opt);
    REQUIRE(a.state.state_hash() != b.state.state_hash());
}

TEST_CASE("evaluation report details", "[orchestrator]") {
    RunConfig cfg = micro_config(4);
    DomainStream stream = make_stream(cfg);

    SECTION("ground-truth-as-prediction scores zero") {
        // feed the evaluation the labels themselves
        stream.begin_phase(0);
        const ClipSet& tg = stream.evaluation(1);
        for (std::size_t i = 0; i < tg.clips2d.size(); ++i) {
            Pose3D gt = root_center(tg.clips3d[i].center());
            REQUIRE(mpjpe(gt, gt) == 0.0);
            REQUIRE(pa_mpjpe(gt, gt) <= 1e-9);
        }
    }
    SECTION("averages equal the mean of per-domain values") {
        AdaptationState st = pretrain_state(cfg, stream);
        EvaluationReport r = evaluate_all(st.anchor, stream, {1, 2}, 0, "source-only", cfg);
        REQUIRE(r.domains.size() == 2);
        REQUIRE(r.avg_mpjpe ==
                Catch::Approx((r.domains[0].mpjpe + r.domains[1].mpjpe) / 2).margin(1e-12));
        REQUIRE(r.avg_pa_mpjpe ==
                Catch::Approx((r.domains[0].pa_mpjpe + r.domains[1].pa_mpjpe) / 2)
                    .margin(1e-12));
    }
    SECTION("phase j report covers exactly domains 1..j") {
        ExperimentOptions opt;
        opt.write_artifacts = false;
        ExperimentResult res = run_experiment(cfg, opt);
        REQUIRE(res.state.reports.size() == 3);  // t0 + 2 phases
        REQUIRE(res.state.reports[0].phase == 0);
        REQUIRE(res.state.reports[0].domains.size() == 2);  // source-only over all targets
        REQUIRE(res.state.reports[1].domains.size() == 1);
        REQUIRE(res.state.reports[2].domains.size() == 2);
        REQUIRE(res.state.reports[1].model_tag == "anchor");
        // forgetting logged for domain 1 at phase 2
        REQUIRE(res.state.forgetting.size() == 1);
        REQUIRE(res.state.forgetting[0].domain == 1);
        REQUIRE(res.state.forgetting[0].phase == 2);
    }
}

TEST_CASE("ema telescoping at eta = 1", "[orchestrator]") {
    RunConfig cfg = micro_config(5);
    cfg.ema_eta = 1.0;
    ExperimentOptions opt;
    opt.write_artifacts = false;
    DomainStream stream = make_stream(cfg);
    AdaptationState t0 = pretrain_state(cfg, stream);
    const std::uint64_t pretrained = t0.anchor.net.param_hash();
    ExperimentResult res = run_experiment(cfg, opt);
    // with eta = 1 no adaptation persists in the anchor
    REQUIRE(res.state.anchor.net.param_hash() == pretrained);
}

TEST_CASE("ablation flags change the run but not its shape", "[orchestrator]") {
    RunConfig base = micro_config(6);
    RunConfig no_de = base;
    no_de.ablation.de = false;
    no_de.generator.enable_de = false;
    RunConfig no_ema = base;
    no_ema.ablation.ema = false;
    RunConfig no_ldis = base;
    no_ldis.ablation.ldis = false;

    REQUIRE(base.hash() != no_de.hash());
    REQUIRE(base.hash() != no_ema.hash());
    REQUIRE(base.hash() != no_ldis.hash());
    REQUIRE(base.run_dir() != no_de.run_dir());

    ExperimentOptions opt;
    opt.write_artifacts = false;
    ExperimentResult a = run_experiment(base, opt);
    ExperimentResult b = run_experiment(no_de, opt);
    ExperimentResult c = run_experiment(no_ema, opt);
    ExperimentResult d = run_experiment(no_ldis, opt);
    REQUIRE(a.state.state_hash() != b.state.state_hash());
    REQUIRE(a.state.state_hash() != c.state.state_hash());
    REQUIRE(a.state.state_hash() != d.state.state_hash());
    REQUIRE(b.state.reports.size() == a.state.reports.size());
}

TEST_CASE("state round-trips through disk and resume is bitwise", "[orchestrator]") {
    RunConfig cfg = micro_config(7);
    cfg.out_dir = (fs::temp_directory_path() / "poselift_runs_test").string();
    fs::remove_all(cfg.out_dir);

    SECTION("save/load returns the identical state") {
        DomainStream stream = make_stream(cfg);
        AdaptationState st = pretrain_state(cfg, stream);
        st.reports.push_back(evaluate_all(st.anchor, stream, {1, 2}, 0, "source-only", cfg));
        const std::string dir = cfg.out_dir + "/scratch";
        save_state(dir, st, cfg);
        AdaptationState back = load_state(dir);
        REQUIRE(back.state_hash() == st.state_hash());
        REQUIRE(back.reports.size() == st.reports.size());
        REQUIRE(back.reports[0].avg_mpjpe == st.reports[0].avg_mpjpe);
        REQUIRE(back.sampler.norm_rms == st.sampler.norm_rms);
        fs::remove_all(cfg.out_dir);
    }

    SECTION("interrupted run resumes to the uninterrupted result") {
        ExperimentOptions full;
        full.write_artifacts = false;
        ExperimentResult straight = run_experiment(cfg, full);

        fs::remove_all(cfg.out_dir);
        ExperimentOptions first;
        first.stop_after_phase = 1;
        ExperimentResult part = run_experiment(cfg, first);
        REQUIRE(part.state.completed_phase == 1);

        ExperimentOptions rest;
        rest.resume = true;
        ExperimentResult resumed = run_experiment(cfg, rest);
        REQUIRE(resumed.state.completed_phase == 2);
        REQUIRE(resumed.state.state_hash() == straight.state.state_hash());
        REQUIRE(resumed.state.reports.size() == straight.state.reports.size());
        for (std::size_t i = 0; i < straight.state.reports.size(); ++i)
            REQUIRE(resumed.state.reports[i].avg_mpjpe == straight.state.reports[i].avg_mpjpe);
        fs::remove_all(cfg.out_dir);
    }

    SECTION("existing run directory refuses to overwrite without force") {
        ExperimentOptions opt;
        opt.stop_after_phase = 0;
        run_experiment(cfg, opt);
        REQUIRE_THROWS_AS(run_experiment(cfg, opt), ConfigError);
        ExperimentOptions forced = opt;
        forced.force = true;
        REQUIRE_NOTHROW(run_experiment(cfg, forced));
        fs::remove_all(cfg.out_dir);
    }
}

TEST_CASE("report rendering", "[orchestrator]") {
    EvaluationReport t0;
    t0.phase = 0;
    t0.model_tag = "source-only";
    t0.domains = {{"tg1", 53.5, 46.3, 100}, {"tg2", 56.3, 47.7, 100}};
    t0.avg_mpjpe = 54.9;
    t0.avg_pa_mpjpe = 47.0;
    EvaluationReport t1;
    t1.phase = 1;
    t1.model_tag = "anchor";
    t1.domains = {{"tg1", 47.0, 41.1, 100}};
    t1.avg_mpjpe = 47.0;
    t1.avg_pa_mpjpe = 41.1;

    const std::string table = render_report_table({t0, t1}, {"tg1", "tg2"});
    REQUIRE(table.find("t = 0") != std::string::npos);
    REQUIRE(table.find("53.5/46.3") != std::string::npos);
    REQUIRE(table.find("-") != std::string::npos);  // tg2 unseen at t=1

    const std::string records = render_report_records({t0, t1});
    // one record per (phase, domain): line-delimited JSON
    REQUIRE(std::count(records.begin(), records.end(), '\n') == 3);
    nlohmann::json first = nlohmann::json::parse(records.substr(0, records.find('\n')));
    REQUIRE(first.at("domain") == "tg1");
    REQUIRE(first.at("mpjpe") == 53.5);
}
