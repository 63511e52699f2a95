// Batch CLI wiring the detection pipeline end to end: corpus generation,
// training, detection, evaluation experiments and throughput benches.
//
// Every subcommand echoes its resolved configuration as flat key=value lines
// on stdout (the same format its --config option accepts) and exits non-zero
// on any error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <morton/morton.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw morton::IoError("cannot open for reading: " + path);
    return f;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw morton::IoError("cannot open for writing: " + path.string());
    return f;
}

morton::RankedHosts ranks_for(const morton::BackgroundSpec& bg) {
    morton::RankedHosts ranks;
    for (const auto& [rank, host] : morton::ranked_rows_for(bg)) ranks.emplace(host, rank);
    return ranks;
}

std::vector<int8_t> required_labels(const morton::Dataset& ds, const char* what) {
    std::vector<int8_t> ys(ds.device_count());
    for (uint32_t d = 0; d < ds.device_count(); ++d) {
        int8_t l = ds.label(d);
        if (l != 0 && l != 1)
            throw morton::ArgumentError(std::string(what) + " must label every device; missing " +
                                        ds.device_name(d));
        ys[d] = l;
    }
    return ys;
}

struct BackgroundFlags {
    morton::BackgroundSpec bg;
    bool flat_diurnal = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--devices", bg.device_count, "Devices in the corpus")
            ->capture_default_str();
        cmd->add_option("--seed", bg.seed, "Corpus seed")->capture_default_str();
        cmd->add_option("--host-pool", bg.host_pool_size, "Common (popular) host pool size")
            ->capture_default_str();
        cmd->add_option("--zipf-skew", bg.popularity_skew, "Popularity skew of the common pool")
            ->capture_default_str();
        cmd->add_option("--mean-daily-queries", bg.mean_daily_queries,
                        "Mean queries per device per day")
            ->capture_default_str();
        cmd->add_option("--niche-pool", bg.niche_pool_size, "Shared low-prevalence host pool size")
            ->capture_default_str();
        cmd->add_option("--niche-adoption", bg.niche_adoption_rate,
                        "Per device-host adoption probability in the niche pool")
            ->capture_default_str();
        cmd->add_option("--niche-weekly", bg.niche_weekly_queries,
                        "Mean weekly queries per adopted niche host")
            ->capture_default_str();
        cmd->add_option("--tail-hosts", bg.tail_hosts_per_device, "Per-device private tail hosts")
            ->capture_default_str();
        cmd->add_option("--tail-fraction", bg.tail_query_fraction,
                        "Fraction of daily queries going to tail hosts")
            ->capture_default_str();
        cmd->add_option("--window-start", bg.window_start, "Window start (epoch ms, hour-aligned)")
            ->capture_default_str();
        cmd->add_flag("--flat-diurnal", flat_diurnal, "Use a flat hourly profile");
    }

    morton::BackgroundSpec resolve() const {
        morton::BackgroundSpec spec = bg;
        if (flat_diurnal) spec.diurnal = morton::flat_profile();
        return spec;
    }
};

struct AggFlags {
    morton::AggregationConfig agg;
    void add_to(CLI::App* cmd) {
        cmd->add_option("--bins", agg.bin_count, "Time bins per window")->capture_default_str();
        cmd->add_option("--bin-seconds", agg.bin_seconds, "Seconds per bin")
            ->capture_default_str();
    }
};

struct ReputationFlags {
    morton::ReputationConfig rep;
    void add_to(CLI::App* cmd) {
        cmd->add_option("--rank-threshold", rep.rank_threshold,
                        "Global popularity rank treated as trusted")
            ->capture_default_str();
        cmd->add_option("--prevalence-threshold", rep.prevalence_threshold,
                        "Local prevalence treated as trusted")
            ->capture_default_str();
    }
};

struct TrainFlags {
    morton::TrainConfig tc;
    void add_to(CLI::App* cmd) {
        cmd->add_option("--train-seed", tc.seed, "Training seed")->capture_default_str();
        cmd->add_option("--dropout", tc.dropout, "Hidden-layer dropout rate")
            ->capture_default_str();
        cmd->add_option("--learning-rate", tc.learning_rate, "Adam learning rate")
            ->capture_default_str();
        cmd->add_option("--batch-size", tc.batch_size, "Mini-batch size")->capture_default_str();
        cmd->add_option("--epochs", tc.max_epochs, "Maximum training epochs")
            ->capture_default_str();
        cmd->add_option("--patience", tc.patience, "Early-stopping patience (epochs)")
            ->capture_default_str();
        cmd->add_option("--val-fraction", tc.val_fraction, "Validation split fraction")
            ->capture_default_str();
        cmd->add_option("--l2", tc.l2, "L2 penalty (0 disables)")->capture_default_str();
        cmd->add_option("--restarts", tc.restarts,
                        "Optimization runs; the best validation loss wins")
            ->capture_default_str();
    }
};

// ---------------------------------------------------------------------------

struct GenerateArgs {
    BackgroundFlags background;
    AggFlags agg;
    double bot_fraction = 0.05;
    double train_fraction = 0.625;
    std::string technique = "beaconing";
    std::string out_dir = ".";
};

void run_generate(const GenerateArgs& a) {
    morton::BackgroundSpec bg = a.background.resolve();
    morton::Technique tech = morton::technique_from_name(a.technique);
    morton::LabeledCorpus corpus =
        morton::build_labeled_corpus(bg, a.bot_fraction, tech, a.train_fraction, a.agg.agg);
    fs::create_directories(a.out_dir);
    fs::path dir(a.out_dir);

    auto write_split = [&](const morton::Dataset& ds,
                           const std::vector<morton::InjectionRecord>& recs,
                           const std::string& prefix) {
        auto log = open_output(dir / (prefix + "_log.csv"));
        morton::serialize(ds, log);
        auto labels = open_output(dir / (prefix + "_labels.csv"));
        morton::save_labels(ds, labels);
        auto prov = open_output(dir / (prefix + "_provenance.csv"));
        morton::save_provenance(recs, prov);
        std::cout << prefix << ": " << ds.device_count() << " devices, " << ds.query_count()
                  << " queries, " << recs.size() << " bots\n";
    };
    write_split(corpus.train, corpus.train_injections, "train");
    write_split(corpus.test, corpus.test_injections, "test");
    auto ranked = open_output(dir / "ranked.csv");
    morton::save_ranked_hosts(morton::ranked_rows_for(bg), ranked);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string log_path;
    std::string labels_path;
    std::string ranked_path;
    std::string model_path = "model.json";
    AggFlags agg;
    ReputationFlags rep;
    TrainFlags train;
};

void run_train(const TrainArgs& a) {
    auto log = open_input(a.log_path);
    morton::Dataset ds = morton::parse_log(log);
    auto labels = open_input(a.labels_path);
    morton::load_labels(ds, labels);
    ds.finalize();
    auto ranked = open_input(a.ranked_path);
    morton::RankedHosts ranks = morton::load_ranked_hosts(ranked);

    morton::PipelineConfig pcfg{a.agg.agg, a.rep.rep};
    morton::ModelParams model = morton::train_pipeline(ds, ranks, pcfg, a.train.tc);
    morton::save_model_file(model, a.model_path);
    std::cout << "validation loss " << morton::detail::fmt_double(model.meta.best_val_loss)
              << " at epoch " << model.meta.best_epoch << " (" << model.meta.epochs_run
              << " epochs run)\n";
    std::cout << "model written to " << a.model_path << "\n";
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string log_path;
    std::string ranked_path;
    std::string model_path;
    std::string out_path = "verdicts.csv";
    std::string labels_path;
    std::string blocklist_path;
    double threshold = 0.5;
    double fpr_cap = -1.0;
    AggFlags agg;
    ReputationFlags rep;
};

void run_detect(const DetectArgs& a, bool fpr_given) {
    auto log = open_input(a.log_path);
    morton::Dataset ds = morton::parse_log(log);
    if (!a.labels_path.empty()) {
        auto labels = open_input(a.labels_path);
        morton::load_labels(ds, labels);
        ds.finalize();
    }
    auto ranked = open_input(a.ranked_path);
    morton::RankedHosts ranks = morton::load_ranked_hosts(ranked);
    morton::ModelParams model = morton::load_model_file(a.model_path);

    morton::PipelineConfig pcfg{a.agg.agg, a.rep.rep};
    std::vector<double> scores = morton::score_devices(ds, ranks, model, pcfg);

    double threshold = a.threshold;
    if (fpr_given) {
        if (a.labels_path.empty())
            throw morton::ArgumentError("--fpr calibration needs --labels");
        std::vector<int8_t> ys = required_labels(ds, "calibration labels");
        morton::Calibration cal = morton::calibrate_threshold(scores, ys, a.fpr_cap);
        threshold = cal.threshold;
        std::cout << "calibrated threshold " << morton::detail::fmt_double(threshold)
                  << " (fpr " << morton::detail::fmt_double(cal.fpr) << ", tpr "
                  << morton::detail::fmt_double(cal.tpr) << ")\n";
        if (!cal.cap_met)
            std::cerr << "warning: fpr cap unattainable; using minimum-fpr operating point\n";
    }

    std::vector<uint32_t> order(ds.device_count());
    for (uint32_t d = 0; d < order.size(); ++d) order[d] = d;
    std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
        return ds.device_name(x) < ds.device_name(y);
    });
    std::vector<morton::DeviceVerdict> verdicts;
    verdicts.reserve(order.size());
    for (uint32_t d : order)
        verdicts.push_back({ds.device_name(d), scores[d], scores[d] >= threshold, ""});

    bool with_evidence = !a.blocklist_path.empty();
    if (with_evidence) {
        std::unordered_set<std::string> blocklist;
        std::ifstream f(a.blocklist_path);
        if (!f)
            std::cerr << "warning: blocklist missing (" << a.blocklist_path
                      << "); no annotations\n";
        else
            blocklist = morton::load_blocklist(f);
        morton::enrich_verdicts(verdicts, ds, blocklist);
    }
    auto out = open_output(a.out_path);
    morton::write_device_verdicts_csv(verdicts, with_evidence, out);
    size_t flagged = 0;
    for (const auto& v : verdicts) flagged += v.flagged ? 1 : 0;
    std::cout << "scored " << verdicts.size() << " devices, flagged " << flagged << "\n";
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string experiment = "accuracy";
    std::string technique = "beaconing";
    std::string methods = "morton,baywatch100,baywatch10,warp";
    double bot_fraction = 0.05;
    double train_fraction = 0.625;
    double fpr_cap = 0.144;
    int max_exponent = 11;
    std::string out_dir = ".";
    BackgroundFlags background;
    AggFlags agg;
    ReputationFlags rep;
    TrainFlags train;
};

std::vector<std::string> split_methods(const std::string& csv) {
    std::vector<std::string> out;
    size_t begin = 0;
    for (size_t i = 0; i <= csv.size(); ++i) {
        if (i == csv.size() || csv[i] == ',') {
            if (i > begin) out.emplace_back(csv.substr(begin, i - begin));
            begin = i + 1;
        }
    }
    for (const std::string& m : out)
        if (m != "morton" && m != "baywatch100" && m != "baywatch10" && m != "warp")
            throw morton::ConfigError("unknown method: " + m);
    return out;
}

// Scores every device of `ds` with one method. MORTON uses the trained model;
// the baselines build their trust table and connection pairs in place.
std::vector<double> method_scores(const std::string& method, const morton::Dataset& ds,
                                  const morton::RankedHosts& ranks,
                                  const morton::ModelParams* model,
                                  const morton::PipelineConfig& pcfg, uint64_t seed) {
    if (method == "morton") return morton::score_devices(ds, ranks, *model, pcfg);
    morton::TrustTable trust = morton::build_trust_table(ds, pcfg.reputation, ranks);
    std::vector<morton::ConnectionPair> cps =
        morton::extract_connection_pairs(ds, &trust, pcfg.agg);
    if (method == "baywatch100")
        return morton::baywatch_device_scores(ds, cps, {100, 0.99, seed}, pcfg.agg).score;
    if (method == "baywatch10")
        return morton::baywatch_device_scores(ds, cps, {10, 0.99, seed}, pcfg.agg).score;
    return morton::warp_device_scores(ds, cps).score;
}

json config_echo_json(const CLI::App* cmd) {
    json cfg = json::object();
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
        std::string name = opt->get_name();
        if (name.rfind("--", 0) == 0) name = name.substr(2);
        if (opt->count() > 0 && !opt->results().empty())
            cfg[name] = opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
        else
            cfg[name] = opt->get_default_str();
    }
    return cfg;
}

void run_throughput(const EvalArgs& a, const CLI::App* cmd) {
    morton::BackgroundSpec bg = a.background.resolve();
    morton::Technique tech = morton::technique_from_name(a.technique);
    morton::PipelineConfig pcfg{a.agg.agg, a.rep.rep};
    std::vector<std::string> methods = split_methods(a.methods);
    fs::create_directories(a.out_dir);
    fs::path dir(a.out_dir);

    std::cerr << "generating bench corpus (" << bg.device_count << " devices)...\n";
    morton::Dataset corpus = morton::build_bench_corpus(bg, a.bot_fraction, tech, a.agg.agg);
    morton::RankedHosts ranks = ranks_for(bg);
    morton::ModelParams model;
    bool need_model = false;
    for (const std::string& m : methods) need_model |= (m == "morton");
    if (need_model) {
        std::cerr << "training model (untimed)...\n";
        model = morton::train_pipeline(corpus, ranks, pcfg, a.train.tc);
    }

    std::vector<size_t> sizes;
    for (int k = 1; k <= a.max_exponent; ++k) {
        size_t n = size_t(1) << k;
        if (n > corpus.device_count()) break;
        sizes.push_back(n);
    }
    if (sizes.empty()) throw morton::ArgumentError("corpus too small for any bench subset");

    json report;
    report["experiment"] = "throughput";
    report["technique"] = a.technique;
    report["config"] = config_echo_json(cmd);
    std::map<std::string, std::vector<morton::ThroughputRow>> rows;
    for (size_t n : sizes) {
        morton::Dataset sub = morton::subset_devices(corpus, n);
        morton::TrustTable trust = morton::build_trust_table(sub, pcfg.reputation, ranks);
        size_t cp_count = morton::extract_connection_pairs(sub, &trust, pcfg.agg).size();
        for (const std::string& m : methods) {
            double seconds = morton::median_seconds([&] {
                std::vector<double> s = method_scores(m, sub, ranks, &model, pcfg, bg.seed);
                (void)s;
            });
            rows[m].push_back(morton::throughput_row(n, cp_count, seconds));
            std::cerr << m << " @ " << n << " devices: "
                      << morton::detail::fmt_double(rows[m].back().cps_per_sec) << " cps/sec\n";
        }
    }
    for (const auto& [m, rs] : rows) {
        auto out = open_output(dir / ("throughput_" + m + ".csv"));
        morton::write_throughput_csv(rs, out);
        json jr = json::array();
        for (const morton::ThroughputRow& r : rs)
            jr.push_back({{"devices", r.devices},
                          {"connection_pairs", r.cp_count},
                          {"seconds", r.seconds},
                          {"cps_per_sec", r.cps_per_sec}});
        report["methods"][m] = jr;
    }
    auto rep_out = open_output(dir / "report.json");
    rep_out << report.dump(2) << "\n";
    std::cout << "throughput results in " << a.out_dir << "\n";
}

void run_eval(const EvalArgs& a, const CLI::App* cmd) {
    if (a.experiment == "throughput") {
        run_throughput(a, cmd);
        return;
    }
    morton::BackgroundSpec bg = a.background.resolve();
    morton::Technique tech = morton::technique_from_name(a.technique);
    morton::PipelineConfig pcfg{a.agg.agg, a.rep.rep};
    std::vector<std::string> methods = split_methods(a.methods);
    fs::create_directories(a.out_dir);
    fs::path dir(a.out_dir);

    std::cerr << "generating corpus (" << bg.device_count << " devices)...\n";
    morton::LabeledCorpus corpus =
        morton::build_labeled_corpus(bg, a.bot_fraction, tech, a.train_fraction, a.agg.agg);
    morton::RankedHosts ranks = ranks_for(bg);
    morton::ModelParams model;
    bool need_model = false;
    for (const std::string& m : methods) need_model |= (m == "morton");
    if (need_model) {
        std::cerr << "training model...\n";
        model = morton::train_pipeline(corpus.train, ranks, pcfg, a.train.tc);
    }
    std::vector<int8_t> labels = required_labels(corpus.test, "generated corpus");

    json report;
    report["experiment"] = a.experiment;
    report["technique"] = a.technique;
    report["config"] = config_echo_json(cmd);
    std::vector<morton::SummaryRow> summary;

    for (const std::string& m : methods) {
        morton::SummaryRow row;
        row.method = m;
        row.technique = a.technique;
        auto t0 = std::chrono::steady_clock::now();
        if (a.experiment == "accuracy") {
            std::vector<double> scores = method_scores(m, corpus.test, ranks, &model, pcfg, bg.seed);
            morton::RocCurve curve = morton::roc(scores, labels);
            row.auc = curve.auc;
            row.tpr_at_1pct = morton::tpr_at_fpr(curve, 0.01);
            auto out = open_output(dir / ("roc_" + m + "_" + a.technique + ".csv"));
            morton::write_roc_csv(curve, out);
            report["methods"][m] = {{"auc", curve.auc}, {"tpr_at_1pct_fpr", row.tpr_at_1pct}};
        } else if (a.experiment == "robustness") {
            std::vector<double> clean = method_scores(m, corpus.test, ranks, &model, pcfg, bg.seed);
            auto score_at = [&](double rate) {
                morton::Dataset dropped = morton::apply_drop(
                    corpus.test, rate, morton::mix_seed({bg.seed, 0xd60bull,
                                                         static_cast<uint64_t>(rate * 10)}));
                return method_scores(m, dropped, ranks, &model, pcfg, bg.seed);
            };
            morton::RobustnessResult r =
                morton::robustness_sweep(clean, labels, score_at, a.fpr_cap);
            row.robustness = r.score;
            if (!r.warning.empty()) std::cerr << "warning (" << m << "): " << r.warning << "\n";
            auto out = open_output(dir / ("robustness_" + m + "_" + a.technique + ".csv"));
            morton::write_robustness_csv(r, out);
            report["methods"][m] = {{"robustness_score", r.score},
                                    {"operating_fpr", r.operating_fpr},
                                    {"threshold", r.calibration.threshold},
                                    {"clean_fpr", r.calibration.fpr},
                                    {"fpr_cap_met", r.calibration.cap_met},
                                    {"detection_rates", r.detection_rates},
                                    {"warning", r.warning}};
        } else {
            throw morton::ConfigError("unknown experiment: " + a.experiment);
        }
        auto t1 = std::chrono::steady_clock::now();
        row.runtime_seconds = std::chrono::duration<double>(t1 - t0).count();
        report["methods"][m]["runtime_seconds"] = row.runtime_seconds;
        summary.push_back(row);
        std::cerr << m << " done in " << morton::detail::fmt_double(row.runtime_seconds)
                  << " s\n";
    }

    auto sum_out = open_output(dir / "summary.csv");
    morton::write_summary_csv(summary, sum_out);
    auto rep_out = open_output(dir / "report.json");
    rep_out << report.dump(2) << "\n";
    std::cout << a.experiment << " results in " << a.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral DNS-log bot detection pipeline"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("generate", "Generate a labeled synthetic corpus");
    cmd_gen->set_config("--config");
    gen.background.add_to(cmd_gen);
    gen.agg.add_to(cmd_gen);
    cmd_gen->add_option("--bot-fraction", gen.bot_fraction, "Fraction of devices carrying a bot")
        ->capture_default_str();
    cmd_gen->add_option("--train-fraction", gen.train_fraction, "Fraction of devices in the train split")
        ->capture_default_str();
    cmd_gen->add_option("--technique", gen.technique, "Injection technique")
        ->check(CLI::IsMember({"beaconing", "msc"}))
        ->capture_default_str();
    cmd_gen->add_option("--out", gen.out_dir, "Output directory")->capture_default_str();

    TrainArgs tr;
    CLI::App* cmd_tr = app.add_subcommand("train", "Train the classifier on a labeled log");
    cmd_tr->set_config("--config");
    cmd_tr->add_option("--log", tr.log_path, "Query log CSV")->required();
    cmd_tr->add_option("--labels", tr.labels_path, "Device labels CSV")->required();
    cmd_tr->add_option("--ranked", tr.ranked_path, "Ranked hosts CSV")->required();
    cmd_tr->add_option("--model", tr.model_path, "Model output path")->capture_default_str();
    tr.agg.add_to(cmd_tr);
    tr.rep.add_to(cmd_tr);
    tr.train.add_to(cmd_tr);

    DetectArgs det;
    CLI::App* cmd_det = app.add_subcommand("detect", "Score devices with a trained model");
    cmd_det->set_config("--config");
    cmd_det->add_option("--log", det.log_path, "Query log CSV")->required();
    cmd_det->add_option("--ranked", det.ranked_path, "Ranked hosts CSV")->required();
    cmd_det->add_option("--model", det.model_path, "Trained model JSON")->required();
    cmd_det->add_option("--out", det.out_path, "Verdicts CSV output")->capture_default_str();
    cmd_det->add_option("--threshold", det.threshold, "Verdict threshold on the score")
        ->capture_default_str();
    CLI::Option* fpr_opt =
        cmd_det->add_option("--fpr", det.fpr_cap, "Calibrate the threshold to this FPR cap");
    cmd_det->add_option("--labels", det.labels_path, "Labels CSV (calibration)");
    cmd_det->add_option("--blocklist", det.blocklist_path,
                        "Blocklist file (one host per line) for verdict enrichment");
    det.agg.add_to(cmd_det);
    det.rep.add_to(cmd_det);

    EvalArgs ev;
    CLI::App* cmd_ev = app.add_subcommand("eval", "Run an evaluation experiment");
    cmd_ev->set_config("--config");
    cmd_ev->add_option("--experiment", ev.experiment, "Experiment to run")
        ->check(CLI::IsMember({"accuracy", "robustness", "throughput"}))
        ->capture_default_str();
    cmd_ev->add_option("--technique", ev.technique, "Injection technique")
        ->check(CLI::IsMember({"beaconing", "msc"}))
        ->capture_default_str();
    cmd_ev->add_option("--methods", ev.methods, "Comma-separated methods to evaluate")
        ->capture_default_str();
    cmd_ev->add_option("--bot-fraction", ev.bot_fraction, "Fraction of devices carrying a bot")
        ->capture_default_str();
    cmd_ev->add_option("--train-fraction", ev.train_fraction,
                       "Fraction of devices in the train split")
        ->capture_default_str();
    cmd_ev->add_option("--fpr-cap", ev.fpr_cap, "Operating FPR cap for robustness")
        ->capture_default_str();
    cmd_ev->add_option("--max-exponent", ev.max_exponent,
                       "Largest subset 2^k for the throughput experiment")
        ->capture_default_str();
    cmd_ev->add_option("--out", ev.out_dir, "Output directory")->capture_default_str();
    ev.background.add_to(cmd_ev);
    ev.agg.add_to(cmd_ev);
    ev.rep.add_to(cmd_ev);
    ev.train.add_to(cmd_ev);

    EvalArgs be;
    be.experiment = "throughput";
    be.background.bg.device_count = 2048;
    CLI::App* cmd_be = app.add_subcommand("bench", "Throughput scaling bench (2^1..2^k subsets)");
    cmd_be->set_config("--config");
    cmd_be->add_option("--technique", be.technique, "Injection technique")
        ->check(CLI::IsMember({"beaconing", "msc"}))
        ->capture_default_str();
    cmd_be->add_option("--methods", be.methods, "Comma-separated methods to bench")
        ->capture_default_str();
    cmd_be->add_option("--bot-fraction", be.bot_fraction, "Fraction of devices carrying a bot")
        ->capture_default_str();
    cmd_be->add_option("--max-exponent", be.max_exponent, "Largest subset 2^k")
        ->capture_default_str();
    cmd_be->add_option("--out", be.out_dir, "Output directory")->capture_default_str();
    be.background.add_to(cmd_be);
    be.agg.add_to(cmd_be);
    be.rep.add_to(cmd_be);
    be.train.add_to(cmd_be);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        std::cout << active->config_to_str(true, false);
        if (active == cmd_gen) run_generate(gen);
        else if (active == cmd_tr) run_train(tr);
        else if (active == cmd_det) run_detect(det, fpr_opt->count() > 0);
        else if (active == cmd_ev) run_eval(ev, cmd_ev);
        else run_throughput(be, cmd_be);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
