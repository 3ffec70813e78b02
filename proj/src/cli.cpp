#include "lfkit/cli.hpp"

#include <fmt/format.h>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lfkit/audit.hpp"
#include "lfkit/composite.hpp"
#include "lfkit/dataset_io.hpp"
#include "lfkit/feature_cache.hpp"
#include "lfkit/service.hpp"
#include "lfkit/subset.hpp"
#include "lfkit/synth.hpp"

namespace lfkit {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::infeasible_split:
    case ErrorKind::all_seeds_infeasible: return kExitInfeasible;
    default: return kExitValidation;
  }
}

namespace {

void write_error(std::ostream& err, std::string_view kind, const std::string& message) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << "\n";
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_error, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::pair<int, int> parse_ratio(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const int x = std::stoi(text.substr(0, colon), &a);
    const int y = std::stoi(text.substr(colon + 1), &b);
    if (a != colon || b != text.size() - colon - 1) throw std::invalid_argument(text);
    return {x, y};
  } catch (const std::exception&) {
    throw Error(ErrorKind::config_error, "ratio must look like 3:1, got " + text);
  }
}

// "42", "1-50", "1,5,9-12".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  try {
    while (std::getline(ss, part, ',')) {
      if (part.empty()) continue;
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(part));
        continue;
      }
      const auto lo = std::stoull(part.substr(0, dash));
      const auto hi = std::stoull(part.substr(dash + 1));
      if (hi < lo || hi - lo > 1'000'000) throw std::invalid_argument(part);
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    }
  } catch (const std::exception&) {
    throw Error(ErrorKind::config_error, "bad seed list " + text);
  }
  if (seeds.empty()) throw Error(ErrorKind::config_error, "seed list is empty");
  return seeds;
}

std::optional<Cell> parse_cell(const std::string& text) {
  if (text.size() != 2) return std::nullopt;
  const auto r = parse_race(text.substr(0, 1));
  const auto g = parse_gender(text.substr(1, 1));
  if (!r || !g) return std::nullopt;
  return Cell{*r, *g};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir.string());
}

LbpGeometry parse_geometry(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::config_error, "cell geometry must look like 10x10, got " + text);
  }
}

AdjudicationService* g_service = nullptr;
extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

struct Context {
  const std::string* data_dir = nullptr;

  fs::path base() const { return fs::path(*data_dir); }
  fs::path at(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base() / path;
  }
};

struct ProtocolFlags {
  std::string protocol_file;
  std::size_t pca_dim = 400;
  double epsilon = 1.0;
  double svm_cost = 0.0;
  double svr_cost = 0.0;
  std::string gender_mode = "oracle";
  std::uint64_t seed = 1;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--protocol", protocol_file, "JSON protocol configuration");
    app->add_option("--pca-dim", pca_dim, "PCA components (clamped to rank)");
    app->add_option("--epsilon", epsilon, "SVR insensitive-zone width in years");
    app->add_option("--svm-cost", svm_cost, "fixed race SVM cost (skips grid search)");
    app->add_option("--svr-cost", svr_cost, "fixed SVR cost (skips grid search)");
    app->add_option("--gender-mode", gender_mode, "oracle or classified")
        ->check(CLI::IsMember({"oracle", "classified"}));
    app->add_option("--seed", seed, "protocol seed");
    app->add_option("--threads", threads, "worker threads (0 = all cores)");
  }

  ProtocolConfig build(const Context& ctx, CLI::App* app) const {
    ProtocolConfig c;
    if (!protocol_file.empty()) c.apply_json(read_json(ctx.at(protocol_file)));
    if (app->count("--pca-dim")) c.pca_dim = pca_dim;
    if (app->count("--epsilon")) c.epsilon = epsilon;
    if (app->count("--svm-cost")) c.svm_cost = svm_cost;
    if (app->count("--svr-cost")) c.svr_cost = svr_cost;
    if (app->count("--gender-mode")) {
      c.gender_mode = gender_mode == "classified" ? GenderMode::classified : GenderMode::oracle;
    }
    if (app->count("--seed")) c.seed = seed;
    c.threads = threads;
    return c;
  }
};

void write_report(const fs::path& dir, const EvalReport& report) {
  ensure_dir(dir);
  write_file(dir / "report.txt", report.table());
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "predictions.csv", report.predictions_csv());
  ordered_json leak;
  leak["checks"] = report.leakage.checks;
  ordered_json v = ordered_json::array();
  for (const auto& x : report.leakage.violations) {
    v.push_back({{"cell", x.cell}, {"model", x.model}, {"subjects", x.subjects}});
  }
  leak["violations"] = v;
  write_file(dir / "leakage.json", leak.dump(2) + "\n");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Longitudinal face-metadata cleaning, balanced subsets and composite age estimation",
               "lfkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option overrides (sections per subcommand)");
  std::string data_dir;
  if (const char* env = std::getenv("LFKIT_DATA_DIR"); env && *env) data_dir = env;
  if (data_dir.empty()) data_dir = ".";
  Context ctx{&data_dir};
  app.add_option("--data-dir", data_dir, "base for relative paths (default $LFKIT_DATA_DIR or .)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  struct {
    std::string out = "corpus";
    std::size_t subjects = 1000;
    std::uint64_t seed = 1;
    bool mirror = false;
    double scale = 0.1;
    bool toy = false;
    std::string age_dist = "morph_like";
    double mean_arrests = 4.0;
    std::size_t max_arrests = 53;
    double gender_flip = 0, race_flip = 0, dob_small = 0, dob_large = 0, gender_tie = 0, race_tie = 0;
    std::string spec_file;
    bool no_images = false;
  } so;
  synth->add_option("--out", so.out, "output directory");
  synth->add_option("--subjects", so.subjects, "subject count");
  synth->add_option("--seed", so.seed, "master seed");
  synth->add_flag("--mirror", so.mirror, "reference cell shares, conflict rates and image totals");
  synth->add_option("--scale", so.scale, "scale for --mirror");
  synth->add_flag("--toy", so.toy, "1,000 single-image subjects, balanced cells, uniform ages");
  synth->add_option("--age-dist", so.age_dist)->check(CLI::IsMember({"morph_like", "uniform"}));
  synth->add_option("--mean-arrests", so.mean_arrests);
  synth->add_option("--max-arrests", so.max_arrests);
  synth->add_option("--rate-gender-flip", so.gender_flip);
  synth->add_option("--rate-race-flip", so.race_flip);
  synth->add_option("--rate-dob-small", so.dob_small);
  synth->add_option("--rate-dob-large", so.dob_large);
  synth->add_option("--rate-gender-tie", so.gender_tie);
  synth->add_option("--rate-race-tie", so.race_tie);
  synth->add_option("--spec", so.spec_file, "JSON generator spec (fields as in gen_spec.json)");
  synth->add_flag("--no-images", so.no_images, "metadata only");
  synth->callback([&] {
    GenSpec spec = so.toy ? toy_spec(so.seed) : so.mirror ? mirror_paper_shape(so.scale) : GenSpec{};
    if (!so.spec_file.empty()) spec.apply_json(read_json(ctx.at(so.spec_file)));
    if (synth->count("--subjects")) spec.subject_count = so.subjects;
    if (synth->count("--seed")) spec.seed = so.seed;
    if (synth->count("--age-dist")) spec.age_distribution = *parse_age_distribution(so.age_dist);
    if (synth->count("--mean-arrests")) spec.mean_arrests = so.mean_arrests;
    if (synth->count("--max-arrests")) spec.max_arrests = so.max_arrests;
    if (synth->count("--rate-gender-flip")) spec.rates.gender_flip = so.gender_flip;
    if (synth->count("--rate-race-flip")) spec.rates.race_flip = so.race_flip;
    if (synth->count("--rate-dob-small")) spec.rates.dob_small = so.dob_small;
    if (synth->count("--rate-dob-large")) spec.rates.dob_large = so.dob_large;
    if (synth->count("--rate-gender-tie")) spec.rates.gender_tie = so.gender_tie;
    if (synth->count("--rate-race-tie")) spec.rates.race_tie = so.race_tie;
    const auto corpus = generate(spec);
    write_corpus(ctx.at(so.out), corpus, !so.no_images);
    out << fmt::format("synth: {} subjects, {} records -> {}\n", corpus.truth.subjects.size(),
                       corpus.records.size(), ctx.at(so.out).string());
  });

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "report cross-record inconsistencies");
  struct {
    std::string input = "corpus/raw.csv";
    std::string out = "audit";
    std::string log = "decisions.jsonl";
    bool dob_review = false;
  } ao;
  audit_cmd->add_option("--input", ao.input, "raw table");
  audit_cmd->add_option("--out", ao.out, "output directory");
  audit_cmd->add_option("--log", ao.log, "decision log used to mark queue items");
  audit_cmd->add_flag("--queue-dob-review", ao.dob_review, "queue averaged dobs for review");
  audit_cmd->callback([&] {
    const auto records = load_dataset(ctx.at(ao.input));
    const auto ledgers = group_by_subject(records);
    const auto report = audit(ledgers);
    const auto dir = ctx.at(ao.out);
    ensure_dir(dir);
    write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_file(dir / "dob_gap_frequency.csv", dob_gap_frequency_csv(report));
    write_file(dir / "dob_gap_cumulative.csv", dob_gap_cumulative_csv(report));
    auto queue = build_queue(ledgers, CleanOptions{ao.dob_review});
    apply_decisions(queue, DecisionLog::load(ctx.at(ao.log)));
    save_queue(dir / "queue.json", queue);
    out << fmt::format("audit: {} subjects, {} records; conflicts gender {} race {} dob {}; queue {}\n",
                       report.subject_count, report.record_count, report.gender_conflicts.size(),
                       report.race_conflicts.size(), report.dob_conflicts.size(), queue.size());
  });

  // clean
  auto* clean_cmd = app.add_subcommand("clean", "resolve conflicts and emit dataset versions");
  struct {
    std::string input = "corpus/raw.csv";
    std::string out = "clean";
    std::string log = "decisions.jsonl";
    bool strict = false;
    bool dob_review = false;
  } co;
  clean_cmd->add_option("--input", co.input, "raw table");
  clean_cmd->add_option("--out", co.out, "output directory");
  clean_cmd->add_option("--log", co.log, "decision log to consume");
  clean_cmd->add_flag("--strict", co.strict, "fail while any subject awaits adjudication");
  clean_cmd->add_flag("--queue-dob-review", co.dob_review, "queue averaged dobs for review");
  clean_cmd->callback([&] {
    const auto log_path = ctx.at(co.log);
    if (LogLock::held(log_path)) {
      throw Error(ErrorKind::config_error,
                  "decision log is open in a write session: " + LogLock::path_for(log_path).string());
    }
    const auto records = load_dataset(ctx.at(co.input));
    const auto log = DecisionLog::load(log_path);
    auto result = clean(records, log.decisions(), CleanOptions{co.dob_review});
    const auto dir = ctx.at(co.out);
    ensure_dir(dir);
    apply_decisions(result.queue, log);
    save_queue(dir / "queue.json", result.queue);
    const auto versions = emit_versions(result, co.strict);
    save_versioned(dir, "cleaned_v2", DatasetVersion::cleaned_v2, versions.cleaned_v2);
    save_versioned(dir, "go_for_age", DatasetVersion::go_for_age, versions.go_for_age);
    save_versioned(dir, "holdout_for_age", DatasetVersion::holdout_for_age, versions.holdout_for_age);
    ordered_json j;
    j["decision_log"] = co.log;
    j["decision_log_hash"] = log.hash();
    j["decision_entries"] = log.entries().size();
    j["pending_subjects"] = result.pending_subjects;
    j["pending_records"] = result.pending_record_count;
    std::map<std::string, std::size_t> indicators;
    for (const auto& r : versions.cleaned_v2) {
      indicators[std::to_string(static_cast<int>(r.corrected.value_or(Correction::none)))]++;
    }
    j["indicator_counts"] = indicators;
    j["cleaned_v2"] = versions.cleaned_v2.size();
    j["go_for_age"] = versions.go_for_age.size();
    j["holdout_for_age"] = versions.holdout_for_age.size();
    ordered_json res = ordered_json::array();
    for (const auto& r : result.resolutions) {
      res.push_back({{"subject_id", r.subject_id},
                     {"attribute", to_string(r.attribute)},
                     {"rule", to_string(r.rule)},
                     {"value", r.resolved_value},
                     {"source", r.source == Source::human ? "human" : "automatic"}});
    }
    j["resolutions"] = res;
    write_file(dir / "clean_summary.json", j.dump(2) + "\n");
    out << fmt::format("clean: cleaned_v2 {} = go_for_age {} + holdout_for_age {}; pending subjects {}\n",
                       versions.cleaned_v2.size(), versions.go_for_age.size(),
                       versions.holdout_for_age.size(), result.pending_subjects.size());
  });

  // subset
  auto* subset_cmd = app.add_subcommand("subset", "search seeds for balanced subject-disjoint S1/S2");
  struct {
    std::string input = "clean/go_for_age.csv";
    std::string out = "subset";
    std::string seeds = "42";
    std::size_t permutations = 10000;
    std::string male_female = "3:1";
    std::string white_black = "1:1";
    std::string anchor = "WF";
    std::int64_t slack = 0;
    std::string combiner = "min";
    std::size_t repair_budget = 10000;
    unsigned threads = 0;
  } sso;
  subset_cmd->add_option("--input", sso.input, "go_for_age table");
  subset_cmd->add_option("--out", sso.out, "output directory");
  subset_cmd->add_option("--seeds", sso.seeds, "seed list, e.g. 42 or 1-50");
  subset_cmd->add_option("--permutations", sso.permutations, "Monte Carlo relabelings per test");
  subset_cmd->add_option("--male-female", sso.male_female, "image ratio");
  subset_cmd->add_option("--white-black", sso.white_black, "image ratio");
  subset_cmd->add_option("--anchor", sso.anchor, "cell fully placed in S1/S2");
  subset_cmd->add_option("--slack", sso.slack, "allowed per-side deviation in images");
  subset_cmd->add_option("--combiner", sso.combiner)->check(CLI::IsMember({"min", "mean"}));
  subset_cmd->add_option("--repair-budget", sso.repair_budget);
  subset_cmd->add_option("--threads", sso.threads);
  subset_cmd->callback([&] {
    SubsetSpec spec;
    std::tie(spec.male_weight, spec.female_weight) = parse_ratio(sso.male_female);
    std::tie(spec.white_weight, spec.black_weight) = parse_ratio(sso.white_black);
    const auto anchor = parse_cell(sso.anchor);
    if (!anchor) throw Error(ErrorKind::config_error, "bad anchor cell " + sso.anchor);
    spec.anchor = *anchor;
    spec.slack = sso.slack;
    spec.seeds = parse_seeds(sso.seeds);
    spec.permutations = sso.permutations;
    spec.combiner = sso.combiner == "mean" ? Combiner::mean : Combiner::min;
    spec.repair_budget = sso.repair_budget;
    spec.validate();
    const auto records = load_dataset(ctx.at(sso.input));
    const auto result = search_seeds(records, spec, sso.threads);
    const auto dir = ctx.at(sso.out);
    ensure_dir(dir);
    save_assignment(dir / "assignment.csv", result.best);
    write_file(dir / "scores.json", scores_to_json(result, spec).dump(2) + "\n");
    const auto summary = emit_summaries(result.best, records);
    write_file(dir / "summary.json", summary.to_json().dump(2) + "\n");
    write_file(dir / "counts.csv", summary.counts_csv);
    write_file(dir / "age_hist.csv", summary.age_hist_csv);
    write_file(dir / "ecdf.csv", summary.ecdf_csv);
    const auto top = result.ranked().front();
    out << fmt::format("subset: best seed {} (KS p {:.4f}, AD p {:.4f}); {} feasible, {} infeasible\n",
                       top.seed, top.ks_p, top.ad_p, result.scores.size(), result.infeasible.size());
  });

  // features
  auto* feat_cmd = app.add_subcommand("features", "extract LBP histograms into a cache");
  struct {
    std::string input = "clean/go_for_age.csv";
    std::string image_root = "corpus";
    std::string out = "features/features.bin";
    std::string cell = "10x10";
    bool lenient = false;
    unsigned threads = 0;
  } fo;
  feat_cmd->add_option("--input", fo.input, "records whose images to extract");
  feat_cmd->add_option("--image-root", fo.image_root, "base of image_path");
  feat_cmd->add_option("--out", fo.out, "cache file");
  feat_cmd->add_option("--cell", fo.cell, "LBP cell size WxH");
  feat_cmd->add_flag("--lenient", fo.lenient, "accept images that are not 60x70");
  feat_cmd->add_option("--threads", fo.threads);
  feat_cmd->callback([&] {
    const auto geom = parse_geometry(fo.cell);
    const auto records = load_dataset(ctx.at(fo.input));
    const auto root = ctx.at(fo.image_root);
    const auto table = extract_features(records, root, geom, !fo.lenient, fo.threads);
    const auto fingerprint = source_fingerprint(records, root);
    const auto path = ctx.at(fo.out);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    save_feature_cache(path, table, fingerprint);
    out << fmt::format("features: {} images x {} dims -> {}\n", table.size(), table.dimension(),
                       path.string());
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "fit the four directional fold models");
  struct {
    std::string input = "clean/go_for_age.csv";
    std::string assignment = "subset/assignment.csv";
    std::string features = "features/features.bin";
    std::string cell = "10x10";
    std::string out = "models";
    ProtocolFlags protocol;
  } to;
  train_cmd->add_option("--input", to.input);
  train_cmd->add_option("--assignment", to.assignment);
  train_cmd->add_option("--features", to.features);
  train_cmd->add_option("--cell", to.cell);
  train_cmd->add_option("--out", to.out, "model directory");
  to.protocol.add(train_cmd);
  train_cmd->callback([&] {
    const auto config = to.protocol.build(ctx, train_cmd);
    const auto records = load_dataset(ctx.at(to.input));
    const auto assignment = load_assignment(ctx.at(to.assignment));
    const auto features = load_feature_cache(ctx.at(to.features), parse_geometry(to.cell));
    const auto trained = train_protocol(records, features, assignment, config);
    save_protocol(ctx.at(to.out), trained);
    out << fmt::format("train: {} folds -> {}\n", trained.folds.size(), ctx.at(to.out).string());
  });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "cross-set composite age evaluation");
  struct {
    bool toy = false;
    std::uint64_t corpus_seed = 1;
    std::string input = "clean/go_for_age.csv";
    std::string assignment = "subset/assignment.csv";
    std::string features = "features/features.bin";
    std::string cell = "10x10";
    std::string models;
    std::string out = "eval";
    ProtocolFlags protocol;
  } eo;
  eval_cmd->add_flag("--toy", eo.toy, "generate and evaluate the 1,000-subject toy corpus");
  eval_cmd->add_option("--corpus-seed", eo.corpus_seed, "toy corpus seed");
  eval_cmd->add_option("--input", eo.input);
  eval_cmd->add_option("--assignment", eo.assignment);
  eval_cmd->add_option("--features", eo.features);
  eval_cmd->add_option("--cell", eo.cell);
  eval_cmd->add_option("--models", eo.models, "trained model directory (trains when omitted)");
  eval_cmd->add_option("--out", eo.out, "report directory");
  eo.protocol.add(eval_cmd);
  eval_cmd->callback([&] {
    auto config = eo.protocol.build(ctx, eval_cmd);
    EvalReport report;
    if (eo.toy) {
      report = toy_mode(config, eo.corpus_seed).report;
    } else {
      const auto records = load_dataset(ctx.at(eo.input));
      const auto assignment = load_assignment(ctx.at(eo.assignment));
      const auto features = load_feature_cache(ctx.at(eo.features), parse_geometry(eo.cell));
      if (eo.models.empty()) {
        report = run_protocol(records, features, assignment, config);
      } else {
        auto trained = load_protocol(ctx.at(eo.models));
        trained.config.threads = config.threads;
        report = evaluate_protocol(records, features, assignment, trained);
      }
    }
    write_report(ctx.at(eo.out), report);
    out << report.table();
    if (!report.leakage.clean()) {
      throw Error(ErrorKind::config_error,
                  fmt::format("{} train/test subject overlaps", report.leakage.violations.size()));
    }
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "local adjudication service");
  struct {
    std::string queue = "audit/queue.json";
    std::string log = "decisions.jsonl";
    std::string image_root = "corpus";
    std::string static_dir = "ui";
    std::string host = "127.0.0.1";
    int port = 8080;
  } vo;
  serve_cmd->add_option("--queue", vo.queue, "queue written by audit or clean");
  serve_cmd->add_option("--log", vo.log, "decision log (append-only)");
  serve_cmd->add_option("--image-root", vo.image_root);
  serve_cmd->add_option("--static-dir", vo.static_dir, "built UI bundle");
  serve_cmd->add_option("--host", vo.host);
  serve_cmd->add_option("--port", vo.port, "0 picks a free port");
  serve_cmd->callback([&] {
    const auto log_path = ctx.at(vo.log);
    LogLock lock(log_path);
    AdjudicationService service(load_queue(ctx.at(vo.queue)), DecisionLog::load(log_path),
                                ctx.at(vo.image_root), ctx.at(vo.static_dir));
    const int port = service.bind(vo.host, vo.port);
    out << fmt::format("serve: http://{}:{}/\n", vo.host, port) << std::flush;
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.run();
    g_service = nullptr;
  });

  // report
  auto* report_cmd = app.add_subcommand("report", "bundle stage summaries");
  struct {
    std::string out = "report";
  } ro;
  report_cmd->add_option("--out", ro.out);
  report_cmd->callback([&] {
    const std::pair<const char*, const char*> parts[] = {
        {"generator", "corpus/gen_spec.json"}, {"audit", "audit/report.json"},
        {"clean", "clean/clean_summary.json"}, {"subset_scores", "subset/scores.json"},
        {"subset_summary", "subset/summary.json"}, {"evaluation", "eval/report.json"}};
    ordered_json bundle;
    std::string text;
    for (const auto& [key, rel] : parts) {
      const auto path = ctx.at(rel);
      if (!fs::exists(path)) continue;
      bundle[key] = ordered_json::parse(read_file(path));
      text += fmt::format("== {} ({})\n", key, rel);
    }
    if (fs::exists(ctx.at("eval/report.txt"))) text += read_file(ctx.at("eval/report.txt"));
    if (bundle.empty()) throw Error(ErrorKind::config_error, "nothing to bundle under " + ctx.base().string());
    const auto dir = ctx.at(ro.out);
    ensure_dir(dir);
    write_file(dir / "bundle.json", bundle.dump(2) + "\n");
    write_file(dir / "bundle.txt", text);
    out << text;
  });

  // CLI11 takes argv-style input.
  std::vector<std::string> argv_store{"lfkit"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  // The first bare word after the global options names the subcommand.
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--data-dir" || a == "--config") {
      ++i;
      continue;
    }
    if (a.empty() || a.front() == '-') continue;
    bool known = false;
    for (auto* sub : app.get_subcommands({})) known = known || sub->check_name(a);
    if (!known) {
      write_error(err, "UnknownSubcommand", "unknown subcommand " + a);
      return kExitValidation;
    }
    break;
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    write_error(err, "ConfigError", e.what());
    return kExitValidation;
  } catch (const Error& e) {
    write_error(err, to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    write_error(err, "IoError", e.what());
    return kExitValidation;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace lfkit
