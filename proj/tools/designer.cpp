#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "designer/pipeline/pipeline.hpp"

namespace dp = designer::pipeline;

namespace {

struct Overrides {
  std::string config = "pipeline.toml";
  bool dry_run = false;
  std::optional<std::uint64_t> seed;
  std::string kill_after;
  std::optional<std::size_t> max_words;
  std::optional<int> min_score;
  std::optional<std::size_t> total;
  std::string taxonomy;
  std::optional<std::size_t> quota_total;
  std::string ratio;
  std::optional<double> tau;
  std::optional<std::size_t> k;
  std::optional<double> threshold;
  std::vector<std::string> benchmarks;
  std::optional<std::size_t> n;
  std::string metrics;
  std::optional<std::size_t> sample;
  bool csv = false;
};

void apply(const Overrides& o, dp::PipelineConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.max_words) c.max_words = *o.max_words;
  if (o.min_score) c.min_score = *o.min_score;
  if (o.total) c.book_total = *o.total;
  if (!o.taxonomy.empty()) c.taxonomy_path = o.taxonomy;
  if (o.quota_total) c.quota_total = *o.quota_total;
  if (!o.ratio.empty()) c.ratio = designer::parse_ratio(o.ratio);
  if (o.tau) c.tau = *o.tau;
  if (o.k) c.top_k = *o.k;
  if (o.threshold) c.question_dedup.threshold = *o.threshold;
  if (!o.benchmarks.empty()) c.benchmarks.assign(o.benchmarks.begin(), o.benchmarks.end());
  if (o.n) c.ngram_n = *o.n;
  if (!o.metrics.empty()) {
    if (o.metrics != "all" && o.metrics != "distribution") {
      throw designer::Error(designer::ErrorCode::invalid_argument, "--metrics must be all or distribution");
    }
    c.diversity = o.metrics == "all";
  }
  if (o.sample) c.sample = *o.sample;
  if (o.csv) c.csv = true;
  c.validate();
}

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "pipeline TOML file")->capture_default_str();
  app->add_flag("--dry-run", o.dry_run, "print the plan and exit");
  app->add_option("--seed", o.seed, "override the random seed");
  app->add_option("--kill-after", o.kill_after, "abort stage:N after N committed items (crash testing)");
}

void print_result(const dp::StageResult& r) {
  std::cerr << r.stage << ": ";
  if (r.skipped) {
    std::cerr << "up to date";
  } else if (r.processed) {
    std::cerr << r.processed << " items processed";
  } else {
    std::cerr << "done";
  }
  if (r.quarantined) std::cerr << ", " << r.quarantined << " quarantined";
  std::cerr << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reasoning-question synthesis pipeline"};
  app.require_subcommand(1);
  Overrides o;

  auto* all = app.add_subcommand("run-all", "run every stage in order");
  add_common(all, o);

  std::vector<std::pair<std::string, CLI::App*>> stages;
  for (const auto& name : dp::stage_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " stage");
    add_common(sub, o);
    stages.emplace_back(name, sub);
  }
  auto stage = [&](const std::string& name) {
    for (auto& [n, s] : stages) {
      if (n == name) return s;
    }
    return static_cast<CLI::App*>(nullptr);
  };
  for (const char* s : {"curate-book", "curate-web"}) {
    stage(s)->add_option("--max-words", o.max_words, "words per book block");
    stage(s)->add_option("--min-score", o.min_score, "minimum web reasoning score");
    stage(s)->add_option("--total", o.total, "book segments to keep (0 = all readable)");
    stage(s)->add_option("--taxonomy", o.taxonomy, "discipline list, one per line");
  }
  for (const char* s : {"label-bank", "select-subset"}) {
    stage(s)->add_option("--quota-total", o.quota_total, "questions to select (0 = all)");
    stage(s)->add_option("--ratio", o.ratio, "Very Hard:Hard:Medium ratio, e.g. 3:2:1");
    stage(s)->add_option("--taxonomy", o.taxonomy, "discipline list, one per line");
  }
  stage("dedup-logic")->add_option("--tau", o.tau, "cosine similarity threshold");
  stage("match-synthesize")->add_option("--k", o.k, "candidate logics per document");
  stage("dedup-questions")->add_option("--threshold", o.threshold, "Jaccard threshold");
  stage("decontaminate")->add_option("--benchmarks", o.benchmarks, "benchmark JSONL files");
  stage("decontaminate")->add_option("--n", o.n, "n-gram length");
  stage("analyze")->add_option("--metrics", o.metrics, "all or distribution");
  stage("analyze")->add_option("--sample", o.sample, "records sampled for diversity metrics");
  stage("analyze")->add_flag("--csv", o.csv, "also write one CSV per table");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = dp::load_config(o.config);
    apply(o, config);
    dp::Pipeline pipeline(config);
    if (!o.kill_after.empty()) pipeline.set_kill_point(dp::parse_kill_point(o.kill_after));

    if (o.dry_run) {
      std::cout << pipeline.plan();
      return 0;
    }
    std::size_t quarantined = 0;
    if (all->parsed()) {
      const auto report = pipeline.run_all();
      for (const auto& r : report.stages) print_result(r);
      quarantined = report.quarantined;
    } else {
      for (auto& [name, sub] : stages) {
        if (!sub->parsed()) continue;
        const auto r = pipeline.run_stage(name);
        print_result(r);
        quarantined = r.quarantined;
      }
    }
    for (const auto& [key, count] : pipeline.warnings().snapshot()) {
      std::cerr << "warning: " << key << " x" << count << "\n";
    }
    return quarantined ? 2 : 0;
  } catch (const designer::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
