// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Reference values come from tests/oracles.hpp.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "designer/analytics.hpp"
#include "designer/mock_provider.hpp"
#include "designer/pipeline/pipeline.hpp"
#include "designer/postprocess.hpp"
#include "designer/qbank.hpp"
#include "designer/retrieval.hpp"
#include "oracles.hpp"

using namespace designer;
namespace dp = designer::pipeline;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DESIGNER_DATA_DIR;

/// Collects mismatches; the first few are printed under the verdict line.
struct Check {
  std::size_t cases = 0;
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    ++cases;
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool close(double got, double want, double tol) { return std::abs(got - want) <= tol * std::max(1.0, std::abs(want)); }

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::string fixed(double x, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

// ---------------------------------------------------------------------------

Check graph_dedup(std::string& note) {
  Check c;
  const auto t0 = Clock::now();
  for (std::size_t n : {5, 50, 200}) {
    for (double tau : {0.5, 0.85, 0.99}) {
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed * 7919 + n);
        const auto m = oracle::random_similarity(n, rng, tau);
        const auto got = dedup_by_similarity(oracle::to_matrix(m), EdgeRule{tau});
        c.expect(got.kept == oracle::dedup_kept(m, tau),
                 "n=" + std::to_string(n) + " tau=" + fmt(tau) + " seed=" + std::to_string(seed));
      }
    }
  }
  // Through the logic-level entry point, on real embeddings.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pts = oracle::random_points(120, 3, rng);
    std::vector<DesignLogic> ls;
    oracle::Matrix s(pts.size(), std::vector<double>(pts.size(), 1.0));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      DesignLogic l;
      l.id = "l" + std::to_string(i);
      l.discipline = Discipline{"Physics"};
      l.embedding = EmbeddingVector{pts[i]};
      ls.push_back(l);
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (i != j) s[i][j] = oracle::cos_sim(pts[i], pts[j]);
      }
    }
    const auto r = dedup_design_logics(ls, EdgeRule{0.85});
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < r.logics.size(); ++i) {
      if (r.logics[i].status == LogicStatus::active) kept.push_back(i);
    }
    c.expect(kept == oracle::dedup_kept(s, 0.85), "embedding seed=" + std::to_string(seed));
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 5.0, "runtime " + fmt(elapsed) + " s");

  SimilarityMatrix four(4);
  four.set(0, 1, 0.9);
  four.set(1, 2, 0.9);
  four.set(0, 2, 0.5);
  c.expect(dedup_by_similarity(four, EdgeRule{0.85}).kept == std::vector<std::size_t>{1, 3}, "n=4 instance");
  note = std::to_string(c.cases) + " cases, " + fixed(elapsed, 2) + " s";
  return c;
}

Check default_constants(std::string& note) {
  Check c;
  auto check = [&](const dp::PipelineConfig& cfg, const std::string& where) {
    c.expect(cfg.tau == 0.85, where + ": tau " + fmt(cfg.tau));
    c.expect(cfg.top_k == 5, where + ": top_k " + std::to_string(cfg.top_k));
    c.expect(cfg.ngram_n == 13, where + ": ngram n " + std::to_string(cfg.ngram_n));
    c.expect(format_ratio(cfg.ratio) == "3:2:1", where + ": ratio " + format_ratio(cfg.ratio));
    c.expect(cfg.max_words == 5000, where + ": max_words " + std::to_string(cfg.max_words));
    c.expect(cfg.min_score == 3, where + ": min_score " + std::to_string(cfg.min_score));
  };
  check(dp::PipelineConfig{}, "built-in defaults");
  check(dp::parse_config("", "."), "empty TOML");
  check(dp::load_config(kData / "pipeline.toml"), "bundled pipeline.toml");
  // The library-level defaults the stages fall back on.
  c.expect(EdgeRule{}.tau == 0.85, "EdgeRule default");
  c.expect(kDefaultRatio == DifficultyRatio{3, 2, 1}, "kDefaultRatio");
  c.expect(kDefaultMaxBookWords == 5000, "kDefaultMaxBookWords");
  c.expect(NGramIndex().n() == 13, "NGramIndex default n");
  note = "tau 0.85, top-k 5, n 13, ratio 3:2:1, 5000 words, min score 3";
  return c;
}

Check diversity_metrics(std::string& note) {
  Check c;
  const auto t0 = Clock::now();
  constexpr double kTol = 1e-9;
  std::size_t largest = 0;
  for (std::size_t d : {8, 64}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed * 31 + d);
      // Sizes sweep up to 2000.
      const std::size_t n = seed % 5 == 4 ? 2000 : 2 + (seed * 137) % 700;
      largest = std::max(largest, n);
      const auto e = oracle::random_points(n, d, rng);
      const std::string tag = " d=" + std::to_string(d) + " seed=" + std::to_string(seed) + " n=" + std::to_string(n);
      const auto pd = mean_pairwise_distances(e);
      c.expect(close(pd.cosine, oracle::mean_cosine_distance(e), kTol), "cosine" + tag);
      c.expect(close(pd.l2, oracle::mean_l2_distance(e), kTol), "l2" + tag);
      c.expect(close(one_nn_distance(e), oracle::one_nn(e), kTol), "1-nn" + tag);
      c.expect(close(radius(e), oracle::radius(e), kTol), "radius" + tag);
      const auto k = default_inertia_k(n);
      const auto km = kmeans(e, k, seed);
      double want = 0;
      for (const auto& p : e) {
        double best = 1e300;
        for (const auto& centre : km.centroids) best = std::min(best, oracle::euclid(p, centre) * oracle::euclid(p, centre));
        want += best;
      }
      c.expect(close(cluster_inertia(e, k, seed).inertia, want, kTol), "inertia" + tag);
    }
  }
  // Analytic cases, exact.
  const Points same(6, {0.5, -2.0, 3.0});
  c.expect(mean_pairwise_distances(same).l2 == 0.0, "identical set l2");
  c.expect(std::abs(mean_pairwise_distances(same).cosine) <= 1e-15, "identical set cosine");
  c.expect(radius(same) == 0.0, "identical set radius");
  c.expect(std::abs(one_nn_distance(same)) <= 1e-15, "identical set 1-nn");
  c.expect(cluster_inertia(same, 1, 0).inertia == 0.0, "identical set inertia");
  const auto ortho = mean_pairwise_distances({{1, 0}, {0, 1}});
  c.expect(ortho.cosine == 1.0, "orthogonal cosine " + fmt(ortho.cosine));
  c.expect(ortho.l2 == std::sqrt(2.0), "orthogonal l2 " + fmt(ortho.l2));
  const double r124 = radius({{-1, -2, -4}, {1, 2, 4}});
  c.expect(std::abs(r124 - 2.0) <= 4 * std::numeric_limits<double>::epsilon(), "sigma (1,2,4) radius " + fmt(r124));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  note = "N up to " + std::to_string(largest) + ", d 8/64, 20 seeds, " + fixed(elapsed, 1) + " s";
  return c;
}

/// Lowercase pseudo-words; `space` picks a disjoint vocabulary.
std::string token(std::mt19937_64& rng, int space) {
  return oracle::word(static_cast<std::size_t>(space) * 1000000 + rng() % 50000);
}

std::vector<std::string> tokens(std::mt19937_64& rng, std::size_t n, int space) {
  std::vector<std::string> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(token(rng, space));
  return t;
}

std::string join(const std::vector<std::string>& t, std::size_t b, std::size_t e) {
  std::string s;
  for (std::size_t i = b; i < e; ++i) s += (i == b ? "" : " ") + t[i];
  return s;
}

/// Sprinkles punctuation and capitals without touching letters.
std::string punctuate(const std::string& s, std::mt19937_64& rng) {
  static const std::vector<std::string> marks = {",", ".", ";", ":", "!", "?", "'", "\"", "(", ")", "-", "—", "«"};
  std::string out;
  bool start = true;
  for (char ch : s) {
    if (ch == ' ') {
      if (rng() % 2) out += marks[rng() % marks.size()];
      out += ' ';
      start = true;
      continue;
    }
    if (start && rng() % 3 == 0) out += marks[rng() % marks.size()];
    out += (start && rng() % 2) ? static_cast<char>(std::toupper(static_cast<unsigned char>(ch))) : ch;
    start = false;
  }
  return out;
}

Check decontamination(std::string& note) {
  Check c;
  std::mt19937_64 rng(20240611);
  std::vector<std::vector<std::string>> bench;
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 200; ++i) {
    bench.push_back(tokens(rng, 30 + rng() % 30, 0));
    items.push_back({i % 2 ? "gpqa" : "mmlu-pro", join(bench.back(), 0, bench.back().size())});
  }
  const auto idx = build_ngram_index(items, 13);

  std::vector<std::string> thirteen, twelve, punct;
  for (int i = 0; i < 200; ++i) {
    const auto& b = bench[static_cast<std::size_t>(i)];
    const std::size_t s13 = rng() % (b.size() - 13 + 1);
    const std::size_t s12 = rng() % (b.size() - 12 + 1);
    const auto pre = join(tokens(rng, 5 + rng() % 20, 1), 0, 5);
    const auto post = join(tokens(rng, 5 + rng() % 20, 1), 0, 5);
    thirteen.push_back(pre + " " + join(b, s13, s13 + 13) + " " + post);
    twelve.push_back(pre + " " + join(b, s12, s12 + 12) + " " + post);
    punct.push_back(punctuate(thirteen.back(), rng));
  }
  const auto r13 = decontaminate(thirteen, idx);
  const auto r12 = decontaminate(twelve, idx);
  const auto rp = decontaminate(punct, idx);
  const auto flagged = [](const DecontaminationResult& r) {
    return static_cast<std::size_t>(std::count(r.contaminated.begin(), r.contaminated.end(), true));
  };
  c.expect(flagged(r13) == 200, "13-token overlaps flagged: " + std::to_string(flagged(r13)) + "/200");
  c.expect(flagged(r12) == 0, "12-token overlaps flagged: " + std::to_string(flagged(r12)) + "/200");
  c.expect(flagged(rp) == 200, "punctuation variants flagged: " + std::to_string(flagged(rp)) + "/200");

  // Random 1000-record corpora against the sliding-window oracle.
  std::vector<std::vector<std::string>> bench_tokens;
  for (const auto& b : bench) bench_tokens.push_back(oracle::ascii_tokens(join(b, 0, b.size())));
  std::size_t agree = 0, total = 0, positives = 0;
  for (int corpus = 0; corpus < 3; ++corpus) {
    std::vector<std::string> records;
    for (int i = 0; i < 1000; ++i) {
      std::string text = join(tokens(rng, 3, 1), 0, 3);
      const auto pieces = 1 + rng() % 3;
      for (std::size_t p = 0; p < pieces; ++p) {
        const auto& b = bench[rng() % bench.size()];
        const std::size_t len = 8 + rng() % 10;
        const std::size_t s = rng() % (b.size() - len + 1);
        text += " " + join(b, s, s + len) + " " + join(tokens(rng, 2, 1), 0, 2);
      }
      records.push_back(rng() % 2 ? punctuate(text, rng) : text);
    }
    const auto r = decontaminate(records, idx);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto t = oracle::ascii_tokens(records[i]);
      bool want = false;
      for (const auto& b : bench_tokens) want = want || oracle::shares_ngram(t, b, 13);
      positives += want;
      ++total;
      agree += r.contaminated[i] == want;
      if (r.contaminated[i] != want) c.expect(false, "oracle disagreement corpus " + std::to_string(corpus));
    }
  }
  c.expect(agree == total, "agreement " + std::to_string(agree) + "/" + std::to_string(total));
  note = "200/200 planted 13-grams, 0/200 12-grams, oracle agreement " + std::to_string(agree) + "/" +
         std::to_string(total) + " (" + std::to_string(positives) + " positives)";
  return c;
}

Check minhash_dedup(std::string& note) {
  Check c;
  // Pairs (base, shifted copy): m shingles each, shift s gives J = (m-s)/(m+s).
  std::mt19937_64 rng(5);
  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> toks;
  const std::size_t m = 60;
  const std::size_t shifts[] = {0, 1, 2, 3, 4, 5, 6, 8, 10, 14, 20, 30, 45};
  int space = 2;
  for (int rep = 0; rep < 10; ++rep) {
    for (auto s : shifts) {
      const auto t = tokens(rng, m + 4 + s, space++);
      texts.push_back(join(t, 0, m + 4));
      texts.push_back(join(t, s, m + 4 + s));
    }
  }
  for (int i = 0; i < 60; ++i) texts.push_back(join(tokens(rng, 20 + rng() % 60, space++), 0, 20));
  for (const auto& t : texts) toks.push_back(oracle::ascii_tokens(t));

  const auto n = texts.size();
  std::vector<std::vector<double>> exact(n, std::vector<double>(n, 0.0));
  std::vector<std::set<std::vector<std::string>>> sets;
  for (const auto& t : toks) sets.push_back(oracle::shingle_set(t, 5));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) exact[i][j] = exact[j][i] = oracle::jaccard(sets[i], sets[j]);
  }

  double worst_err = 0;
  std::size_t high_pairs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MinHashParams p;
    p.seed = seed;
    const auto r = near_duplicates(texts, p);
    std::vector<std::size_t> group(n);
    std::iota(group.begin(), group.end(), 0);
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      for (auto i : r.groups[g]) group[i] = n + g;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (exact[i][j] >= 0.9) {
          high_pairs += seed == 0;
          c.expect(group[i] == group[j], "missed pair J=" + fmt(exact[i][j]) + " seed " + std::to_string(seed));
        }
      }
    }
    // Each group must be connected through pairs with exact J >= 0.8.
    for (const auto& g : r.groups) {
      std::set<std::size_t> reached = {g.front()};
      std::vector<std::size_t> frontier = {g.front()};
      while (!frontier.empty()) {
        const auto x = frontier.back();
        frontier.pop_back();
        for (auto y : g) {
          if (!reached.count(y) && exact[x][y] >= 0.8) {
            reached.insert(y);
            frontier.push_back(y);
          }
        }
      }
      c.expect(reached.size() == g.size(), "group joined below 0.8, seed " + std::to_string(seed));
    }
  }
  // Estimator error per planted pair, averaged over 20 seeds.
  for (std::size_t i = 0; i + 1 < 10 * std::size(shifts) * 2; i += 2) {
    double err = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      err += std::abs(estimate_jaccard(minhash_signature(texts[i], 128, 5, seed), minhash_signature(texts[i + 1], 128, 5, seed)) -
                      exact[i][i + 1]);
    }
    err /= 20.0;
    worst_err = std::max(worst_err, err);
    c.expect(err <= 0.1, "estimate error " + fmt(err) + " at J=" + fmt(exact[i][i + 1]));
  }
  note = std::to_string(high_pairs) + " pairs with J>=0.9 found in all 20 seeds, worst mean |est-exact| " +
         fixed(worst_err, 3);
  return c;
}

Check retrieval(std::string& note) {
  Check c;
  std::size_t largest = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    std::mt19937_64 rng(i + 100);
    const std::size_t n = 1 + (i * 997 + 13) % 10000;
    const std::size_t n_eff = i == 49 ? 10000 : n;
    largest = std::max(largest, n_eff);
    const std::size_t d = 8 + (i % 4) * 8;
    LogicIndex idx("Physics");
    const auto pts = oracle::random_points(n_eff, d, rng);
    for (std::size_t j = 0; j < n_eff; ++j) idx.add("logic-" + std::to_string(j), EmbeddingVector{pts[j]});
    const EmbeddingVector q{oracle::random_points(1, d, rng)[0]};
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t j = 0; j < n_eff; ++j) all.emplace_back(oracle::cos_sim(q.values, pts[j]), "logic-" + std::to_string(j));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t k : {1, 5, 50}) {
      const auto got = retrieve_top_k(q, idx, k);
      bool same = got.size() == std::min(k, n_eff);
      for (std::size_t r = 0; same && r < got.size(); ++r) {
        same = got[r].logic_id == all[r].second && std::abs(got[r].score - all[r].first) <= 1e-12;
      }
      c.expect(same, "index " + std::to_string(i) + " k=" + std::to_string(k));
    }
    const auto self = rng() % n_eff;
    const auto top = retrieve_top_k(idx.vector(self), idx, 5);
    c.expect(top[0].logic_id == "logic-" + std::to_string(self) && std::abs(top[0].score - 1.0) <= 1e-9,
             "identity query index " + std::to_string(i));
  }
  note = "50 indices up to n=" + std::to_string(largest) + ", k in {1,5,50}";
  return c;
}

Points blobs(std::mt19937_64& rng, std::size_t per_blob, std::size_t blobs_n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  Points centers;
  while (centers.size() < blobs_n) {
    std::vector<double> c = {u(rng), u(rng)};
    bool far = true;
    for (const auto& o : centers) far = far && oracle::euclid(c, o) > 30.0;
    if (far) centers.push_back(c);
  }
  Points out;
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < per_blob; ++i) out.push_back({c[0] + g(rng), c[1] + g(rng)});
  }
  return out;
}

QuestionRecord with_difficulty(const std::string& id, std::optional<Difficulty> d) {
  QuestionRecord q;
  q.id = id;
  q.text = id;
  q.discipline = Discipline{"Physics"};
  q.difficulty = d;
  return q;
}

std::vector<QuestionRecord> strata(std::size_t vh, std::size_t h, std::size_t m, std::size_t e, const std::string& tag) {
  std::vector<QuestionRecord> out;
  const std::pair<std::size_t, Difficulty> spec[] = {
      {vh, Difficulty::very_hard}, {h, Difficulty::hard}, {m, Difficulty::medium}, {e, Difficulty::easy}};
  for (const auto& [count, d] : spec) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(with_difficulty(tag + std::string(to_string(d)) + std::to_string(i), d));
  }
  return out;
}

/// Hamilton apportionment; earlier index wins ties.
std::vector<std::size_t> apportion(const std::vector<double>& w, std::size_t total) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t given = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = w[i] / sum * static_cast<double>(total);
    out.push_back(static_cast<std::size_t>(std::floor(exact)));
    given += out.back();
    rem.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t i = 0; i < total - given; ++i) ++out[rem[i].second];
  return out;
}

std::array<std::size_t, 4> counts_of(const std::vector<QuestionRecord>& qs) {
  std::array<std::size_t, 4> c{};
  for (const auto& q : qs) {
    switch (*q.difficulty) {
      case Difficulty::very_hard: ++c[0]; break;
      case Difficulty::hard: ++c[1]; break;
      case Difficulty::medium: ++c[2]; break;
      case Difficulty::easy: ++c[3]; break;
    }
  }
  return c;
}

Check clustering_sampling(std::string& note) {
  Check c;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto p = blobs(rng, 10 + seed % 10, 3);
    const auto k = choose_k_by_silhouette(p, seed).k;
    c.expect(k == 3, "seed " + std::to_string(seed) + " chose k=" + std::to_string(k));
  }

  // Abundant strata: per-cluster difficulty counts hit the apportioned targets.
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nc = 1 + rng() % 6;
    const std::size_t quota = rng() % 120;
    std::vector<std::vector<QuestionRecord>> clusters;
    for (std::size_t i = 0; i < nc; ++i) clusters.push_back(strata(60, 60, 60, 20, "c" + std::to_string(i) + "-"));
    const auto r = stratified_sample(clusters, quota, kDefaultRatio, static_cast<std::uint64_t>(trial));
    const auto shares = apportion(std::vector<double>(nc, 1.0), quota);
    bool ok = r.selected.size() == quota && r.shortfall == 0;
    for (std::size_t i = 0; i < nc && ok; ++i) {
      std::vector<QuestionRecord> mine;
      for (const auto& q : r.selected) {
        if (q.id.rfind("c" + std::to_string(i) + "-", 0) == 0) mine.push_back(q);
      }
      const auto want = apportion({3, 2, 1}, shares[i]);
      const auto got = counts_of(mine);
      ok = got[0] == want[0] && got[1] == want[1] && got[2] == want[2] && got[3] == 0;
    }
    c.expect(ok, "ratio trial " + std::to_string(trial));
  }

  // Short strata: harder neighbour first, then easier, Easy last.
  struct Case {
    std::array<std::size_t, 4> pool;
    std::array<std::size_t, 4> want;
  };
  const Case cases[] = {
      {{0, 10, 10, 10}, {0, 5, 1, 0}},  // no Very Hard: Hard absorbs it
      {{10, 0, 10, 10}, {5, 0, 1, 0}},  // no Hard: the harder neighbour first
      {{10, 10, 0, 10}, {3, 3, 0, 0}},  // no Medium
      {{1, 1, 1, 10}, {1, 1, 1, 3}},    // Easy only once the rest is exhausted
      {{0, 0, 2, 10}, {0, 0, 2, 4}},
  };
  for (const auto& cs : cases) {
    const auto r = stratified_sample({strata(cs.pool[0], cs.pool[1], cs.pool[2], cs.pool[3], "x")}, 6, kDefaultRatio, 3);
    const auto got = counts_of(r.selected);
    c.expect(got == cs.want, "backfill case " + std::to_string(cs.pool[0]) + "/" + std::to_string(cs.pool[1]) + "/" +
                                 std::to_string(cs.pool[2]) + "/" + std::to_string(cs.pool[3]));
  }
  note = "k=3 on 20 seeds, 200 ratio trials, 5 backfill cases";
  return c;
}

std::map<std::string, std::string> store_snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir / "stores")) {
    if (e.is_regular_file()) out[e.path().lexically_relative(dir).string()] = jsonl::read_file(e.path());
  }
  return out;
}

Check end_to_end(std::string& note) {
  Check c;
  TempDir a, b, k;
  auto config = [&](const fs::path& dir) {
    auto cfg = dp::load_config(kData / "pipeline.toml");
    cfg.store_dir = dir;
    return cfg;
  };
  auto t1 = std::make_shared<mock::MockTransport>(64);
  dp::Pipeline(config(a.path), t1).run_all();
  const auto golden = store_snapshot(a.path);

  const auto seg = dp::Pipeline(config(a.path)).load_manifest("curate-book");
  const auto web = dp::Pipeline(config(a.path)).load_manifest("curate-web");
  const auto bank = dp::Pipeline(config(a.path)).load_manifest("label-bank");
  c.expect(seg && seg->completed.size() == 50, "fixture book segments");
  c.expect(web && web->completed.size() == 30, "fixture web pages");
  c.expect(bank && bank->completed.size() == 40, "fixture bank questions");

  dp::Pipeline(config(b.path)).run_all();
  c.expect(store_snapshot(b.path) == golden, "second independent run differs");

  // Kills at several stages, each resumed by a fresh pipeline.
  std::size_t kills = 0;
  for (const char* point : {"label-bank:13", "curate-book:25", "curate-web:0", "extract-logic:7", "dedup-logic:0",
                            "match-synthesize:33", "decontaminate:0", "respond:50", "analyze:10"}) {
    dp::Pipeline p(config(k.path));
    p.set_kill_point(dp::parse_kill_point(point));
    try {
      p.run_all();
      c.expect(false, std::string("kill point never reached: ") + point);
    } catch (const Error& e) {
      c.expect(e.code() == ErrorCode::injected_kill, std::string("unexpected error: ") + e.what());
      ++kills;
    }
  }
  dp::Pipeline(config(k.path)).run_all();
  c.expect(store_snapshot(k.path) == golden, "killed-and-resumed run differs");

  auto t2 = std::make_shared<mock::MockTransport>(64);
  dp::Pipeline(config(a.path), t2).run_all();
  c.expect(t2->calls() == 0, "cached second run made " + std::to_string(t2->calls()) + " calls");
  fs::remove_all(a.path / "stores");
  fs::remove_all(a.path / "manifests");
  dp::Pipeline(config(a.path), t2).run_all();
  c.expect(t2->calls() == 0, "rebuild from cache made " + std::to_string(t2->calls()) + " calls");
  c.expect(store_snapshot(a.path) == golden, "rebuild from cache differs");
  note = std::to_string(golden.size()) + " store files identical across 2 runs and " + std::to_string(kills) +
         " kills; " + std::to_string(t1->calls()) + " calls first run, 0 cached";
  return c;
}

Check distribution(std::string& note) {
  Check c;
  std::vector<QuestionRecord> rs;
  const std::pair<QuestionType, std::size_t> table[] = {{QuestionType::problem_solving, 6492},
                                                        {QuestionType::multiple_choice, 2994},
                                                        {QuestionType::proof, 439},
                                                        {QuestionType::other, 75}};
  std::size_t id = 0;
  for (const auto& [t, n] : table) {
    for (std::size_t i = 0; i < n; ++i) {
      auto q = with_difficulty("q" + std::to_string(id++), Difficulty::hard);
      q.qtype = t;
      rs.push_back(q);
    }
  }
  const auto r = distribution_report(rs);
  c.expect(r.by_qtype.at("Problem-solving") == 64.92, "problem-solving " + fmt(r.by_qtype.at("Problem-solving")));
  c.expect(r.by_qtype.at("Multiple-choice") == 29.94, "multiple-choice " + fmt(r.by_qtype.at("Multiple-choice")));
  c.expect(r.by_qtype.at("Proof") == 4.39, "proof " + fmt(r.by_qtype.at("Proof")));
  c.expect(r.by_qtype.at("Other") == 0.75, "other " + fmt(r.by_qtype.at("Other")));

  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    std::vector<QuestionRecord> random;
    const std::size_t n = 1 + rng() % 3000;
    for (std::size_t i = 0; i < n; ++i) {
      auto q = with_difficulty("r" + std::to_string(i), kAllDifficulties[rng() % 4]);
      q.qtype = kAllQuestionTypes[rng() % 4];
      random.push_back(q);
    }
    const auto d = distribution_report(random);
    double qs = 0, ds = 0;
    for (const auto& [_, v] : d.by_qtype) qs += v;
    for (const auto& [_, v] : d.by_difficulty) ds += v;
    c.expect(std::abs(qs - 100.0) <= 0.01 && std::abs(ds - 100.0) <= 0.01, "random corpus " + std::to_string(t));
  }
  note = "64.92 / 29.94 / 4.39 / 0.75 reproduced; 100 random corpora sum to 100";
  return c;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Check(std::string&)>> criteria[] = {
      {"graph dedup equals brute-force oracle", graph_dedup},
      {"default constants", default_constants},
      {"diversity metrics equal naive oracles", diversity_metrics},
      {"13-gram decontamination", decontamination},
      {"MinHash near-duplicate detection", minhash_dedup},
      {"exact top-k retrieval", retrieval},
      {"silhouette k and stratified sampling", clustering_sampling},
      {"end-to-end determinism and resume", end_to_end},
      {"distribution report", distribution},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    std::string note;
    Check c;
    try {
      c = run(note);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", n, name, ok ? note.c_str() : "");
    for (std::size_t i = 0; i < std::min<std::size_t>(5, c.failures.size()); ++i) {
      std::printf("     - %s\n", c.failures[i].c_str());
    }
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
