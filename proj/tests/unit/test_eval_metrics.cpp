#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "polyrl/eval_metrics.hpp"
#include "polyrl/rng.hpp"

using namespace polyrl;

namespace {

// Fraction of k-subsets of {0..N-1} hitting one of the first c items.
double pass_by_subsets(std::size_t n, std::size_t c, std::size_t k) {
  std::size_t hit = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    ++total;
    if (mask & ((1u << c) - 1)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

std::string corpus_path() { return std::string(POLYRL_EXAMPLES_DIR) + "/corpus.jsonl"; }

}  // namespace

TEST_CASE("pass@k examples") {
  CHECK(pass_at_k_exact(4, 2, 2) == Rational{5, 6});
  CHECK(pass_at_k(4, 2, 2) == doctest::Approx(5.0 / 6));
  for (std::size_t k = 1; k <= 6; ++k) CHECK(pass_at_k(6, 0, k) == 0.0);
  CHECK(pass_at_k(6, 1, 6) == 1.0);
  CHECK(pass_at_k(6, 0, 6) == 0.0);
  CHECK_CODE(pass_at_k(4, 2, 5), ErrorCode::kKExceedsN);
  CHECK_CODE(pass_at_k(4, 2, 0), ErrorCode::kInvalidParams);
  CHECK_CODE(pass_at_k(4, 5, 2), ErrorCode::kInvalidParams);
}

TEST_CASE("pass@k equals subset enumeration up to N = 12") {
  for (std::size_t n = 1; n <= 12; ++n) {
    for (std::size_t c = 0; c <= n; ++c) {
      for (std::size_t k = 1; k <= n; ++k) {
        const auto r = pass_at_k_exact(n, c, k);
        CHECK(r.value() == doctest::Approx(pass_by_subsets(n, c, k)).epsilon(1e-15));
        if (k > 1) CHECK(pass_at_k(n, c, k) >= pass_at_k(n, c, k - 1));
        if (c > 0) CHECK(pass_at_k(n, c, k) >= pass_at_k(n, c - 1, k));
      }
    }
  }
}

TEST_CASE("majority vote") {
  auto v = majority_at_k(std::vector<std::string>{"a", "a", "b"}, "a");
  CHECK(v.is_correct);
  CHECK(v.vote_share == doctest::Approx(2.0 / 3));
  v = majority_at_k(std::vector<std::string>{"a", "b"}, "b");
  CHECK_FALSE(v.is_correct);
  CHECK(v.winner == "a");
  CHECK(v.vote_share == 0.5);
  v = majority_at_k(std::vector<std::string>{"a"}, "a");
  CHECK(v.is_correct);
  CHECK(v.vote_share == 1.0);
  v = majority_at_k(std::vector<std::string>{"c", "b", "c", "b", "a"}, "b");
  CHECK(v.winner == "b");
  CHECK(v.is_correct);
  CHECK_CODE(majority_at_k(std::vector<std::string>{}, "a"), ErrorCode::kEmptyInput);
}

TEST_CASE("vote share is 1 exactly when unanimous") {
  CHECK(majority_at_k(std::vector<std::string>{"x", "x", "x"}, "").vote_share == 1.0);
  const double s = majority_at_k(std::vector<std::string>{"x", "x", "y"}, "").vote_share;
  CHECK(s > 0.0);
  CHECK(s < 1.0);
}

TEST_CASE("cluster diagnostics") {
  auto b = testutil::batch({1, 1, 0, 0}, {1, 2, 2, 3});
  auto d = cluster_diagnostics(b);
  CHECK(d.distinct_correct == 2);
  CHECK(d.distinct_incorrect == 2);
  d = cluster_diagnostics(testutil::batch({0, 0, 0}, {4, 4, 5}));
  CHECK(d.distinct_correct == 0);
  CHECK(d.distinct_incorrect == 2);
  d = cluster_diagnostics(testutil::batch({1, 0, 1}, {100, 100, 100}));
  CHECK(d.distinct_correct == 0);
  CHECK(d.distinct_incorrect == 0);
  CHECK_CODE(cluster_diagnostics(testutil::batch({1, 0})), ErrorCode::kMissingClusters);
}

TEST_CASE("branching profile") {
  const std::vector<std::string> three{"abc", "abd", "xyz"};
  CHECK(branching_profile(three).counts == std::vector<std::size_t>{2, 2, 3});
  const std::vector<std::string> same{"hello", "hello", "hello"};
  CHECK(branching_profile(same).counts == std::vector<std::size_t>(5, 1));
  const std::vector<std::string> firsts{"a", "b", "c", "d"};
  CHECK(branching_profile(firsts).counts == std::vector<std::size_t>{4});
  const std::vector<std::string> ragged{"ab", "abcd", "b"};
  CHECK(branching_profile(ragged).counts == std::vector<std::size_t>{2, 1, 1, 1});
  CHECK_CODE(branching_profile(std::vector<std::string>{}), ErrorCode::kEmptyInput);
  CHECK_CODE(branching_profile(std::vector<std::string>{"a", ""}), ErrorCode::kEmptyInput);
}

TEST_CASE("token-level branching") {
  const std::vector<std::vector<std::string>> seqs{{"let", "x", "=", "1"}, {"let", "x", "=", "2"},
                                                   {"try", "y"}};
  CHECK(branching_profile(seqs).counts == std::vector<std::size_t>{2, 2, 1, 2});
  CHECK(whitespace_tokens("  a\tb \n c ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("branch counts never exceed k and grow while all strings are active") {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::string> s(1 + rng.below(6));
    for (auto& x : s) {
      const auto len = 3 + rng.below(4);
      for (std::uint64_t i = 0; i < len; ++i) x.push_back(static_cast<char>('a' + rng.below(2)));
    }
    const auto counts = branching_profile(s).counts;
    std::size_t shortest = s[0].size();
    for (const auto& x : s) shortest = std::min(shortest, x.size());
    for (auto c : counts) CHECK(c <= s.size());
    for (std::size_t p = 1; p < shortest; ++p) CHECK(counts[p] >= counts[p - 1]);
  }
}

TEST_CASE("corpus evaluation") {
  const auto corpus = read_eval_corpus(corpus_path());
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].correct_answer == "11");
  CHECK(corpus[1].correct_answer.empty());
  const std::vector<std::size_t> ks{1, 2, 4};
  const auto rows = evaluate_corpus(corpus, ks);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].pass_at_k == doctest::Approx(0.375));
  CHECK(rows[0].majority_accuracy == doctest::Approx(0.5));
  CHECK(rows[0].vote_share == doctest::Approx(1.0));
  CHECK(rows[0].mean_branches == doctest::Approx(1.0));
  CHECK(rows[1].pass_at_k == doctest::Approx(2.0 / 3));
  CHECK(rows[1].majority_accuracy == doctest::Approx(0.5));
  CHECK(rows[1].vote_share == doctest::Approx(0.5));
  CHECK(rows[1].mean_branches == doctest::Approx(7.0 / 6));
  CHECK(rows[2].pass_at_k == doctest::Approx(1.0));
  CHECK(rows[2].majority_accuracy == doctest::Approx(0.5));
  CHECK(rows[2].vote_share == doctest::Approx(0.625));
  CHECK(rows[2].mean_branches == doctest::Approx(1.5));

  const auto csv = eval_rows_csv(rows);
  CHECK(csv.rfind("k,pass_at_k,majority_accuracy,vote_share,mean_branches\n1,0.375,0.5,1,1\n", 0) == 0);

  const std::vector<std::size_t> too_big{5};
  CHECK_CODE(evaluate_corpus(corpus, too_big), ErrorCode::kKExceedsN);
}

TEST_CASE("corpus errors") {
  CHECK_CODE(read_eval_corpus("/nonexistent/corpus.jsonl"), ErrorCode::kIoError);
  const auto dir = std::filesystem::temp_directory_path() / "polyrl_eval_test";
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const char* body) {
    const auto p = dir / name;
    std::ofstream(p) << body;
    return p.string();
  };
  CHECK_CODE(read_eval_corpus(write("bad.jsonl", "{not json\n")), ErrorCode::kMalformedJson);
  CHECK_CODE(read_eval_corpus(write("nogen.jsonl", "{\"prompt_id\": \"a\"}\n")),
             ErrorCode::kMalformedJson);
  CHECK_CODE(read_eval_corpus(write("empty.jsonl", "{\"generations\": []}\n")),
             ErrorCode::kEmptyInput);
  CHECK_CODE(read_eval_corpus(write("reward.jsonl",
                                    "{\"generations\": [{\"answer\": \"1\", \"reward\": 2}]}\n")),
             ErrorCode::kInvalidParams);
  CHECK(read_eval_corpus(write("blank.jsonl", "\n\n")).empty());
  std::filesystem::remove_all(dir);
}
