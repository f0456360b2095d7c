#include "helpers.hpp"

using namespace polyrl;

TEST_CASE("well-formed batch validates") {
  auto b = testutil::batch({1, 0, 1, 0, 1, 0, 1, 0}, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK_NOTHROW(validate_batch(b));
}

TEST_CASE("reward list shorter than generations") {
  auto b = testutil::batch({1, 0, 1, 0, 1, 0, 1, 0});
  b.rewards.pop_back();
  CHECK_CODE(validate_batch(b), ErrorCode::kLengthMismatch);
}

TEST_CASE("cluster list shorter than generations") {
  auto b = testutil::batch({1, 0, 1}, {1, 2, 3});
  b.clusters->pop_back();
  CHECK_CODE(validate_batch(b), ErrorCode::kLengthMismatch);
}

TEST_CASE("empty batch") {
  GenerationBatch b;
  CHECK_CODE(validate_batch(b), ErrorCode::kEmptyBatch);
}

TEST_CASE("cluster 100 is exactly the degenerate bucket") {
  for (int id : {0, 1, 2, 99, 100, 101, 1000}) {
    ClusterAssignment c(id);
    CHECK(c.is_degenerate() == (id == 100));
  }
  CHECK_CODE(ClusterAssignment(-1), ErrorCode::kInvalidParams);
}

TEST_CASE("rewards are real numbers in [0, 1]") {
  CHECK(RewardValue(0.25).value() == 0.25);
  CHECK_CODE(RewardValue(1.5), ErrorCode::kInvalidParams);
  CHECK_CODE(RewardValue(-0.1), ErrorCode::kInvalidParams);
}

TEST_CASE("missing clusters are reported") {
  auto b = testutil::batch({1, 0});
  CHECK_CODE(b.require_clusters(), ErrorCode::kMissingClusters);
}

TEST_CASE("hyperparameter defaults and validation") {
  HyperParams hp;
  CHECK(hp.rollouts == 8);
  CHECK(hp.set_size == 4);
  CHECK(hp.num_sets == 70);
  CHECK(hp.clip_low == doctest::Approx(0.20));
  CHECK(hp.clip_high == doctest::Approx(0.28));
  CHECK(hp.temperature == 1.0);
  CHECK_NOTHROW(validate_hyperparams(hp));

  auto bad = hp;
  bad.set_size = 8;
  CHECK_CODE(validate_hyperparams(bad), ErrorCode::kSetSizeTooLarge);
  bad = hp;
  bad.num_sets = 71;
  CHECK_CODE(validate_hyperparams(bad), ErrorCode::kKOutOfRange);
  bad = hp;
  bad.num_sets = 0;
  CHECK_NOTHROW(validate_hyperparams(bad));
  bad = hp;
  bad.clip_low = -0.1;
  CHECK_CODE(validate_hyperparams(bad), ErrorCode::kInvalidParams);
  bad = hp;
  bad.learning_rate = 0;
  CHECK_CODE(validate_hyperparams(bad), ErrorCode::kInvalidParams);
}

TEST_CASE("error names are stable") {
  CHECK(error_code_name(ErrorCode::kConfigInvalid) == "CONFIG_INVALID");
  CHECK(error_code_name(ErrorCode::kKExceedsN) == "K_EXCEEDS_N");
  CHECK(error_code_name(ErrorCode::kOk) == "OK");
}
