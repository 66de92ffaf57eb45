#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "selinf.h"

namespace {

struct SynthData {
  std::vector<double> x;  // column major n x p
  std::vector<double> y;
  int64_t n, p;
};

// Deterministic synthetic regression with two strong signals.
SynthData make_data(int64_t n, int64_t p, unsigned seed) {
  SynthData data;
  data.n = n;
  data.p = p;
  data.x.resize(static_cast<std::size_t>(n * p));
  data.y.assign(static_cast<std::size_t>(n), 0.0);
  unsigned state = seed;
  auto next = [&state]() {
    state = state * 1664525u + 1013904223u;
    return (state >> 8) / double(1 << 24) - 0.5;
  };
  for (int64_t j = 0; j < p; ++j)
    for (int64_t i = 0; i < n; ++i) data.x[static_cast<std::size_t>(j * n + i)] = 3.0 * next();
  for (int64_t i = 0; i < n; ++i) {
    data.y[static_cast<std::size_t>(i)] = 4.0 * data.x[static_cast<std::size_t>(i)] -
                                          3.0 * data.x[static_cast<std::size_t>(n + i)] +
                                          0.5 * next();
  }
  return data;
}

}  // namespace

TEST_CASE("infer round trip with defaults") {
  SynthData data = make_data(60, 6, 12345);
  selinf_infer_options opts;
  selinf_infer_options_init(&opts);
  opts.seed = 9;

  selinf_result* result = nullptr;
  const int status =
      selinf_infer(data.x.data(), data.n, data.p, data.y.data(), nullptr, &opts, &result);
  REQUIRE(status == SELINF_OK);
  const std::string json = selinf_result_json(result);
  CHECK(json.find("selinf-mle/1") != std::string::npos);
  CHECK(json.find("\"mle\"") != std::string::npos);
  CHECK(selinf_result_csv(result) == nullptr);
  selinf_result_free(result);

  // Same seed, same bytes.
  selinf_result* again = nullptr;
  REQUIRE(selinf_infer(data.x.data(), data.n, data.p, data.y.data(), nullptr, &opts, &again) ==
          SELINF_OK);
  CHECK(json == selinf_result_json(again));
  selinf_result_free(again);
}

TEST_CASE("infer maps domain failures to error codes") {
  SynthData data = make_data(40, 5, 777);
  selinf_infer_options opts;
  selinf_infer_options_init(&opts);

  opts.level = 1.5;
  selinf_result* result = nullptr;
  CHECK(selinf_infer(data.x.data(), data.n, data.p, data.y.data(), nullptr, &opts, &result) ==
        SELINF_ERR_INVALID);
  CHECK(std::strlen(selinf_last_error()) > 0);

  selinf_infer_options_init(&opts);
  opts.query = "unknown-query";
  CHECK(selinf_infer(data.x.data(), data.n, data.p, data.y.data(), nullptr, &opts, &result) ==
        SELINF_ERR_INVALID);

  // Gigantic fixed lambda: empty selection.
  selinf_infer_options_init(&opts);
  opts.lambda = "1e12";
  CHECK(selinf_infer(data.x.data(), data.n, data.p, data.y.data(), nullptr, &opts, &result) ==
        SELINF_ERR_EMPTY_SELECTION);

  CHECK(selinf_infer(nullptr, 10, 2, data.y.data(), nullptr, &opts, &result) ==
        SELINF_ERR_INVALID);
}

TEST_CASE("all query kinds produce reports") {
  SynthData data = make_data(120, 8, 2024);
  for (const char* query : {"lasso", "screening", "slope", "lasso2", "ms-slope"}) {
    selinf_infer_options opts;
    selinf_infer_options_init(&opts);
    opts.query = query;
    opts.seed = 31;
    selinf_result* result = nullptr;
    const int status =
        selinf_infer(data.x.data(), data.n, data.p, data.y.data(), nullptr, &opts, &result);
    if (status == SELINF_ERR_EMPTY_SELECTION) continue;  // legitimate outcome
    REQUIRE_MESSAGE(status == SELINF_OK, selinf_last_error());
    const std::string json = selinf_result_json(result);
    CHECK(json.find(std::string("\"query\": \"") + query) != std::string::npos);
    selinf_result_free(result);
  }
}

TEST_CASE("simulate returns json and csv") {
  const char* config =
      "{\"n\":60,\"p\":8,\"reps\":6,\"seed\":3,\"snr_grid\":[1.22],\"method\":\"lasso\"}";
  selinf_result* result = nullptr;
  REQUIRE_MESSAGE(selinf_simulate(config, &result) == SELINF_OK, selinf_last_error());
  const std::string json = selinf_result_json(result);
  const std::string csv = selinf_result_csv(result);
  CHECK(json.find("coverage_mle") != std::string::npos);
  CHECK(csv.rfind("snr,metric,method,target,value", 0) == 0);
  selinf_result_free(result);

  CHECK(selinf_simulate("{\"method\":\"nope\"}", &result) == SELINF_ERR_INVALID);
  CHECK(selinf_simulate("not json", &result) == SELINF_ERR_INVALID);
}

TEST_CASE("pivot check") {
  selinf_result* result = nullptr;
  REQUIRE(selinf_pivot_check(1.5, 0.0, 1.0, 2000, 5, &result) == SELINF_OK);
  const std::string json = selinf_result_json(result);
  CHECK(json.find("ks_statistic") != std::string::npos);
  const std::string csv = selinf_result_csv(result);
  CHECK(csv.rfind("pivot,ecdf", 0) == 0);
  selinf_result_free(result);

  CHECK(selinf_pivot_check(0.0, 0.0, 1.0, 0, 5, &result) == SELINF_ERR_INVALID);
  CHECK(selinf_pivot_check(0.0, 0.0, -1.0, 100, 5, &result) == SELINF_ERR_INVALID);
}

TEST_CASE("version string") { CHECK(std::strlen(selinf_version()) > 0); }
