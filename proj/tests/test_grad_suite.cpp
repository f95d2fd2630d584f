#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>

#include "vdr/grad_suite.hpp"

using namespace vdr;

TEST_CASE("every probe in the gradient suite passes") {
  auto entries = run_grad_suite();
  REQUIRE(!entries.empty());

  std::set<std::string> names;
  for (const auto& e : entries) {
    CAPTURE(e.name);
    CAPTURE(e.worst);
    CHECK(e.pass);
    CHECK(e.value < e.tol);
    names.insert(e.name);
  }

  for (const char* expected :
       {"lstm_step", "gru_step", "run_rnn(lstm,2-layer)", "run_rnn(gru,bidir)", "attend_objects",
        "lf_encode", "mn_encode", "score_dot", "score_gated", "score_gated_scalar",
        "round_loss(lf_rcnn)", "round_loss(mn_rcnn)", "round_loss(mn_rcnn_wt)",
        "round_loss(lf_rcnn) shift-zero", "round_loss(mn_rcnn) shift-zero",
        "round_loss(mn_rcnn_wt) shift-zero"}) {
    CAPTURE(expected);
    CHECK(names.count(expected) == 1);
  }

  // End-to-end probes must sweep a non-trivial number of scalars.
  for (const auto& e : entries) {
    if (e.name.rfind("round_loss", 0) == 0 && e.name.find("shift") == std::string::npos) {
      CHECK(e.n_checked > 100);
    }
  }

  std::string table = format_grad_suite(entries);
  CHECK(table.find("lstm_step") != std::string::npos);
  CHECK(table.find("FAIL") == std::string::npos);
  CHECK(table.find("0 failed") != std::string::npos);
  CHECK(all_pass(entries));
}
