#include <gtest/gtest.h>

#include "laydef/eae.hpp"
#include "laydef/error.hpp"
#include "laydef/live_backend.hpp"
#include "laydef/prompts.hpp"
#include "support.hpp"

using namespace laydef;
using laydef::testing::slurp;
using laydef::testing::source_path;

namespace {

const char* kContext =
    "[ * * 11 - 22 * * ] EGD Grade I varices - ablated [ * * 11 - 22 * * ] sigmoidoscopy friability , reythema , "
    "congest and abnormal vasularity in a small 5 mm area of distal rectum .";
const char* kUmls = "An endoscopic procedure that visualizes the upper part of the gastrointestinal tract up to the "
                    "duodenum.";

DataPoint egd() {
  DataPoint dp;
  dp.id = "egd";
  dp.jargon = "EGD";
  dp.context = kContext;
  dp.general_definition = kUmls;
  dp.lay_definition = "A procedure that looks at the food pipe, stomach, and the first part of the small bowel.";
  return dp;
}

std::string golden(const std::string& name) { return slurp(source_path("tests/golden/" + name)); }

std::string render(TaskKind kind) {
  const auto p = build_prompt({kind, std::nullopt}, egd());
  EXPECT_FALSE(p.system.has_value());
  EXPECT_EQ(p.turns.size(), 1u);
  return p.final_user_content();
}

}  // namespace

TEST(Prompts, GoldenJ2L) { EXPECT_EQ(render(TaskKind::J2L), golden("j2l.txt")); }
TEST(Prompts, GoldenJC2L) { EXPECT_EQ(render(TaskKind::J_C2L), golden("j_c2l.txt")); }
TEST(Prompts, GoldenJG2L) { EXPECT_EQ(render(TaskKind::J_G2L), golden("j_g2l.txt")); }
TEST(Prompts, GoldenJCG2L) { EXPECT_EQ(render(TaskKind::J_C_G2L), golden("j_c_g2l.txt")); }

TEST(Prompts, GoldenOneShot) {
  EXPECT_EQ(render_one_shot_prompt({"[TERM]", "[DEFINITION]"}, "[TERM]"), golden("one_shot.txt"));
}

TEST(Prompts, GoldenReadability) {
  EXPECT_EQ(render_readability_prompt("[X]", "EGD", kUmls), golden("readability.txt"));
}

TEST(Prompts, ReadabilityTargetIsSubstituted) {
  const auto p = build_prompt(TaskSetting::readability(5), egd());
  EXPECT_NE(p.final_user_content().find("around target readability 5.\n"), std::string::npos);
  EXPECT_EQ(p.final_user_content().find("[X]"), std::string::npos);
}

TEST(Prompts, Compositionality) {
  const auto j2l = render(TaskKind::J2L);
  const auto jc = render(TaskKind::J_C2L);
  const auto jg = render(TaskKind::J_G2L);
  const auto jcg = render(TaskKind::J_C_G2L);
  EXPECT_EQ(j2l.find("context:"), std::string::npos);
  EXPECT_EQ(j2l.find("dictionary definition:"), std::string::npos);
  EXPECT_NE(jc.find(std::string("context: ") + kContext), std::string::npos);
  EXPECT_EQ(jc.find("dictionary definition:"), std::string::npos);
  EXPECT_NE(jg.find("dictionary definition: " + dictionary_block(kUmls)), std::string::npos);
  EXPECT_EQ(jg.find("context:"), std::string::npos);
  EXPECT_LT(jcg.find("context:"), jcg.find("dictionary definition:"));
  for (const auto* s : {&j2l, &jc, &jg, &jcg}) {
    EXPECT_TRUE(s->ends_with("\nlay definition:"));
    EXPECT_NE(s->find("\njargon term: EGD\n"), std::string::npos);
  }
}

TEST(Prompts, MissingFieldsNameTheField) {
  auto dp = egd();
  dp.context.reset();
  try {
    build_prompt({TaskKind::J_C2L, std::nullopt}, dp);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("context"), std::string::npos);
  }
  dp = egd();
  dp.general_definition.reset();
  for (auto kind : {TaskKind::J_G2L, TaskKind::J_C_G2L}) {
    try {
      build_prompt({kind, std::nullopt}, dp);
      FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
      EXPECT_NE(std::string(e.what()).find("general_definition"), std::string::npos);
    }
  }
  EXPECT_THROW(build_prompt(TaskSetting::readability(3), dp), PreconditionError);
  EXPECT_NO_THROW(build_prompt({TaskKind::J2L, std::nullopt}, dp));
  EXPECT_NO_THROW(build_prompt({TaskKind::one_shot, std::nullopt}, dp));
}

TEST(Prompts, SettingValidation) {
  EXPECT_THROW(build_prompt(TaskSetting::readability(0), egd()), ValidationError);
  EXPECT_THROW(build_prompt(TaskSetting::readability(13), egd()), ValidationError);
  EXPECT_THROW(build_prompt({TaskKind::readability, std::nullopt}, egd()), ValidationError);
  EXPECT_THROW(build_prompt({TaskKind::J2L, 3}, egd()), ValidationError);
}

TEST(Prompts, ParseTaskKind) {
  EXPECT_EQ(parse_task_kind("J+C+G2L"), TaskKind::J_C_G2L);
  EXPECT_EQ(parse_task_kind("J_G2L"), TaskKind::J_G2L);
  EXPECT_FALSE(parse_task_kind("J2X").has_value());
  EXPECT_EQ(label(TaskSetting::readability(7)), "readability@7");
}

TEST(Prompts, OneShotUsesDefaultExemplar) {
  const auto p = build_prompt({TaskKind::one_shot, std::nullopt}, egd()).final_user_content();
  const auto ex = default_one_shot_exemplar();
  EXPECT_NE(p.find("Example:\njargon term: " + ex.term + "\nlay definition: " + ex.definition), std::string::npos);
  EXPECT_TRUE(p.ends_with("jargon term: EGD\nlay definition:"));
}

TEST(Prompts, GoldenExaminer) {
  const auto p = examiner_prompt("nodule", "A small lump, swelling or collection of tissue.",
                                 "A growth or lump that may be cancerous or not.");
  ASSERT_EQ(p.turns.size(), 1u);
  EXPECT_EQ(p.final_user_content(), golden("examiner.txt"));
}

TEST(Prompts, GoldenAugmenter) {
  const auto body = nlohmann::json::parse(LiveChatBackend::request_body(augmenter_prompt("EGD"), {}, "m"));
  EXPECT_EQ(body["messages"], nlohmann::json::parse(golden("augmenter.json")));
}
