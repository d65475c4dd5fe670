#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chainflow/error.hpp"
#include "chainflow/profile.hpp"
#include "chainflow/synthgen.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace chainflow;

namespace {

ArchetypeSpec four_step() {
  ArchetypeSpec s;
  s.name = "walker";
  s.templates = {{{{"Mint", 1}, {"Transfer", 1}}}, {{{"Stake", 1}}}, {{{"Claim", 3}}}, {{{"Gift", 1}}, true}};
  s.min_length = s.max_length = 4;
  s.nft_usage = 0.5;
  s.session_hours = 10;
  return s;
}

ErrorKind kind_of(const std::vector<ArchetypeSpec>& specs, const SynthConfig& cfg) {
  try {
    validate(specs, cfg);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("one user of length four yields a four-step flow") {
  SynthConfig cfg;
  cfg.users_per_archetype = 1;
  const auto data = generate({four_step()}, cfg);
  REQUIRE(data.truth.size() == 1);
  const auto bg = form_behaviour(PropertyGraph::from_records(data.transactions));
  const auto f = extract_flow(bg, data.truth[0].address, true);
  CHECK(f.step_count() == 4);
  CHECK(eligible_users(bg) == std::vector<std::string>{data.truth[0].address});
}

TEST_CASE("same seed gives byte-identical output, another seed differs") {
  const auto dir = fixtures::temp_dir("synth_det");
  SynthConfig cfg;
  cfg.users_per_archetype = 3;
  cfg.seed = 5;
  write_dataset(dir / "a.jsonl", generate(default_archetypes(), cfg).transactions);
  write_dataset(dir / "b.jsonl", generate(default_archetypes(), cfg).transactions);
  cfg.seed = 6;
  write_dataset(dir / "c.jsonl", generate(default_archetypes(), cfg).transactions);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));
}

TEST_CASE("invalid archetype specs") {
  const SynthConfig ok;
  CHECK(kind_of({}, ok) == ErrorKind::InvalidSpec);
  auto s = four_step();
  s.nft_usage = 1.5;
  CHECK(kind_of({s}, ok) == ErrorKind::InvalidSpec);
  s = four_step();
  s.min_length = 5;
  CHECK(kind_of({s}, ok) == ErrorKind::InvalidSpec);
  s = four_step();
  s.templates.push_back(s.templates[1]);
  CHECK(kind_of({s}, ok) == ErrorKind::InvalidSpec);
  s = four_step();
  s.templates.clear();
  CHECK(kind_of({s}, ok) == ErrorKind::InvalidSpec);
  SynthConfig bad;
  bad.users_per_archetype = 0;
  CHECK(kind_of({four_step()}, bad) == ErrorKind::InvalidSpec);
  CHECK(kind_of({four_step()}, ok) == ErrorKind::Internal);
}

TEST_CASE("archetype json and truth round trip") {
  const auto dir = fixtures::temp_dir("synth_json");
  fixtures::write_lines(dir / "spec.json",
                        {R"([{"name": "w", "label": "dropout", "length": [4, 6], "nft_usage": 0.5,)",
                         R"("templates": [{"events": ["Mint", "Transfer"]}, {"events": [["Claim", 2]]},)",
                         R"({"events": ["Stake"]}, {"events": ["Gift"], "gift": true}]}])"});
  const auto specs = load_archetypes(dir / "spec.json");
  REQUIRE(specs.size() == 1);
  CHECK(specs[0].min_length == 4);
  CHECK(specs[0].max_length == 6);
  CHECK(specs[0].templates[3].gift);
  fixtures::write_lines(dir / "bad.json", {R"([{"name": "w", "colour": 1}])"});
  CHECK_THROWS_AS(load_archetypes(dir / "bad.json"), Error);

  SynthConfig cfg;
  cfg.users_per_archetype = 4;
  const auto data = generate(specs, cfg);
  write_truth(dir / "truth.csv", data);
  const auto back = read_truth(dir / "truth.csv");
  REQUIRE(back.size() == data.truth.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].address == data.truth[i].address);
    CHECK(back[i].archetype == data.truth[i].archetype);
  }
}

TEST_CASE("default archetypes: every user eligible and planted statistics recovered") {
  SynthConfig cfg;
  cfg.seed = 11;
  const auto specs = default_archetypes();
  REQUIRE(specs.size() == 6);
  const auto data = generate(specs, cfg);
  const auto bg = form_behaviour(PropertyGraph::from_records(data.transactions));
  const auto users = eligible_users(bg);
  CHECK(users.size() == 180);

  std::map<std::string, int> truth;
  for (const auto& r : data.truth) truth[r.address] = r.archetype;
  std::vector<int> labels;
  for (const auto& u : users) labels.push_back(truth.at(u));
  const auto ps = profile_clusters(bg, users, labels);
  REQUIRE(ps.size() == 6);
  std::set<ActivityLabel> seen;
  for (const auto& p : ps) {
    const auto& spec = specs[static_cast<std::size_t>(p.cluster_id)];
    const auto target = archetype_targets(spec);
    CAPTURE(spec.name);
    CHECK(p.user_count == 30);
    CHECK(std::abs(p.rho - target.rho) <= 0.1 + 1e-12);
    CHECK(p.phi.value == target.phi);
    CHECK(p.label == parse_activity_label(spec.label));
    seen.insert(p.label);
  }
  CHECK(seen.size() == 6);
}
