#include <algorithm>
#include <map>
#include <random>

#include "chainflow/action.hpp"
#include "chainflow/error.hpp"
#include "chainflow/sequence.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace chainflow;
using fixtures::addr;
using fixtures::tx;

namespace {

std::vector<std::string> names(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

const ActionDef& def_with(const std::vector<ActionDef>& cat, const std::vector<std::string>& events) {
  const auto it = std::find_if(cat.begin(), cat.end(),
                               [&](const ActionDef& d) { return d.events == events; });
  REQUIRE(it != cat.end());
  return *it;
}

std::vector<const BehaviourEdge*> next_steps(const BehaviourGraph& bg, const std::string& a) {
  std::vector<const BehaviourEdge*> out;
  for (auto i : bg.edges_of(a)) {
    if (bg.edges[i].type == BEdgeType::NextStep) out.push_back(&bg.edges[i]);
  }
  std::sort(out.begin(), out.end(),
            [](const BehaviourEdge* x, const BehaviourEdge* y) { return x->order < y->order; });
  return out;
}

}  // namespace

TEST_CASE("sequences split into submitted and referenced entries") {
  const auto a = addr(1), b = addr(2), game = addr(9);
  const auto g = PropertyGraph::from_records({tx(1, 10, a, game, {{"Play", {}}}),
                                              tx(2, 20, b, game, {{"Send", {{"to", a}}}})});
  const auto s = sequences_for_address(g, a);
  REQUIRE(s.entries.size() == 2);
  CHECK(s.entries[0].origin == Origin::FromAddress);
  CHECK(s.entries[1].origin == Origin::PropertyMatch);
  CHECK(sequences_for_address(g, addr(77)).entries.empty());
}

TEST_CASE("same-timestamp entries are ordered by block and tx index") {
  const auto a = addr(1), game = addr(9);
  auto t1 = tx(1, 10, a, game, {{"First", {}}});
  auto t2 = tx(2, 10, a, game, {{"Second", {}}});
  auto t3 = tx(3, 10, a, game, {{"Third", {}}});
  t1.block_number = 5;
  t1.tx_index = 1;
  t2.block_number = 5;
  t2.tx_index = 0;
  t3.block_number = 4;
  const auto s = sequences_for_address(PropertyGraph::from_records({t1, t2, t3}), a);
  REQUIRE(s.entries.size() == 3);
  CHECK(s.entries[0].event_names == names({"Third"}));
  CHECK(s.entries[1].event_names == names({"Second"}));
  CHECK(s.entries[2].event_names == names({"First"}));
}

TEST_CASE("origins partition an address's entries") {
  const auto g = PropertyGraph::from_records(fixtures::three_address_records());
  for (const auto& a : distinct_addresses(g)) {
    const auto s = sequences_for_address(g, a);
    std::map<std::string, int> seen;
    for (const auto& e : s.entries) ++seen[e.tx_hash];
    for (const auto& [h, n] : seen) CHECK(n == 1);
  }
}

TEST_CASE("token usage once and many times") {
  const auto g = PropertyGraph::from_records(fixtures::three_address_records());
  const auto game = addr(0xd);
  const auto once = sequences_for_token(g, TokenKey{game, "2"});
  CHECK(once.entries.size() == 1);
  CHECK_FALSE(once.is_multiple);
  const auto many = sequences_for_token(g, TokenKey{game, "1"});
  CHECK(many.entries.size() == 2);
  CHECK(many.is_multiple);
  const auto none = sequences_for_token(g, TokenKey{game, "404"});
  CHECK(none.entries.empty());
  CHECK_FALSE(none.is_multiple);
  CHECK(all_token_keys(g).size() == 2);
}

TEST_CASE("token keying by id only merges contracts") {
  const auto g = PropertyGraph::from_records({tx(1, 10, addr(1), addr(8), {{"M", {{"tokenId", "5"}}}}),
                                              tx(2, 20, addr(1), addr(9), {{"M", {{"tokenId", "5"}}}})});
  CHECK(all_token_keys(g).size() == 2);
  SequenceConfig cfg;
  cfg.keying = TokenKeying::TokenIdOnly;
  REQUIRE(all_token_keys(g, cfg).size() == 1);
  CHECK(sequences_for_token(g, TokenKey{"", "5"}, cfg).is_multiple);
}

TEST_CASE("pattern fixtures") {
  CHECK(match_pattern(names({"A", "B", "C"})) == PatternKind::UniqueEvents);
  CHECK(match_pattern(names({"A", "A", "B", "B"})) == PatternKind::AllRepeatK);
  CHECK(match_pattern(names({"A", "A", "B", "B", "C"})) == PatternKind::AllRepeatKPlusBulk);
  CHECK(match_pattern(names({"A", "A", "A", "A", "B", "C"})) == PatternKind::OneRepeatsRestOnce);
  CHECK(match_pattern(names({"A", "A", "A", "B", "B", "C"})) == PatternKind::Mixed);
  CHECK_THROWS_AS(match_pattern({}), Error);
}

TEST_CASE("repeat threshold controls the one-repeats pattern") {
  const auto ev = names({"A", "A", "B"});
  CHECK(match_pattern(ev, 3) == PatternKind::AllRepeatKPlusBulk);
  const auto ev2 = names({"A", "A", "B", "C"});
  CHECK(match_pattern(ev2, 3) == PatternKind::Mixed);
  CHECK(match_pattern(ev2, 2) == PatternKind::OneRepeatsRestOnce);
}

TEST_CASE("event reduction") {
  CHECK(get_events(names({"A", "B", "A", "B"}), PatternKind::AllRepeatK) == names({"A", "B"}));
  CHECK(get_events(names({"A", "B", "A", "B", "C"}), PatternKind::AllRepeatKPlusBulk) ==
        names({"A", "B", "C"}));
  CHECK(get_events(names({"X"}), PatternKind::UniqueEvents) == names({"X"}));
  CHECK(get_events(names({"B", "A", "A", "A", "C"}), PatternKind::OneRepeatsRestOnce) ==
        names({"B", "A", "C"}));
  CHECK_THROWS_AS(get_events(names({"A", "B"}), PatternKind::AllRepeatK), Error);
}

TEST_CASE("action uuid is content derived") {
  const auto u = action_uuid(names({"A", "B"}));
  CHECK(u == action_uuid(names({"A", "B"})));
  CHECK(u != action_uuid(names({"B", "A"})));
  CHECK(u.size() == 36);
  CHECK(u[8] == '-');
  CHECK(u[13] == '-');
}

TEST_CASE("two identical transactions give one action and a chained step pair") {
  const auto a = addr(1), game = addr(9);
  const auto g = PropertyGraph::from_records(
      {tx(1, 10, a, game, {{"Mint", {}}}), tx(2, 20, a, game, {{"Mint", {}}})});
  const auto r = form_actions(g, ActionType::Primary, {a});
  REQUIRE(r.catalogue.size() == 1);
  REQUIRE(r.steps.size() == 2);
  CHECK(r.steps[0].order == 0);
  CHECK_FALSE(r.steps[0].prev_uuid.has_value());
  CHECK(r.steps[1].order == 1);
  CHECK(r.steps[1].prev_uuid == r.steps[0].uuid);
  CHECK(r.catalogue[0].stats.total_count == 2);
}

TEST_CASE("no addresses gives nothing") {
  const auto g = PropertyGraph::from_records(fixtures::three_address_records());
  const auto r = form_actions(g, ActionType::Primary, {});
  CHECK(r.catalogue.empty());
  CHECK(r.steps.empty());
}

TEST_CASE("events reached from both origins become a Both action") {
  const auto a = addr(1), b = addr(2), game = addr(9);
  const auto g = PropertyGraph::from_records({tx(1, 10, a, game, {{"Gift", {{"to", b}}}})});
  ActionCatalogue cat;
  form_actions(g, ActionType::Primary, {a, b}, {}, cat);
  form_actions(g, ActionType::Secondary, {a, b}, {}, cat);
  const auto defs = cat.definitions();
  REQUIRE(defs.size() == 1);
  CHECK(defs[0].type == ActionType::Both);
}

TEST_CASE("behaviour graph of the three-address fixture") {
  const auto g = PropertyGraph::from_records(fixtures::three_address_records());
  const auto bg = form_behaviour(g);
  const auto a = addr(0xa), b = addr(0xb), c = addr(0xc);
  CHECK(bg.users == std::vector<std::string>{a, b, c});
  REQUIRE(bg.actions.size() == 4);
  CHECK(def_with(bg.actions, names({"Mint", "Transfer"})).type == ActionType::Primary);
  CHECK(def_with(bg.actions, names({"Stake"})).type == ActionType::Primary);
  CHECK(def_with(bg.actions, names({"Gift"})).type == ActionType::Both);
  CHECK(def_with(bg.actions, names({"Claim", "Reward"})).type == ActionType::Primary);

  const auto gift = action_uuid(names({"Gift"}));
  const auto mint = action_uuid(names({"Mint", "Transfer"}));
  const auto sa = next_steps(bg, a);
  REQUIRE(sa.size() == 3);
  CHECK(sa[0]->src == NodeRef{BNodeType::User, a});
  CHECK(sa[0]->dst.key == mint);
  CHECK(sa[1]->src.key == mint);
  CHECK(sa[1]->dst.key == mint);
  CHECK(sa[2]->src.key == mint);
  CHECK(sa[2]->dst.key == gift);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i]->order == i);

  REQUIRE(bg.nfts.size() == 2);
  CHECK(bg.nfts[0].is_multiple);
  CHECK_FALSE(bg.nfts[1].is_multiple);
  const auto used = std::count_if(bg.edges.begin(), bg.edges.end(),
                                  [](const BehaviourEdge& e) { return e.type == BEdgeType::UsedBy; });
  CHECK(used == 3);
}

TEST_CASE("token used twice on the same action gives two USED_BY edges") {
  const auto a = addr(1), game = addr(9);
  const auto g = PropertyGraph::from_records({tx(1, 10, a, game, {{"Equip", {{"tokenId", "3"}}}}),
                                              tx(2, 20, a, game, {{"Equip", {{"tokenId", "3"}}}})});
  const auto bg = form_behaviour(g);
  std::vector<std::uint32_t> orders;
  for (const auto& e : bg.edges) {
    if (e.type == BEdgeType::UsedBy) orders.push_back(e.order);
  }
  REQUIRE(orders.size() == 2);
  CHECK(orders[0] != orders[1]);
}

TEST_CASE("no token steps give no NFT nodes") {
  const auto a = addr(1), game = addr(9);
  const auto g = PropertyGraph::from_records({tx(1, 10, a, game, {{"Walk", {}}}),
                                              tx(2, 20, a, game, {{"Run", {}}}),
                                              tx(3, 30, a, game, {{"Jump", {}}})});
  const auto bg = form_behaviour(g);
  CHECK(bg.nfts.empty());
  CHECK(bg.users.size() == 1);
  CHECK(bg.actions.size() == 3);
  CHECK(next_steps(bg, a).size() == 3);
}

TEST_CASE("dangling uuid is rejected") {
  ActionStep s;
  s.uuid = "missing";
  s.address = addr(1);
  CHECK_THROWS_AS(build_behaviour_graph({}, {s}, {}), Error);
}

TEST_CASE("step chains and stats recomputation on random data") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pool{"A", "B", "C", "D"};
  std::vector<TxRecord> txs;
  for (std::uint64_t i = 0; i < 120; ++i) {
    const auto from = addr(1 + rng() % 6);
    std::vector<fixtures::Ev> evs;
    const auto n = 1 + rng() % 4;
    for (std::uint64_t e = 0; e < n; ++e) {
      fixtures::Ev ev{pool[rng() % pool.size()], {}};
      if (rng() % 3 == 0) ev.props.push_back({"tokenId", std::to_string(rng() % 10)});
      if (rng() % 4 == 0) ev.props.push_back({"assetId", std::to_string(rng() % 50)});
      if (rng() % 5 == 0) ev.props.push_back({"to", addr(1 + rng() % 6)});
      evs.push_back(ev);
    }
    auto t = tx(i + 1, static_cast<std::int64_t>(1000 + i * 7), from, addr(99), {});
    std::uint64_t log = 0;
    for (const auto& ev : evs) {
      EventRecord r{t.tx_hash, log++, ev.name, {}};
      for (const auto& [k, v] : ev.props) r.properties.push_back({k, v});
      t.events.push_back(r);
    }
    txs.push_back(t);
  }
  const auto g = PropertyGraph::from_records(txs);
  const auto addresses = distinct_addresses(g);
  ActionCatalogue cat;
  auto primary = form_actions(g, ActionType::Primary, addresses, {}, cat);
  auto secondary = form_actions(g, ActionType::Secondary, addresses, {}, cat);
  auto all = primary;
  all.insert(all.end(), secondary.begin(), secondary.end());
  for (const auto& d : cat.definitions()) {
    CHECK(stats_from_steps(d.uuid, all) == d.stats);
    CHECK(d.stats.min_call <= d.stats.mean_call);
    CHECK(d.stats.mean_call <= d.stats.max_call);
    CHECK(d.stats.min_timestamp <= d.stats.max_timestamp);
  }

  const auto merged = merge_address_steps(primary, secondary);
  std::map<std::string, std::vector<ActionStep>> by;
  for (const auto& s : merged) by[s.address].push_back(s);
  for (auto& [a, steps] : by) {
    std::sort(steps.begin(), steps.end(),
              [](const ActionStep& x, const ActionStep& y) { return x.order < y.order; });
    for (std::size_t i = 0; i < steps.size(); ++i) {
      CHECK(steps[i].order == i);
      if (i == 0) {
        CHECK_FALSE(steps[i].prev_uuid.has_value());
      } else {
        CHECK(steps[i].prev_uuid == steps[i - 1].uuid);
      }
    }
  }

  auto reversed = addresses;
  std::reverse(reversed.begin(), reversed.end());
  ActionCatalogue cat2;
  form_actions(g, ActionType::Secondary, reversed, {}, cat2);
  form_actions(g, ActionType::Primary, reversed, {}, cat2);
  CHECK(cat2.definitions() == cat.definitions());
}

TEST_CASE("behaviour graph save and load round trip") {
  const auto bg = form_behaviour(PropertyGraph::from_records(fixtures::three_address_records()));
  const auto dir = fixtures::temp_dir("bgraph_rt");
  save_behaviour(bg, dir);
  CHECK(load_behaviour(dir) == bg);
}
