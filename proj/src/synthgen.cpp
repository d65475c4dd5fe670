#include "chainflow/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chainflow/error.hpp"
#include "chainflow/hash.hpp"
#include "chainflow/profile.hpp"
#include "json.hpp"
#include "random.hpp"

namespace chainflow {

namespace {

using nlohmann::json;

TemplateSpec tpl(std::vector<std::pair<std::string, int>> events, bool gift = false) {
  return TemplateSpec{std::move(events), gift};
}

std::vector<std::string> expand(const TemplateSpec& t, int scale, PatternKind kind) {
  std::vector<int> counts;
  int rounds = 0;
  for (const auto& [name, count] : t.events) {
    const bool scaled = count > 1 && kind != PatternKind::Mixed;
    counts.push_back(scaled ? count * scale : count);
    rounds = std::max(rounds, counts.back());
  }
  std::vector<std::string> names;
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      if (counts[i] > r) names.push_back(t.events[i].first);
    }
  }
  return names;
}

PatternKind template_kind(const TemplateSpec& t, int repeat_threshold) {
  std::vector<std::string> names;
  for (const auto& [name, count] : t.events) names.insert(names.end(), count, name);
  return match_pattern(names, repeat_threshold);
}

std::string template_uuid(const TemplateSpec& t, int scale, int repeat_threshold) {
  const auto kind = template_kind(t, repeat_threshold);
  const auto names = expand(t, scale, kind);
  return action_uuid(get_events(names, match_pattern(names, repeat_threshold), repeat_threshold));
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::InvalidSpec, msg); }

bool in_unit(double v) { return v >= 0 && v <= 1; }

std::string derive_address(const std::string& tag) {
  return "0x" + sha256_hex(tag).substr(0, 40);
}

std::vector<std::string> id_list(std::mt19937_64& rng, double rate, std::uint64_t& next) {
  std::vector<std::string> out;
  if (detail::uniform01(rng) >= rate) return out;
  const auto n = detail::between(rng, 1, 3);
  for (std::int64_t i = 0; i < n; ++i) out.push_back(std::to_string(next++));
  return out;
}

ArchetypeSpec from_json(const json& j) {
  ArchetypeSpec s;
  if (!j.is_object()) invalid("archetype must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "name") s.name = value.get<std::string>();
    else if (key == "label") s.label = value.get<std::string>();
    else if (key == "length") {
      if (!value.is_array() || value.size() != 2) invalid("length must be [min, max]");
      s.min_length = value[0].get<int>();
      s.max_length = value[1].get<int>();
    } else if (key == "nft_usage") s.nft_usage = value.get<double>();
    else if (key == "nft_concentration") s.nft_concentration = value.get<double>();
    else if (key == "asset_rate") s.asset_rate = value.get<double>();
    else if (key == "ticket_rate") s.ticket_rate = value.get<double>();
    else if (key == "pack_rate") s.pack_rate = value.get<double>();
    else if (key == "session_hours") s.session_hours = value.get<double>();
    else if (key == "max_scale") s.max_scale = value.get<int>();
    else if (key == "templates") {
      if (!value.is_array()) invalid("templates must be an array");
      for (const auto& t : value) {
        TemplateSpec ts;
        if (!t.is_object() || !t.contains("events")) invalid("template needs an events list");
        for (const auto& [tk, tv] : t.items()) {
          if (tk == "gift") ts.gift = tv.get<bool>();
          else if (tk != "events") invalid("unknown template key '" + tk + "'");
        }
        for (const auto& e : t.at("events")) {
          if (e.is_string()) {
            ts.events.emplace_back(e.get<std::string>(), 1);
          } else if (e.is_array() && e.size() == 2) {
            ts.events.emplace_back(e[0].get<std::string>(), e[1].get<int>());
          } else {
            invalid("event entries are \"name\" or [\"name\", count]");
          }
        }
        s.templates.push_back(std::move(ts));
      }
    } else {
      invalid("unknown archetype key '" + key + "'");
    }
  }
  return s;
}

}  // namespace

std::vector<ArchetypeSpec> default_archetypes() {
  std::vector<ArchetypeSpec> out;

  ArchetypeSpec active;
  active.name = "builders";
  active.label = "active";
  active.templates = {
      tpl({{"PlaceTile", 1}, {"Transfer", 1}}),
      tpl({{"Harvest", 2}, {"Reward", 2}}),
      tpl({{"Craft", 1}, {"Consume", 3}, {"Produce", 3}}),
      tpl({{"Upgrade", 1}, {"Pay", 1}, {"Burn", 3}}),
      tpl({{"Raid", 2}, {"Loot", 3}}),
      tpl({{"Deposit", 1}, {"Stake", 1}}),
      tpl({{"Withdraw", 1}, {"Unstake", 1}, {"Transfer", 1}}),
      tpl({{"Merge", 3}}),
      tpl({{"Scan", 1}}),
      tpl({{"Gift", 1}, {"Transfer", 1}}, true),
  };
  active.min_length = 15;
  active.max_length = 15;
  active.nft_usage = 0.5;
  active.nft_concentration = 0.0;
  active.asset_rate = 0.0;
  active.ticket_rate = 0.5;
  active.pack_rate = 0.55;
  active.session_hours = 240;
  active.max_scale = 3;
  out.push_back(active);

  ArchetypeSpec semi;
  semi.name = "missioners";
  semi.label = "semi-active";
  semi.templates = {
      tpl({{"EnterMission", 1}, {"Transfer", 1}}),
      tpl({{"OpenCrate", 1}, {"ItemDrop", 2}, {"Transfer", 2}}),
      tpl({{"Refuel", 2}}),
      tpl({{"Dock", 1}, {"Pay", 1}, {"Transfer", 4}}),
      tpl({{"ClaimReward", 1}}, true),
      tpl({{"Repair", 2}, {"Spend", 3}}),
  };
  semi.min_length = 7;
  semi.max_length = 7;
  semi.nft_usage = 0.68;
  semi.nft_concentration = 0.5;
  semi.asset_rate = 0.35;
  semi.ticket_rate = 0.0;
  semi.pack_rate = 0.79;
  semi.session_hours = 90;
  semi.max_scale = 3;
  out.push_back(semi);

  ArchetypeSpec dropout;
  dropout.name = "starters";
  dropout.label = "dropout";
  dropout.templates = {
      tpl({{"Register", 1}}),
      tpl({{"MintStarter", 1}, {"Transfer", 1}}),
      tpl({{"Tutorial", 2}, {"Reward", 2}}),
      tpl({{"Explore", 1}, {"Pay", 1}, {"Step", 3}}),
  };
  dropout.min_length = 4;
  dropout.max_length = 4;
  dropout.nft_usage = 0.55;
  dropout.nft_concentration = 0.5;
  dropout.asset_rate = 0.0;
  dropout.ticket_rate = 0.34;
  dropout.pack_rate = 0.89;
  dropout.session_hours = 48;
  dropout.max_scale = 1;
  out.push_back(dropout);

  ArchetypeSpec idle;
  idle.name = "stationkeepers";
  idle.label = "inactive-no-interest";
  idle.templates = {
      tpl({{"Login", 1}}),
      tpl({{"BuildStation", 1}, {"Transfer", 1}}),
      tpl({{"Collect", 1}, {"Resource", 3}}),
      tpl({{"CheckIn", 1}}),
      tpl({{"Trade", 2}, {"Fee", 1}, {"Settle", 3}}),
  };
  idle.min_length = 9;
  idle.max_length = 9;
  idle.nft_usage = 0.67;
  idle.nft_concentration = 1.0;
  idle.asset_rate = 0.06;
  idle.ticket_rate = 0.09;
  idle.pack_rate = 0.02;
  idle.session_hours = 70;
  idle.max_scale = 2;
  out.push_back(idle);

  ArchetypeSpec lottery;
  lottery.name = "ticketholders";
  lottery.label = "inactive-with-interest";
  lottery.templates = {
      tpl({{"BuyTicket", 1}, {"Transfer", 1}}),
      tpl({{"Draw", 1}, {"Pay", 1}, {"TicketIssued", 3}}),
      tpl({{"ClaimPrize", 1}}),
      tpl({{"EnterLottery", 2}}),
      tpl({{"ViewRound", 1}}),
  };
  lottery.min_length = 5;
  lottery.max_length = 5;
  lottery.nft_usage = 0.31;
  lottery.nft_concentration = 0.0;
  lottery.asset_rate = 0.72;
  lottery.ticket_rate = 0.95;
  lottery.pack_rate = 0.33;
  lottery.session_hours = 36;
  lottery.max_scale = 3;
  out.push_back(lottery);

  ArchetypeSpec brief;
  brief.name = "traders";
  brief.label = "brief-engager";
  brief.templates = {
      tpl({{"Approve", 1}}),
      tpl({{"ListItem", 1}, {"Escrow", 1}}),
      tpl({{"BuyItem", 1}, {"Transfer", 1}, {"Pay", 1}}),
      tpl({{"Bid", 2}, {"Escrow", 2}}),
      tpl({{"Cancel", 1}, {"Refund", 1}}),
  };
  brief.min_length = 7;
  brief.max_length = 7;
  brief.nft_usage = 0.38;
  brief.nft_concentration = 0.0;
  brief.asset_rate = 0.48;
  brief.ticket_rate = 0.02;
  brief.pack_rate = 0.25;
  brief.session_hours = 60;
  brief.max_scale = 3;
  out.push_back(brief);

  return out;
}

std::vector<ArchetypeSpec> load_archetypes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  if (!j.is_array()) invalid(path.string() + ": expected an array of archetypes");
  std::vector<ArchetypeSpec> out;
  try {
    for (const auto& a : j) out.push_back(from_json(a));
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return out;
}

void validate(const std::vector<ArchetypeSpec>& specs, const SynthConfig& config) {
  if (specs.empty()) invalid("no archetypes");
  if (config.users_per_archetype < 1) invalid("users per archetype must be >= 1");
  if (config.window_days < 1) invalid("window must span at least one day");
  if (config.contracts < 1 || config.recipients < 1) invalid("need at least one contract and recipient");
  if (!in_unit(config.token_reuse)) invalid("token reuse rate outside [0,1]");
  if (!(config.jitter >= 0 && config.jitter < 0.5)) invalid("timestamp jitter outside [0,0.5)");
  for (const auto& s : specs) {
    const std::string who = "archetype '" + s.name + "': ";
    if (s.name.empty()) invalid("archetype without a name");
    if (s.templates.empty()) invalid(who + "no templates");
    if (s.min_length < 1 || s.min_length > s.max_length) invalid(who + "bad length range");
    for (double r : {s.nft_usage, s.nft_concentration, s.asset_rate, s.ticket_rate, s.pack_rate}) {
      if (!in_unit(r)) invalid(who + "rate outside [0,1]");
    }
    if (s.max_scale < 1) invalid(who + "max_scale must be >= 1");
    if (!(s.session_hours >= 0) || s.session_hours * 1.25 * 3600 >= config.window_days * 86400.0) {
      invalid(who + "session does not fit the time window");
    }
    if (!s.label.empty()) parse_activity_label(s.label);
    std::set<std::string> uuids;
    for (const auto& t : s.templates) {
      if (t.events.empty()) invalid(who + "template without events");
      for (const auto& [name, count] : t.events) {
        if (name.empty() || count < 1) invalid(who + "event needs a name and a positive count");
      }
      const auto id = template_uuid(t, 1, config.repeat_threshold);
      if (template_uuid(t, s.max_scale, config.repeat_threshold) != id) {
        invalid(who + "template changes action under scaling");
      }
      if (!uuids.insert(id).second) invalid(who + "two templates produce the same action");
    }
  }
}

std::vector<std::size_t> token_templates(const ArchetypeSpec& spec) {
  const auto T = spec.templates.size();
  const auto u = static_cast<std::size_t>(std::lround(spec.nft_usage * static_cast<double>(T)));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < T; ++i) {
    if ((i + 1) * u / T > i * u / T) out.push_back(i);
  }
  return out;
}

std::vector<int> token_weights(const ArchetypeSpec& spec) {
  std::vector<int> w(spec.templates.size(), 0);
  const auto carriers = token_templates(spec);
  for (std::size_t r = 0; r < carriers.size(); ++r) {
    w[carriers[r]] = 1 + static_cast<int>(std::lround(
                             2.0 * std::pow(1.0 - spec.nft_concentration, static_cast<double>(r))));
  }
  return w;
}

ArchetypeTargets archetype_targets(const ArchetypeSpec& spec, double beta) {
  const auto w = token_weights(spec);
  std::vector<std::uint64_t> x(w.begin(), w.end());
  ArchetypeTargets t;
  t.rho = rho_from_counts(x);
  t.phi = phi_from_counts(x, beta).value;
  return t;
}

SynthDataset generate(const std::vector<ArchetypeSpec>& specs, const SynthConfig& config) {
  validate(specs, config);
  SynthDataset data;
  data.archetypes = specs;
  const std::string tag = std::to_string(config.seed);

  std::vector<std::string> contracts;
  for (int c = 0; c < config.contracts; ++c) {
    contracts.push_back(derive_address("contract|" + tag + "|" + std::to_string(c)));
  }

  std::uint64_t next_token = 1;
  std::uint64_t next_asset = 1'000'000;
  std::uint64_t next_ticket = 2'000'000;
  std::uint64_t next_pack = 3'000'000;
  const double window = config.window_days * 86400.0;

  for (std::size_t a = 0; a < specs.size(); ++a) {
    const auto& spec = specs[a];
    std::mt19937_64 rng(detail::mix_seed(config.seed, a));
    const auto weights = token_weights(spec);
    std::vector<PatternKind> kinds;
    for (const auto& t : spec.templates) kinds.push_back(template_kind(t, config.repeat_threshold));
    std::vector<std::string> recipients;
    for (int r = 0; r < config.recipients; ++r) {
      recipients.push_back(derive_address("recipient|" + tag + "|" + std::to_string(a) + "|" +
                                          std::to_string(r)));
    }

    for (int u = 0; u < config.users_per_archetype; ++u) {
      const std::string user_tag = tag + "|" + std::to_string(a) + "|" + std::to_string(u);
      const auto address = derive_address("user|" + user_tag);
      data.truth.push_back({address, static_cast<int>(a)});

      const auto length = static_cast<int>(detail::between(rng, spec.min_length, spec.max_length));
      const double span = spec.session_hours * 3600.0 * detail::uniform(rng, 0.75, 1.25);
      const double start = detail::uniform(rng, 0.0, window - span);
      std::vector<double> offsets{0.0};
      const double gap = length > 1 ? span / (length - 1) : 0.0;
      for (int s = 1; s + 1 < length; ++s) {
        offsets.push_back((s + detail::uniform(rng, -config.jitter, config.jitter)) * gap);
      }
      if (length > 1) offsets.push_back(span);

      std::vector<std::string> owned;
      std::int64_t last_ts = 0;
      for (int s = 0; s < length; ++s) {
        const auto ti = static_cast<std::size_t>(s) % spec.templates.size();
        const auto& t = spec.templates[ti];
        TxRecord tx;
        tx.tx_hash = "0x" + sha256_hex("tx|" + user_tag + "|" + std::to_string(s));
        tx.from_addr = address;
        tx.to_addr = contracts[ti % contracts.size()];
        tx.value = "0";
        tx.timestamp = config.window_start + static_cast<std::int64_t>(start + offsets[static_cast<std::size_t>(s)]);
        if (s > 0 && tx.timestamp <= last_ts) tx.timestamp = last_ts + 1;
        last_ts = tx.timestamp;

        const int scale = static_cast<int>(detail::between(rng, 1, spec.max_scale));
        const auto names = expand(t, scale, kinds[ti]);
        for (std::size_t e = 0; e < names.size(); ++e) {
          tx.events.push_back(EventRecord{tx.tx_hash, e, names[e], {}});
        }
        auto& head = tx.events.front().properties;
        std::vector<std::string> tokens;
        for (int k = 0; k < weights[ti]; ++k) {
          std::string id;
          if (!owned.empty() && detail::uniform01(rng) < config.token_reuse) {
            id = owned[detail::below(rng, owned.size())];
            if (std::find(tokens.begin(), tokens.end(), id) != tokens.end()) id.clear();
          }
          if (id.empty()) id = std::to_string(next_token++);
          tokens.push_back(id);
        }
        for (const auto& id : tokens) {
          head.push_back({"tokenId", id});
          if (std::find(owned.begin(), owned.end(), id) == owned.end()) owned.push_back(id);
        }
        for (const auto& id : id_list(rng, spec.asset_rate, next_asset)) head.push_back({"assetId", id});
        for (const auto& id : id_list(rng, spec.ticket_rate, next_ticket)) head.push_back({"ticketId", id});
        for (const auto& id : id_list(rng, spec.pack_rate, next_pack)) head.push_back({"packId", id});
        if (t.gift) {
          tx.events.back().properties.push_back(
              {"to", recipients[detail::below(rng, recipients.size())]});
        }
        data.transactions.push_back(std::move(tx));
      }
    }
  }

  auto& txs = data.transactions;
  std::sort(txs.begin(), txs.end(), [](const TxRecord& x, const TxRecord& y) {
    return std::tie(x.timestamp, x.tx_hash) < std::tie(y.timestamp, y.tx_hash);
  });
  for (std::size_t i = 0; i < txs.size(); ++i) {
    txs[i].block_number = 1 + static_cast<std::uint64_t>(txs[i].timestamp - config.window_start) / 2;
    txs[i].tx_index = i > 0 && txs[i - 1].block_number == txs[i].block_number ? txs[i - 1].tx_index + 1 : 0;
  }
  std::sort(data.truth.begin(), data.truth.end(),
            [](const TruthRow& x, const TruthRow& y) { return x.address < y.address; });
  return data;
}

void write_dataset(const std::filesystem::path& path, const std::vector<TxRecord>& txs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& tx : txs) out << format_tx_line(tx) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void write_truth(const std::filesystem::path& path, const SynthDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "address,archetype,name,label\n";
  for (const auto& row : data.truth) {
    const auto& spec = data.archetypes[static_cast<std::size_t>(row.archetype)];
    out << row.address << ',' << row.archetype << ',' << spec.name << ',' << spec.label << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<TruthRow> read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<TruthRow> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string address, archetype;
    std::getline(ss, address, ',');
    std::getline(ss, archetype, ',');
    try {
      out.push_back({address, std::stoi(archetype)});
    } catch (const std::exception&) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lineno) + ": bad archetype id");
    }
  }
  return out;
}

}  // namespace chainflow
